#pragma once

#include "ignis/error.hpp"
#include "ignis/family.hpp"
#include "ignis/features.hpp"
#include "ignis/net.hpp"
#include "ignis/random.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ignis {

struct BootstrapConfig {
    int replicates = 200;
    std::uint64_t seed = 0;
};

struct BootstrapResult {
    double theta_hat;
    double se;
    std::vector<double> replicates;
};

inline constexpr int kMaxResampleRetries = 10;

/// n pairs drawn with replacement; (uᵢ, vᵢ) always travel together.
template <class Rng>
PseudoObservations bootstrap_resample(std::span<const double> u, std::span<const double> v,
                                      Rng& rng) {
    if (u.size() != v.size()) {
        throw LengthMismatch("bootstrap_resample: length mismatch");
    }
    const std::size_t n = u.size();
    PseudoObservations out;
    out.u.resize(n);
    out.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(rng.below(n));
        out.u[i] = u[j];
        out.v[i] = v[j];
    }
    return out;
}

/// Sample standard deviation (denominator m − 1).
inline double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Pair bootstrap around an arbitrary estimator.
///
/// `make_rng(b, attempt)` yields the stream for replicate b; a replicate whose
/// features are undefined (DegenerateInput) is redrawn with the next attempt,
/// at most kMaxResampleRetries times.
template <class Estimator, class RngFactory>
BootstrapResult bootstrap_with(std::span<const double> u, std::span<const double> v,
                               const Estimator& estimate, int replicates,
                               const RngFactory& make_rng) {
    if (replicates < 2) {
        throw DomainError("bootstrap: need at least 2 replicates");
    }
    if (u.size() != v.size()) {
        throw LengthMismatch("bootstrap: length mismatch");
    }
    if (u.size() < 10) {
        throw TooFewObservations("bootstrap: need at least 10 observations");
    }
    BootstrapResult r{estimate(u, v), 0.0, {}};
    r.replicates.reserve(static_cast<std::size_t>(replicates));
    for (int b = 0; b < replicates; ++b) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > kMaxResampleRetries) {
                throw DegenerateResample("bootstrap: replicate " + std::to_string(b) +
                                         " degenerate after " +
                                         std::to_string(kMaxResampleRetries) + " retries");
            }
            auto rng = make_rng(static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(attempt));
            const auto res = bootstrap_resample(u, v, rng);
            try {
                r.replicates.push_back(estimate(std::span<const double>(res.u),
                                                std::span<const double>(res.v)));
                break;
            } catch (const DegenerateInput&) {
            }
        }
    }
    r.se = sample_sd(r.replicates);
    return r;
}

/// IGNIS estimate on the data and the SD of B bootstrap re-estimates.
inline BootstrapResult bootstrap_se(std::span<const double> u, std::span<const double> v,
                                    CopulaFamily family, const IgnisModel& model,
                                    const BootstrapConfig& cfg) {
    const RandomSource root(cfg.seed);
    return bootstrap_with(
        u, v,
        [&](std::span<const double> a, std::span<const double> b) {
            return predict(model, a, b, family);
        },
        cfg.replicates,
        [&root](std::uint64_t b, std::uint64_t attempt) { return root.split({b, attempt}); });
}

} // namespace ignis
