#pragma once

#include "ignis/error.hpp"
#include "ignis/family.hpp"
#include "ignis/random.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace ignis {

/// Sampled coordinates are clamped to [kUnitEps, 1 − kUnitEps].
inline constexpr double kUnitEps = 1e-12;

struct UnitPair {
    double u;
    double v;
};

/// n draws from one copula. Stored column-wise because every consumer
/// (feature extraction, export) walks the coordinates separately.
struct SampleSet {
    std::vector<double> u;
    std::vector<double> v;
    CopulaFamily family;
    double theta;
    std::uint64_t seed;

    [[nodiscard]] std::size_t size() const noexcept { return u.size(); }
    [[nodiscard]] UnitPair pair(std::size_t i) const { return {u[i], v[i]}; }
};

/// One Archimedean copula: a family with a validated parameter.
///
/// Generators follow the usual forms for Clayton, Gumbel and Frank, and
///   A1: φ(t) = (t^{1/θ} + t^{−1/θ} − 2)^θ
///   A2: φ(t) = ((1 − t)²/t)^θ
/// for θ ≥ 1. The ratio φ/φ′ is always evaluated in closed form, which
/// keeps K(t) = t − φ(t)/φ′(t) well conditioned as t → 1.
class Archimedean {
public:
    Archimedean(CopulaFamily family, double theta) : family_(family), theta_(theta) {
        require_theta(family, theta);
    }

    [[nodiscard]] CopulaFamily family() const noexcept { return family_; }
    [[nodiscard]] double theta() const noexcept { return theta_; }

    /// φ(t) for t ∈ (0, 1].
    [[nodiscard]] double generator(double t) const {
        if (!(t > 0.0 && t <= 1.0)) {
            throw DomainError("generator: t must lie in (0,1], got " + std::to_string(t));
        }
        const double th = theta_;
        switch (family_) {
        case CopulaFamily::Clayton:
            return std::expm1(-th * std::log(t)) / th;
        case CopulaFamily::Gumbel:
            return std::pow(-std::log(t), th);
        case CopulaFamily::Frank:
            return frank_phi(t);
        case CopulaFamily::A1: {
            const double xm1 = std::expm1(std::log(t) / th);
            const double g = xm1 * xm1 / (1.0 + xm1);
            return std::pow(g, th);
        }
        case CopulaFamily::A2: {
            const double g = (1.0 - t) * (1.0 - t) / t;
            return std::pow(g, th);
        }
        }
        return 0.0;
    }

    /// φ⁻¹(s) for s ≥ 0; φ⁻¹(0) = 1.
    [[nodiscard]] double inv_generator(double s) const {
        if (!(s >= 0.0)) {
            throw DomainError("inv_generator: s must be non-negative, got " + std::to_string(s));
        }
        if (s == 0.0) {
            return 1.0;
        }
        const double th = theta_;
        switch (family_) {
        case CopulaFamily::Clayton:
            return std::exp(-std::log1p(th * s) / th);
        case CopulaFamily::Gumbel:
            return std::exp(-std::pow(s, 1.0 / th));
        case CopulaFamily::Frank:
            return -std::log1p(std::exp(-s) * std::expm1(-th)) / th;
        case CopulaFamily::A1:
            return std::exp(th * log_quadratic_root(std::pow(s, 1.0 / th)));
        case CopulaFamily::A2:
            return std::exp(log_quadratic_root(std::pow(s, 1.0 / th)));
        }
        return 1.0;
    }

    /// φ(t)/φ′(t) for t ∈ (0, 1); non-positive.
    [[nodiscard]] double gen_ratio(double t) const {
        if (!(t > 0.0 && t < 1.0)) {
            throw DomainError("gen_ratio: t must lie in (0,1), got " + std::to_string(t));
        }
        return ratio_unchecked(t);
    }

    /// Kendall distribution function K(t) = t − φ(t)/φ′(t).
    [[nodiscard]] double kendall_K(double t) const { return t - gen_ratio(t); }

    /// Generalised inverse of K by bisection on [kUnitEps, 1 − kUnitEps].
    [[nodiscard]] double inv_K(double p) const {
        if (!(p > 0.0 && p < 1.0)) {
            throw DomainError("inv_K: p must lie in (0,1), got " + std::to_string(p));
        }
        double lo = kUnitEps;
        double hi = 1.0 - kUnitEps;
        const double k_lo = lo - ratio_unchecked(lo);
        const double k_hi = hi - ratio_unchecked(hi);
        if (!std::isfinite(k_lo) || !std::isfinite(k_hi) || k_lo > k_hi) {
            throw ConvergenceError("inv_K: K is not monotone on the bracket (" +
                                   std::string(family_name(family_)) + ")");
        }
        if (p <= k_lo) {
            return lo;
        }
        if (p >= k_hi) {
            return hi;
        }
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double k = mid - ratio_unchecked(mid);
            if (!std::isfinite(k)) {
                throw ConvergenceError("inv_K: non-finite K at t=" + std::to_string(mid));
            }
            if (std::abs(k - p) <= 1e-10) {
                return mid;
            }
            if (k < p) {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo <= 1e-16) {
                break;
            }
        }
        return 0.5 * (lo + hi);
    }

    /// One draw via the conditional algorithm:
    /// s, t ~ U(0,1); w = K⁻¹(t); u = φ⁻¹(s φ(w)), v = φ⁻¹((1 − s) φ(w)).
    template <class Rng>
    UnitPair sample_pair(Rng& rng) const {
        const double s = rng.uniform();
        const double t = rng.uniform();
        const double w = inv_K(t);
        const double phi_w = generator(w);
        return {clamp_unit(inv_generator(s * phi_w)), clamp_unit(inv_generator((1.0 - s) * phi_w))};
    }

    static double clamp_unit(double x) noexcept {
        if (!(x >= kUnitEps)) {
            return kUnitEps;
        }
        return x > 1.0 - kUnitEps ? 1.0 - kUnitEps : x;
    }

private:
    double ratio_unchecked(double t) const {
        const double th = theta_;
        switch (family_) {
        case CopulaFamily::Clayton:
            return t * std::expm1(th * std::log(t)) / th;
        case CopulaFamily::Gumbel:
            return t * std::log(t) / th;
        case CopulaFamily::Frank:
            return -frank_phi(t) * std::expm1(th * t) / th;
        case CopulaFamily::A1: {
            const double xm1 = std::expm1(std::log(t) / th);
            return t * xm1 / (2.0 + xm1);
        }
        case CopulaFamily::A2:
            return t * (t - 1.0) / (th * (t + 1.0));
        }
        return 0.0;
    }

    // −log[(e^{−θt} − 1)/(e^{−θ} − 1)]. The ratio is taken directly when it is
    // small and through log1p of its distance from 1 otherwise.
    double frank_phi(double t) const {
        const double th = theta_;
        const double denom = std::expm1(-th);
        const double ratio = std::expm1(-th * t) / denom;
        if (ratio < 0.5) {
            return -std::log(ratio);
        }
        const double diff = -std::exp(-th * t) * std::expm1(-th * (1.0 - t));
        return -std::log1p(diff / denom);
    }

    // log of the root in (0,1] of x² − (a + 2)x + 1 = 0, i.e. of
    // x = (a + 2 − √((a + 2)² − 4))/2. Inverts x + 1/x − 2 = a.
    static double log_quadratic_root(double a) {
        const double r = std::sqrt(a * (a + 4.0));
        const double denom = a + 2.0 + r;
        const double one_minus_x = (a + r) / denom;
        return one_minus_x < 0.5 ? std::log1p(-one_minus_x) : std::log(2.0 / denom);
    }

    CopulaFamily family_;
    double theta_;
};

inline double generator(CopulaFamily f, double theta, double t) {
    return Archimedean(f, theta).generator(t);
}

inline double inv_generator(CopulaFamily f, double theta, double s) {
    return Archimedean(f, theta).inv_generator(s);
}

inline double gen_ratio(CopulaFamily f, double theta, double t) {
    return Archimedean(f, theta).gen_ratio(t);
}

inline double kendall_K(CopulaFamily f, double theta, double t) {
    return Archimedean(f, theta).kendall_K(t);
}

inline double inv_K(CopulaFamily f, double theta, double p) {
    return Archimedean(f, theta).inv_K(p);
}

template <class Rng>
UnitPair sample_pair(CopulaFamily f, double theta, Rng& rng) {
    return Archimedean(f, theta).sample_pair(rng);
}

/// n pairs drawn from a single stream seeded by `seed`.
inline SampleSet sample_n(CopulaFamily f, double theta, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw DomainError("sample_n: n must be at least 1");
    }
    const Archimedean cop(f, theta);
    RandomSource rng(seed);
    SampleSet out{{}, {}, f, theta, seed};
    out.u.reserve(n);
    out.v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = cop.sample_pair(rng);
        out.u.push_back(p.u);
        out.v.push_back(p.v);
    }
    return out;
}

/// Writes `u,v` CSV with 17 significant digits.
inline void write_sample_csv(const SampleSet& s, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (fp == nullptr) {
        throw IoError("cannot open " + path + " for writing");
    }
    std::fputs("u,v\n", fp);
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::fprintf(fp, "%.17g,%.17g\n", s.u[i], s.v[i]);
    }
    if (std::fclose(fp) != 0) {
        throw IoError("error writing " + path);
    }
}

} // namespace ignis
