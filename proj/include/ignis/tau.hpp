#pragma once

#include "ignis/copula.hpp"
#include "ignis/error.hpp"
#include "ignis/family.hpp"
#include "ignis/features.hpp"
#include "ignis/special.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ignis {

/// Closed-form Kendall's τ.
///
///   Clayton  θ/(θ + 2)
///   Gumbel   1 − 1/θ
///   Frank    1 − (4/θ)(1 − D₁(θ))
///   A1       3 − 4θ[ψ(θ + ½) − ψ(θ)]
///   A2       1 − (6 − 8 ln 2)/θ
///
/// The A1 expression is the one that agrees with 1 + 4∫φ/φ′ using the
/// closed-form ratio t(t^{1/θ} − 1)/(1 + t^{1/θ}); see tau_quadrature.
inline double theoretical_tau(CopulaFamily f, double theta) {
    require_theta(f, theta);
    switch (f) {
    case CopulaFamily::Clayton:
        return theta / (theta + 2.0);
    case CopulaFamily::Gumbel:
        return 1.0 - 1.0 / theta;
    case CopulaFamily::Frank: {
        // τ(−θ) = −τ(θ)
        const double a = std::abs(theta);
        const double tau = 1.0 - 4.0 / a * (1.0 - debye1(a));
        return theta < 0.0 ? -tau : tau;
    }
    case CopulaFamily::A1:
        return 3.0 - 4.0 * theta * (digamma(theta + 0.5) - digamma(theta));
    case CopulaFamily::A2:
        return 1.0 - (6.0 - 8.0 * std::numbers::ln2) / theta;
    }
    return 0.0;
}

/// τ = 1 + 4∫₀¹ φ(t)/φ′(t) dt by adaptive Gauss–Kronrod quadrature.
inline double tau_quadrature(CopulaFamily f, double theta, double abs_tol = 1e-11) {
    const Archimedean cop(f, theta);
    const auto integrand = [&cop](double t) {
        return (t <= 0.0 || t >= 1.0) ? 0.0 : cop.gen_ratio(t);
    };
    return 1.0 + 4.0 * integrate(integrand, 0.0, 1.0, abs_tol / 4.0, 0.0, 5000).value;
}

/// Slope dτ/dθ by central difference of the closed form, with a one-sided
/// step where the central stencil would leave the domain.
inline double tau_derivative(CopulaFamily f, double theta) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta));
    const auto dom = theta_domain(f);
    if (dom.contains(theta - h) && (f != CopulaFamily::Frank || (theta - h) * theta > 0.0)) {
        return (theoretical_tau(f, theta + h) - theoretical_tau(f, theta - h)) / (2.0 * h);
    }
    return (theoretical_tau(f, theta + h) - theoretical_tau(f, theta)) / h;
}

/// Moment-matching outcome: every θ in the training range with τ(θ) = τ̂.
struct MomResult {
    CopulaFamily family;
    double tau_hat;
    std::vector<double> roots;
    std::vector<std::optional<double>> se; // parallel to roots; empty until computed

    [[nodiscard]] bool feasible() const noexcept { return !roots.empty(); }
};

inline constexpr double kMomGridStep = 0.01;

/// Grid scan of τ(θ) − τ̂ at step 0.01 over the family's training range,
/// with each sign change refined by bisection to 1e-8. Returns all roots;
/// no root means the moment equation is infeasible for this τ̂.
inline MomResult mom_estimate(CopulaFamily f, double tau_hat) {
    if (!(tau_hat >= -1.0 && tau_hat <= 1.0)) {
        throw DomainError("mom_estimate: tau_hat must lie in [-1,1]");
    }
    MomResult result{f, tau_hat, {}, {}};
    const auto dom = theta_domain(f);

    std::vector<std::pair<double, double>> segments;
    if (f == CopulaFamily::Frank) {
        segments = {{dom.train_lower, -dom.train_excluded_halfwidth},
                    {dom.train_excluded_halfwidth, dom.train_upper}};
    } else {
        segments = {{dom.train_lower, dom.train_upper}};
    }

    const auto g = [&](double th) { return theoretical_tau(f, th) - tau_hat; };
    for (const auto& [a, b] : segments) {
        const auto steps = static_cast<long>(std::ceil((b - a) / kMomGridStep - 1e-9));
        double prev_th = a;
        double prev_g = g(a);
        if (prev_g == 0.0) {
            result.roots.push_back(a);
        }
        for (long k = 1; k <= steps; ++k) {
            const double th = std::min(b, a + static_cast<double>(k) * kMomGridStep);
            const double cur_g = g(th);
            if (cur_g == 0.0) {
                result.roots.push_back(th);
            } else if (prev_g != 0.0 && (prev_g < 0.0) != (cur_g < 0.0)) {
                double lo = prev_th;
                double hi = th;
                double g_lo = prev_g;
                while (hi - lo > 1e-8) {
                    const double mid = 0.5 * (lo + hi);
                    const double g_mid = g(mid);
                    if ((g_mid < 0.0) == (g_lo < 0.0)) {
                        lo = mid;
                        g_lo = g_mid;
                    } else {
                        hi = mid;
                    }
                }
                result.roots.push_back(0.5 * (lo + hi));
            }
            prev_th = th;
            prev_g = cur_g;
        }
    }
    return result;
}

/// Jackknife standard error of the sample Kendall's τ.
///
/// Leave-one-out values come from per-point concordance scores, so the whole
/// jackknife is O(n log n). Leave-one-out τ uses the τ-a normalisation,
/// which coincides with τ-b for tie-free data.
inline double jackknife_tau_se(std::span<const double> u, std::span<const double> v) {
    if (u.size() < 3) {
        throw TooFewObservations("jackknife_tau_se: need at least 3 observations");
    }
    const auto scores = kendall_point_scores(u, v);
    const double n = static_cast<double>(u.size());
    double total = 0.0;
    for (auto s : scores) total += static_cast<double>(s);
    const double s_all = 0.5 * total;
    const double pairs_loo = (n - 1.0) * (n - 2.0) / 2.0;
    double mean = 0.0;
    for (auto s : scores) mean += (s_all - static_cast<double>(s)) / pairs_loo;
    mean /= n;
    double ss = 0.0;
    for (auto s : scores) {
        const double d = (s_all - static_cast<double>(s)) / pairs_loo - mean;
        ss += d * d;
    }
    return std::sqrt((n - 1.0) / n * ss);
}

/// SE(θ̂) = SE(τ̂)/|τ′(θ̂)|.
inline double delta_method_se(double tau_se, double tau_slope) {
    if (!(std::abs(tau_slope) >= 1e-8)) {
        throw DegenerateDerivative("delta method undefined: |dtau/dtheta| = " +
                                   std::to_string(std::abs(tau_slope)) + " < 1e-8");
    }
    return tau_se / std::abs(tau_slope);
}

/// Delta-method standard error of a moment estimate, using the jackknife
/// SE of τ̂ and a central-difference slope of the closed-form τ(θ).
inline double mom_se(CopulaFamily f, std::span<const double> u, std::span<const double> v,
                     double theta_hat) {
    if (u.size() != v.size()) {
        throw LengthMismatch("mom_se: length mismatch");
    }
    if (u.size() < 10) {
        throw TooFewObservations("mom_se: need at least 10 observations");
    }
    return delta_method_se(jackknife_tau_se(u, v), tau_derivative(f, theta_hat));
}

/// τ̂ from the data, every moment root, and an SE per root where defined.
inline MomResult mom_fit(CopulaFamily f, std::span<const double> u, std::span<const double> v) {
    auto result = mom_estimate(f, kendall_tau(u, v));
    result.se.reserve(result.roots.size());
    std::optional<double> tau_se;
    for (double root : result.roots) {
        if (!tau_se) {
            tau_se = jackknife_tau_se(u, v);
        }
        try {
            result.se.emplace_back(delta_method_se(*tau_se, tau_derivative(f, root)));
        } catch (const DegenerateDerivative&) {
            result.se.emplace_back(std::nullopt);
        }
    }
    return result;
}

} // namespace ignis
