#pragma once

#include "ignis/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

namespace ignis {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Digamma ψ(x) for x > 0.
///
/// Shifts the argument with ψ(x) = ψ(x+1) − 1/x until x ≥ 10, then applies
/// the asymptotic expansion ln x − 1/(2x) − Σ B₂ₖ/(2k x²ᵏ), truncated after
/// the x⁻¹⁴ term (truncation error below 1e-16 at x = 10).
inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("digamma: x must be positive and finite, got " + std::to_string(x));
    }
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Horner form of the Bernoulli tail.
    const double tail =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 -
                                        inv2 * (1.0 / 132.0 -
                                                inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    return shift + std::log(x) - 0.5 * inv - tail;
}

/// Result of an adaptive quadrature.
struct QuadratureResult {
    double value;
    double abs_error;
    int intervals;
};

namespace detail {

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& o) const noexcept { return error < o.error; }
};

template <class F>
Segment gk15(const F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) {
            gauss += kWg[j / 2] * (f1 + f2);
        }
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace detail

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of f over [a, b].
///
/// Only interior nodes are evaluated, so integrands with removable
/// singularities at the endpoints are fine. Throws QuadratureError when the
/// tolerance is not met within `max_intervals` subdivisions.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, double abs_tol = 1e-10,
                           double rel_tol = 1e-12, int max_intervals = 2000) {
    if (a == b) {
        return {0.0, 0.0, 0};
    }
    if (a > b) {
        auto r = integrate(f, b, a, abs_tol, rel_tol, max_intervals);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, a, b);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    int intervals = 1;
    while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (intervals >= max_intervals) {
            throw QuadratureError("integrate: no convergence after " +
                                  std::to_string(intervals) + " intervals (error estimate " +
                                  std::to_string(error) + ")");
        }
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
        if (!std::isfinite(total)) {
            throw QuadratureError("integrate: non-finite integrand");
        }
    }
    // Re-sum to shed accumulated rounding from the incremental updates.
    double value = 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {value, err, intervals};
}

/// Debye function D₁(x) = (1/x)∫₀ˣ t/(eᵗ−1) dt, with D₁(0) = 1.
inline double debye1(double x) {
    if (!std::isfinite(x)) {
        throw DomainError("debye1: non-finite argument");
    }
    if (x == 0.0) {
        return 1.0;
    }
    const auto integrand = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
    const auto r = integrate(integrand, 0.0, x, 1e-14, 1e-14);
    return r.value / x;
}

} // namespace ignis
