#pragma once

#include "ignis/error.hpp"
#include "ignis/family.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ignis {

/// The four empirical dependency measures fed to the network.
struct FeatureVector {
    double tau = 0.0;
    double rho = 0.0;
    double tail = 0.0;
    double pearson = 0.0;

    [[nodiscard]] std::array<double, 4> as_array() const { return {tau, rho, tail, pearson}; }
};

inline constexpr std::size_t kInputDim = 4 + kNumFamilies;

/// Features followed by the family one-hot (Clayton, Gumbel, Frank, A1, A2).
using ModelInput = std::array<double, kInputDim>;

inline constexpr double kDefaultTailQuantile = 0.95;

namespace detail {

inline void require_pair(std::span<const double> x, std::span<const double> y, const char* what) {
    if (x.size() != y.size()) {
        throw LengthMismatch(std::string(what) + ": length mismatch (" + std::to_string(x.size()) +
                             " vs " + std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw TooFewObservations(std::string(what) + ": need at least 2 observations");
    }
}

/// Fenwick tree of counts over 1-based positions.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t pos) {
        for (; pos < tree_.size(); pos += pos & (~pos + 1)) {
            ++tree_[pos];
        }
    }
    /// Count at positions 1..pos.
    [[nodiscard]] std::int64_t prefix(std::size_t pos) const {
        std::int64_t s = 0;
        for (; pos > 0; pos -= pos & (~pos + 1)) {
            s += tree_[pos];
        }
        return s;
    }

private:
    std::vector<std::int64_t> tree_;
};

/// Dense 1-based ranks (ties share a rank) and the number of distinct values.
inline std::vector<std::size_t> dense_ranks(std::span<const double> x, std::size_t& distinct) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<std::size_t> rank(x.size());
    distinct = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || x[order[i]] != x[order[i - 1]]) {
            ++distinct;
        }
        rank[order[i]] = distinct;
    }
    return rank;
}

inline std::int64_t tie_pairs_sorted(std::span<const double> sorted) {
    std::int64_t total = 0;
    std::int64_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total;
}

} // namespace detail

/// Ranks 1..n with ties given their average rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && x[order[j]] == x[order[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + 1 + j); // mean of i+1..j
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = avg;
        }
        i = j;
    }
    return ranks;
}

struct PseudoObservations {
    std::vector<double> u;
    std::vector<double> v;
};

/// uᵢ = rank(xᵢ)/(n + 1), vᵢ = rank(yᵢ)/(n + 1).
inline PseudoObservations pseudo_observations(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "pseudo_observations");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DomainError("pseudo_observations: non-finite value at row " + std::to_string(i));
        }
    }
    const double denom = static_cast<double>(x.size()) + 1.0;
    PseudoObservations out{average_ranks(x), average_ranks(y)};
    for (auto& r : out.u) r /= denom;
    for (auto& r : out.v) r /= denom;
    return out;
}

/// Pair counts behind Kendall's τ-b.
struct KendallCounts {
    std::int64_t pairs = 0;   // n(n−1)/2
    std::int64_t ties_x = 0;  // pairs tied in x (including joint ties)
    std::int64_t ties_y = 0;  // pairs tied in y (including joint ties)
    std::int64_t score = 0;   // concordant − discordant

    [[nodiscard]] double tau_b() const {
        const std::int64_t dx = pairs - ties_x;
        const std::int64_t dy = pairs - ties_y;
        if (dx == 0 || dy == 0) {
            throw DegenerateInput("kendall_tau: a coordinate is constant");
        }
        return static_cast<double>(score) /
               std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
    }
};

/// Knight's O(n log n) algorithm: sort by (x, y), then count the y-inversions
/// with a merge sort. Tied pairs contribute neither concordance nor
/// discordance.
inline KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "kendall_tau");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });

    KendallCounts c;
    c.pairs = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;

    std::int64_t joint_ties = 0;
    {
        std::int64_t run_x = 1;
        std::int64_t run_xy = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_x = i < n && x[order[i]] == x[order[i - 1]];
            const bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
            if (same_x) {
                ++run_x;
            } else {
                c.ties_x += run_x * (run_x - 1) / 2;
                run_x = 1;
            }
            if (same_xy) {
                ++run_xy;
            } else {
                joint_ties += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        }
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys[i] = y[order[i]];
    }
    std::vector<double> buf(n);
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo < n; lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, n);
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo;
            std::size_t j = mid;
            std::size_t k = lo;
            while (i < mid && j < hi) {
                if (ys[i] <= ys[j]) {
                    buf[k++] = ys[i++];
                } else {
                    swaps += static_cast<std::int64_t>(mid - i);
                    buf[k++] = ys[j++];
                }
            }
            while (i < mid) buf[k++] = ys[i++];
            while (j < hi) buf[k++] = ys[j++];
        }
        ys.swap(buf);
    }
    c.ties_y = detail::tie_pairs_sorted(ys);
    c.score = c.pairs - c.ties_x - c.ties_y + joint_ties - 2 * swaps;
    return c;
}

/// Sample Kendall's τ-b.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
    return kendall_counts(x, y).tau_b();
}

/// For every point i, Σⱼ sign(xᵢ − xⱼ)·sign(yᵢ − yⱼ), in O(n log n).
/// These sum to twice the concordant-minus-discordant score and drive the
/// jackknife of τ̂.
inline std::vector<std::int64_t> kendall_point_scores(std::span<const double> x,
                                                      std::span<const double> y) {
    detail::require_pair(x, y, "kendall_point_scores");
    const std::size_t n = x.size();
    std::size_t ny = 0;
    const auto ry = detail::dense_ranks(y, ny);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<std::int64_t> score(n, 0);
    // Two sweeps: points with strictly smaller x, then strictly larger x.
    for (int direction = 0; direction < 2; ++direction) {
        detail::Fenwick tree(ny);
        std::int64_t inserted = 0;
        std::size_t g = 0;
        while (g < n) {
            std::size_t end = g + 1;
            auto at = [&](std::size_t k) { return direction == 0 ? order[k] : order[n - 1 - k]; };
            while (end < n && x[at(end)] == x[at(g)]) {
                ++end;
            }
            for (std::size_t k = g; k < end; ++k) {
                const std::size_t i = at(k);
                const std::int64_t below = tree.prefix(ry[i] - 1);
                const std::int64_t above = inserted - tree.prefix(ry[i]);
                // Earlier points have smaller x in sweep 0 and larger x in sweep 1.
                score[i] += direction == 0 ? below - above : above - below;
            }
            for (std::size_t k = g; k < end; ++k) {
                tree.add(ry[at(k)]);
                ++inserted;
            }
            g = end;
        }
    }
    return score;
}

/// Pearson product-moment correlation.
inline double pearson_corr(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "pearson_corr");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DegenerateInput("pearson_corr: zero variance in a coordinate");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's ρ: Pearson correlation of average ranks.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    detail::require_pair(x, y, "spearman_rho");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson_corr(rx, ry);
}

/// Upper-tail dependence at quantile q: #{u > q and v > q} / #{u > q}, or 0
/// when no u exceeds q.
inline double tail_dependence(std::span<const double> u, std::span<const double> v,
                              double q = kDefaultTailQuantile) {
    detail::require_pair(u, v, "tail_dependence");
    if (!(q > 0.0 && q < 1.0)) {
        throw DomainError("tail_dependence: q must lie in (0,1)");
    }
    std::size_t upper = 0;
    std::size_t joint = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > q) {
            ++upper;
            if (v[i] > q) {
                ++joint;
            }
        }
    }
    return upper == 0 ? 0.0 : static_cast<double>(joint) / static_cast<double>(upper);
}

/// (τ, ρ, λ_q, r) of the pairs as given.
inline FeatureVector feature_vector(std::span<const double> u, std::span<const double> v,
                                    double q = kDefaultTailQuantile) {
    return {kendall_tau(u, v), spearman_rho(u, v), tail_dependence(u, v, q), pearson_corr(u, v)};
}

inline ModelInput encode_input(const FeatureVector& f, CopulaFamily family) {
    ModelInput x{};
    x[0] = f.tau;
    x[1] = f.rho;
    x[2] = f.tail;
    x[3] = f.pearson;
    x[4 + family_index(family)] = 1.0;
    return x;
}

/// Family encoded in a model input (the hot index).
inline CopulaFamily input_family(const ModelInput& x) {
    for (std::size_t k = 0; k < kNumFamilies; ++k) {
        if (x[4 + k] == 1.0) {
            return kAllFamilies[k];
        }
    }
    throw DomainError("model input has no family indicator set");
}

} // namespace ignis
