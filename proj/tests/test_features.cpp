#include <ignis/copula.hpp>
#include <ignis/features.hpp>
#include <ignis/random.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace ignis;

namespace {

struct BruteCounts {
    std::int64_t concordant = 0;
    std::int64_t discordant = 0;
    std::int64_t ties_x = 0;
    std::int64_t ties_y = 0;
    std::int64_t pairs = 0;
};

int sgn(double d) { return (d > 0) - (d < 0); }

BruteCounts brute_counts(const std::vector<double>& x, const std::vector<double>& y) {
    BruteCounts c;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            ++c.pairs;
            const int s = sgn(x[i] - x[j]) * sgn(y[i] - y[j]);
            if (x[i] == x[j]) ++c.ties_x;
            if (y[i] == y[j]) ++c.ties_y;
            if (s > 0) ++c.concordant;
            if (s < 0) ++c.discordant;
        }
    }
    return c;
}

// Mixes continuous draws with heavily tied small-integer draws.
std::vector<double> random_column(RandomSource& rng, std::size_t n, int mode) {
    std::vector<double> out(n);
    for (auto& v : out) {
        switch (mode) {
        case 0: v = rng.uniform(); break;
        case 1: v = static_cast<double>(rng.below(5)); break;
        default: v = rng.below(2) ? rng.uniform() : static_cast<double>(rng.below(3)); break;
        }
    }
    return out;
}

} // namespace

TEST(Ranks, ReferenceValues) {
    const auto p = pseudo_observations(std::vector<double>{3, 1, 2}, std::vector<double>{5, 5, 1});
    EXPECT_EQ(p.u, (std::vector<double>{0.75, 0.25, 0.5}));
    const auto q = pseudo_observations(std::vector<double>{5, 5}, std::vector<double>{1, 2});
    EXPECT_EQ(q.u, (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(average_ranks(std::vector<double>{2, 7, 2, 2}), (std::vector<double>{2, 4, 2, 2}));
}

TEST(Ranks, IncreasingInputGivesUniformGrid) {
    std::vector<double> x(50);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::exp(0.1 * static_cast<double>(i));
    const auto p = pseudo_observations(x, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_DOUBLE_EQ(p.u[i], static_cast<double>(i + 1) / 51.0);
        EXPECT_GT(p.u[i], 0.0);
        EXPECT_LT(p.u[i], 1.0);
    }
}

TEST(Ranks, RejectsBadInput) {
    EXPECT_THROW(pseudo_observations(std::vector<double>{1, 2}, std::vector<double>{1}), LengthMismatch);
    EXPECT_THROW(pseudo_observations(std::vector<double>{1, NAN}, std::vector<double>{1, 2}), DomainError);
}

TEST(KendallTau, ReferenceValues) {
    const std::vector<double> u{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(kendall_tau(u, u), 1.0);
    EXPECT_DOUBLE_EQ(kendall_tau(u, std::vector<double>{4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(kendall_tau(u, std::vector<double>{1, 3, 2, 4}), 2.0 / 3.0, 1e-15);
}

TEST(KendallTau, ConstantCoordinateIsDegenerate) {
    EXPECT_THROW(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateInput);
}

// O(n log n) counts against the O(n²) double loop, exact equality.
TEST(KendallTau, MatchesBruteForceOnRandomInstances) {
    RandomSource rng(2024);
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 2 + rng.below(199);
        const auto x = random_column(rng, n, inst % 3);
        const auto y = random_column(rng, n, (inst / 3) % 3);
        const auto fast = kendall_counts(x, y);
        const auto slow = brute_counts(x, y);
        ASSERT_EQ(fast.pairs, slow.pairs);
        ASSERT_EQ(fast.ties_x, slow.ties_x);
        ASSERT_EQ(fast.ties_y, slow.ties_y);
        ASSERT_EQ(fast.score, slow.concordant - slow.discordant) << "instance " << inst;
        const std::int64_t dx = slow.pairs - slow.ties_x;
        const std::int64_t dy = slow.pairs - slow.ties_y;
        if (dx > 0 && dy > 0) {
            const double oracle = static_cast<double>(slow.concordant - slow.discordant) /
                                  std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
            ASSERT_EQ(fast.tau_b(), oracle);
        }
    }
}

TEST(KendallTau, PointScoresMatchBruteForce) {
    RandomSource rng(5);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t n = 2 + rng.below(120);
        const auto x = random_column(rng, n, inst % 3);
        const auto y = random_column(rng, n, (inst + 1) % 3);
        const auto fast = kendall_point_scores(x, y);
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t s = 0;
            for (std::size_t j = 0; j < n; ++j) s += sgn(x[i] - x[j]) * sgn(y[i] - y[j]);
            ASSERT_EQ(fast[i], s) << "instance " << inst << " point " << i;
        }
    }
}

TEST(Spearman, ReferenceValues) {
    const std::vector<double> u{1, 2, 3};
    EXPECT_DOUBLE_EQ(spearman_rho(u, u), 1.0);
    EXPECT_DOUBLE_EQ(spearman_rho(u, std::vector<double>{3, 2, 1}), -1.0);
    EXPECT_NEAR(spearman_rho(u, std::vector<double>{2, 1, 3}), 0.5, 1e-15);
}

TEST(Pearson, ReferenceValues) {
    const std::vector<double> x{1, 2, 3, 4.5};
    std::vector<double> y;
    for (double v : x) y.push_back(2 * v + 1);
    EXPECT_NEAR(pearson_corr(x, y), 1.0, 1e-15);
    std::vector<double> neg;
    for (double v : x) neg.push_back(-v);
    EXPECT_NEAR(pearson_corr(x, neg), -1.0, 1e-15);
    EXPECT_NEAR(pearson_corr(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}), 0.9820, 5e-5);
}

TEST(Tail, ComonotoneIsOne) {
    std::vector<double> u;
    for (int i = 1; i <= 100; ++i) u.push_back(i / 101.0);
    EXPECT_DOUBLE_EQ(tail_dependence(u, u), 1.0);
    EXPECT_DOUBLE_EQ(tail_dependence(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.99}), 0.0);
    EXPECT_THROW(tail_dependence(u, u, 1.0), DomainError);
}

TEST(Tail, IndependenceGivesOneMinusQ) {
    RandomSource rng(8);
    std::vector<double> u(100000);
    std::vector<double> v(100000);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = rng.uniform();
        v[i] = rng.uniform();
    }
    EXPECT_NEAR(tail_dependence(u, v), 0.05, 0.01);
    const auto f = feature_vector(u, v);
    EXPECT_NEAR(f.tau, 0.0, 0.01);
    EXPECT_NEAR(f.rho, 0.0, 0.01);
    EXPECT_NEAR(f.pearson, 0.0, 0.01);
}

TEST(Tail, GumbelUpperTail) {
    const auto s = sample_n(CopulaFamily::Gumbel, 2.0, 100000, 21);
    EXPECT_NEAR(tail_dependence(s.u, s.v, 0.95), 0.55, 0.05);
}

TEST(FeatureVector, ComonotoneInput) {
    std::vector<double> u;
    for (int i = 1; i <= 200; ++i) u.push_back(i / 201.0);
    const auto f = feature_vector(u, u);
    EXPECT_DOUBLE_EQ(f.tau, 1.0);
    EXPECT_DOUBLE_EQ(f.rho, 1.0);
    EXPECT_DOUBLE_EQ(f.tail, 1.0);
    EXPECT_NEAR(f.pearson, 1.0, 1e-12);
    EXPECT_EQ(f.as_array().size(), 4u);
}

TEST(FeatureVector, RankFeaturesInvariantUnderMonotoneMaps) {
    const auto s = sample_n(CopulaFamily::Clayton, 3.0, 3000, 4);
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        x.push_back(std::log(s.u[i]));
        y.push_back(std::exp(3.0 * s.v[i]));
    }
    EXPECT_EQ(kendall_tau(x, y), kendall_tau(s.u, s.v));
    EXPECT_NEAR(spearman_rho(x, y), spearman_rho(s.u, s.v), 1e-14);
}

TEST(FeatureVector, FiniteAndBounded) {
    for (auto f : kAllFamilies) {
        const double theta = f == CopulaFamily::Frank ? -4.0 : 3.0;
        const auto s = sample_n(f, theta, 2000, 13);
        const auto fv = feature_vector(s.u, s.v);
        for (double v : fv.as_array()) EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(fv.tail, 0.0);
        EXPECT_LE(fv.tail, 1.0);
    }
}

TEST(Encode, OneHotLayout) {
    const FeatureVector fv{0.1, 0.2, 0.3, 0.4};
    const auto c = encode_input(fv, CopulaFamily::Clayton);
    EXPECT_EQ(c, (ModelInput{0.1, 0.2, 0.3, 0.4, 1, 0, 0, 0, 0}));
    const auto a2 = encode_input(fv, CopulaFamily::A2);
    EXPECT_EQ(a2, (ModelInput{0.1, 0.2, 0.3, 0.4, 0, 0, 0, 0, 1}));
    for (auto f : kAllFamilies) {
        const auto x = encode_input(fv, f);
        double sum = 0.0;
        for (std::size_t k = 4; k < kInputDim; ++k) sum += x[k];
        EXPECT_EQ(sum, 1.0);
        EXPECT_EQ(input_family(x), f);
    }
}
