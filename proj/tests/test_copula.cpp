#include <ignis/copula.hpp>
#include <ignis/features.hpp>
#include <ignis/tau.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <string>

using namespace ignis;

namespace {

struct Case {
    CopulaFamily family;
    double theta;
};

const std::vector<Case> kGrid = {
    {CopulaFamily::Clayton, 0.5}, {CopulaFamily::Clayton, 2.0},  {CopulaFamily::Clayton, 10.0},
    {CopulaFamily::Gumbel, 1.0},  {CopulaFamily::Gumbel, 2.0},   {CopulaFamily::Gumbel, 10.0},
    {CopulaFamily::Frank, -5.0},  {CopulaFamily::Frank, 0.5},    {CopulaFamily::Frank, 5.0},
    {CopulaFamily::Frank, 18.0},  {CopulaFamily::A1, 1.0},       {CopulaFamily::A1, 2.0},
    {CopulaFamily::A1, 10.0},     {CopulaFamily::A2, 1.0},       {CopulaFamily::A2, 2.0},
    {CopulaFamily::A2, 10.0},
};

std::string label(const Case& c) {
    return std::string(family_name(c.family)) + " theta=" + std::to_string(c.theta);
}

// Replays a fixed list of uniforms.
struct ScriptedUniforms {
    std::deque<double> values;
    double uniform() {
        const double v = values.front();
        values.pop_front();
        return v;
    }
};

} // namespace

TEST(Generator, ReferenceValues) {
    EXPECT_DOUBLE_EQ(generator(CopulaFamily::A1, 3.0, 1.0), 0.0);
    EXPECT_NEAR(generator(CopulaFamily::A2, 1.0, 0.5), 0.5, 1e-15);
    EXPECT_NEAR(generator(CopulaFamily::A1, 2.0, 0.25), 0.25, 1e-15);
    for (const auto& c : kGrid) {
        EXPECT_EQ(generator(c.family, c.theta, 1.0), 0.0) << label(c);
    }
}

TEST(Generator, InverseReferenceValues) {
    for (const auto& c : kGrid) {
        EXPECT_EQ(inv_generator(c.family, c.theta, 0.0), 1.0) << label(c);
    }
    EXPECT_NEAR(inv_generator(CopulaFamily::A1, 2.0, 0.25), 0.25, 1e-14);
    EXPECT_NEAR(inv_generator(CopulaFamily::A2, 1.0, 0.5), 0.5, 1e-14);
}

TEST(Generator, RoundTrip) {
    for (const auto& c : kGrid) {
        for (double t : {1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 0.999999}) {
            const double s = generator(c.family, c.theta, t);
            EXPECT_NEAR(inv_generator(c.family, c.theta, s), t, 1e-9) << label(c) << " t=" << t;
        }
    }
}

TEST(Generator, DecreasingAndConvex) {
    for (const auto& c : kGrid) {
        double prev = generator(c.family, c.theta, 0.01);
        for (int k = 2; k < 99; ++k) {
            const double t = k / 100.0;
            const double h = 0.005;
            const double cur = generator(c.family, c.theta, t);
            EXPECT_LT(cur, prev) << label(c) << " t=" << t;
            const double second = generator(c.family, c.theta, t - h) - 2.0 * cur +
                                  generator(c.family, c.theta, t + h);
            EXPECT_GE(second, -1e-12 * std::max(1.0, cur)) << label(c) << " t=" << t;
            prev = cur;
        }
    }
}

TEST(Generator, ParameterIsIdentifiable) {
    for (auto f : {CopulaFamily::A1, CopulaFamily::A2}) {
        for (double a : {1.0, 2.0, 5.0}) {
            const double b = a + 0.5;
            double gap = 0.0;
            for (double t : {0.01, 0.1, 0.3, 0.7}) {
                const double ga = generator(f, a, t);
                gap = std::max(gap, std::abs(ga - generator(f, b, t)) / ga);
            }
            EXPECT_GT(gap, 1e-2) << family_name(f) << " " << a;
        }
    }
}

TEST(Ratio, ReferenceValues) {
    EXPECT_NEAR(gen_ratio(CopulaFamily::A2, 1.0, 0.5), -1.0 / 6.0, 1e-15);
    EXPECT_NEAR(gen_ratio(CopulaFamily::Gumbel, 2.0, 0.5), 0.5 * std::log(0.5) / 2.0, 1e-15);
    EXPECT_NEAR(gen_ratio(CopulaFamily::Gumbel, 2.0, 0.5), -0.17329, 1e-5);
    EXPECT_NEAR(gen_ratio(CopulaFamily::A1, 1.0, 1.0 - 1e-12), 0.0, 1e-11);
}

// φ/φ′ against a central difference of φ itself.
TEST(Ratio, MatchesNumericalDerivative) {
    for (const auto& c : kGrid) {
        for (double t : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
            const double h = 1e-6 * t;
            const double d = (generator(c.family, c.theta, t + h) - generator(c.family, c.theta, t - h)) /
                             (2.0 * h);
            const double oracle = generator(c.family, c.theta, t) / d;
            EXPECT_NEAR(gen_ratio(c.family, c.theta, t), oracle, 1e-6 * std::max(1.0, std::abs(oracle)))
                << label(c) << " t=" << t;
            EXPECT_LE(gen_ratio(c.family, c.theta, t), 0.0);
        }
    }
}

TEST(KendallK, ReferenceValues) {
    EXPECT_NEAR(kendall_K(CopulaFamily::A2, 1.0, 0.5), 0.5 + 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(kendall_K(CopulaFamily::Clayton, 1.0, 0.5), 0.75, 1e-15);
    for (const auto& c : kGrid) {
        EXPECT_NEAR(kendall_K(c.family, c.theta, 1.0 - 1e-12), 1.0, 1e-9) << label(c);
    }
}

TEST(KendallK, InverseReferenceValues) {
    EXPECT_NEAR(inv_K(CopulaFamily::A2, 1.0, 0.5 + 1.0 / 6.0), 0.5, 1e-9);
    EXPECT_NEAR(inv_K(CopulaFamily::Clayton, 1.0, 0.75), 0.5, 1e-9);
    for (const auto& c : kGrid) {
        for (double t : {0.05, 0.3, 0.7}) {
            const double p = kendall_K(c.family, c.theta, t);
            EXPECT_NEAR(inv_K(c.family, c.theta, p), t, 1e-9) << label(c) << " t=" << t;
        }
    }
}

TEST(Domain, RejectsInvalidParameters) {
    EXPECT_THROW(Archimedean(CopulaFamily::Gumbel, 0.5), DomainError);
    EXPECT_THROW(Archimedean(CopulaFamily::A1, 0.999), DomainError);
    EXPECT_THROW(Archimedean(CopulaFamily::A2, -1.0), DomainError);
    EXPECT_THROW(Archimedean(CopulaFamily::Clayton, 0.0), DomainError);
    EXPECT_THROW(Archimedean(CopulaFamily::Frank, 0.0), DomainError);
    EXPECT_THROW(Archimedean(CopulaFamily::Clayton, std::nan("")), DomainError);
    EXPECT_NO_THROW(Archimedean(CopulaFamily::Gumbel, 1.0));
    EXPECT_THROW(generator(CopulaFamily::A2, 2.0, 0.0), DomainError);
    EXPECT_THROW(inv_generator(CopulaFamily::A2, 2.0, -1.0), DomainError);
    EXPECT_THROW(inv_K(CopulaFamily::A2, 2.0, 1.0), DomainError);
    EXPECT_THROW(sample_n(CopulaFamily::A2, 2.0, 0, 1), DomainError);
    try {
        Archimedean(CopulaFamily::Gumbel, 0.5);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("θ ≥ 1 required"), std::string::npos);
    }
}

// Empirical τ of 50,000 draws against the closed form.
TEST(Sampler, KendallTauMatchesTheory) {
    const std::vector<Case> cells = {
        {CopulaFamily::Clayton, 2.0}, {CopulaFamily::Clayton, 5.0}, {CopulaFamily::Clayton, 10.0},
        {CopulaFamily::Gumbel, 2.0},  {CopulaFamily::Gumbel, 5.0},  {CopulaFamily::Gumbel, 10.0},
        {CopulaFamily::Frank, 2.0},   {CopulaFamily::Frank, 5.0},   {CopulaFamily::Frank, 10.0},
        {CopulaFamily::Frank, -5.0},  {CopulaFamily::A1, 2.0},      {CopulaFamily::A1, 5.0},
        {CopulaFamily::A1, 10.0},     {CopulaFamily::A2, 2.0},      {CopulaFamily::A2, 5.0},
        {CopulaFamily::A2, 10.0},
    };
    std::uint64_t seed = 100;
    for (const auto& c : cells) {
        const auto s = sample_n(c.family, c.theta, 50000, ++seed);
        EXPECT_NEAR(kendall_tau(s.u, s.v), theoretical_tau(c.family, c.theta), 0.01) << label(c);
    }
}

TEST(Sampler, ReferenceTauValues) {
    const auto a2 = sample_n(CopulaFamily::A2, 2.0, 50000, 3);
    EXPECT_NEAR(kendall_tau(a2.u, a2.v), 0.7726, 0.01);
    const auto neg = sample_n(CopulaFamily::Frank, -5.0, 50000, 4);
    EXPECT_LT(kendall_tau(neg.u, neg.v), 0.0);
    const auto weak = sample_n(CopulaFamily::Clayton, 0.1, 50000, 5);
    EXPECT_NEAR(kendall_tau(weak.u, weak.v), 0.0476, 0.01);
}

// W = C(U,V) = φ⁻¹(φ(U) + φ(V)) has distribution function K.
TEST(Sampler, CopulaValueFollowsKendallDistribution) {
    for (const auto& c : kGrid) {
        const std::size_t n = 50000;
        const auto s = sample_n(c.family, c.theta, n, 77);
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = inv_generator(c.family, c.theta,
                                 generator(c.family, c.theta, s.u[i]) + generator(c.family, c.theta, s.v[i]));
        }
        std::sort(w.begin(), w.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = std::clamp(w[i], 1e-15, 1.0 - 1e-15);
            const double k = kendall_K(c.family, c.theta, t);
            ks = std::max({ks, std::abs(k - static_cast<double>(i) / n),
                           std::abs(k - static_cast<double>(i + 1) / n)});
        }
        EXPECT_LE(ks, 0.01) << label(c);
    }
}

TEST(Sampler, CoordinatesInsideUnitInterval) {
    for (const auto& c : kGrid) {
        const auto s = sample_n(c.family, c.theta, 2000, 9);
        for (std::size_t i = 0; i < s.size(); ++i) {
            ASSERT_GE(s.u[i], kUnitEps);
            ASSERT_LE(s.u[i], 1.0 - kUnitEps);
            ASSERT_GE(s.v[i], kUnitEps);
            ASSERT_LE(s.v[i], 1.0 - kUnitEps);
        }
    }
}

TEST(Sampler, Deterministic) {
    const auto a = sample_n(CopulaFamily::A1, 2.0, 10, 7);
    const auto b = sample_n(CopulaFamily::A1, 2.0, 10, 7);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.v, b.v);
    const auto c = sample_n(CopulaFamily::A1, 2.0, 10, 8);
    EXPECT_NE(a.u, c.u);
}

TEST(Sampler, SwappingSplitSwapsCoordinates) {
    const Archimedean cop(CopulaFamily::A2, 3.0);
    for (double s : {0.1, 0.35, 0.8}) {
        ScriptedUniforms a{{s, 0.6}};
        ScriptedUniforms b{{1.0 - s, 0.6}};
        const auto p = cop.sample_pair(a);
        const auto q = cop.sample_pair(b);
        EXPECT_NEAR(p.u, q.v, 1e-12);
        EXPECT_NEAR(p.v, q.u, 1e-12);
    }
}

TEST(Sampler, CsvExportRoundTrips) {
    const auto s = sample_n(CopulaFamily::Frank, -3.0, 25, 11);
    const auto path = (std::filesystem::temp_directory_path() / "ignis_sample_test.csv").string();
    write_sample_csv(s, path);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "u,v");
    for (std::size_t i = 0; i < s.size(); ++i) {
        ASSERT_TRUE(std::getline(is, line));
        const auto comma = line.find(',');
        EXPECT_EQ(std::stod(line.substr(0, comma)), s.u[i]);
        EXPECT_EQ(std::stod(line.substr(comma + 1)), s.v[i]);
    }
    EXPECT_FALSE(std::getline(is, line));
    std::filesystem::remove(path);
}
