#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ignis {

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seedable 64-bit generator with keyed child streams.
///
/// Uniform variates are produced from the top 53 bits of the engine output,
/// so sequences are identical across standard libraries (unlike
/// std::uniform_real_distribution).
class RandomSource {
public:
    using result_type = std::uint64_t;

    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    static constexpr result_type min() noexcept { return std::mt19937_64::min(); }
    static constexpr result_type max() noexcept { return std::mt19937_64::max(); }

    result_type operator()() { return engine_(); }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on the open interval (0,1).
    double uniform() {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) {
                return u;
            }
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Lemire-style rejection keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = max() - max() % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r < limit) {
                return r % n;
            }
        }
    }

    /// Child stream keyed by indices; independent of how many draws the
    /// parent has made.
    [[nodiscard]] RandomSource split(std::initializer_list<std::uint64_t> keys) const {
        std::uint64_t s = splitmix64(seed_ ^ 0x5851f42d4c957f2dULL);
        for (auto k : keys) {
            s = splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019ULL));
        }
        return RandomSource(s);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace ignis
