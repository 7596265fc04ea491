#pragma once

#include "ignis/error.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace ignis {

/// The five supported Archimedean families. The enumerator order is the
/// one-hot order used by the network input.
enum class CopulaFamily { Clayton = 0, Gumbel = 1, Frank = 2, A1 = 3, A2 = 4 };

inline constexpr std::array<CopulaFamily, 5> kAllFamilies = {
    CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Frank,
    CopulaFamily::A1, CopulaFamily::A2};

inline constexpr std::size_t kNumFamilies = kAllFamilies.size();

constexpr std::size_t family_index(CopulaFamily f) noexcept {
    return static_cast<std::size_t>(f);
}

constexpr std::string_view family_name(CopulaFamily f) noexcept {
    switch (f) {
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::A1: return "a1";
    case CopulaFamily::A2: return "a2";
    }
    return "unknown";
}

/// Case-insensitive lookup; nullopt for unknown names.
inline std::optional<CopulaFamily> parse_family(std::string_view name) {
    std::string lower;
    lower.reserve(name.size());
    for (char c : name) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto f : kAllFamilies) {
        if (lower == family_name(f)) {
            return f;
        }
    }
    return std::nullopt;
}

/// Parameter domain of a family together with its training range.
///
/// `lower`/`upper` bound the mathematical domain, `lower_inclusive` says
/// whether the lower bound itself is allowed. Frank additionally excludes 0
/// from the domain and (-0.1, 0.1) from the training range.
struct ThetaDomain {
    CopulaFamily family;
    double lower;
    double upper;
    bool lower_inclusive;
    double train_lower;
    double train_upper;
    double train_excluded_halfwidth; // Frank only; 0 elsewhere

    [[nodiscard]] bool contains(double theta) const noexcept {
        if (!std::isfinite(theta)) {
            return false;
        }
        if (family == CopulaFamily::Frank) {
            return theta != 0.0;
        }
        return lower_inclusive ? theta >= lower : theta > lower;
    }

    [[nodiscard]] bool in_training_range(double theta) const noexcept {
        if (!contains(theta) || theta < train_lower || theta > train_upper) {
            return false;
        }
        if (family == CopulaFamily::Clayton && theta <= train_lower) {
            return false;
        }
        return std::abs(theta) >= train_excluded_halfwidth;
    }

    /// Human readable domain requirement, used in error messages.
    [[nodiscard]] std::string describe() const {
        switch (family) {
        case CopulaFamily::Clayton: return "θ > 0 required";
        case CopulaFamily::Frank: return "θ ≠ 0 required";
        default: return "θ ≥ 1 required";
        }
    }
};

constexpr ThetaDomain theta_domain(CopulaFamily f) noexcept {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (f) {
    case CopulaFamily::Clayton: return {f, 0.0, inf, false, 0.1, 20.0, 0.0};
    case CopulaFamily::Frank: return {f, -inf, inf, false, -20.0, 20.0, 0.1};
    case CopulaFamily::Gumbel:
    case CopulaFamily::A1:
    case CopulaFamily::A2: break;
    }
    return {f, 1.0, inf, true, 1.0, 20.0, 0.0};
}

inline void require_theta(CopulaFamily f, double theta) {
    const auto dom = theta_domain(f);
    if (!dom.contains(theta)) {
        throw DomainError(std::string(family_name(f)) + ": theta=" + std::to_string(theta) +
                          " outside domain, " + dom.describe());
    }
}

} // namespace ignis
