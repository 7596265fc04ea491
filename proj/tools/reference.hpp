#pragma once

#include <ignis/pipeline.hpp>
#include <ignis/train.hpp>

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ignis {

/// One published cell: estimate and standard error at a true θ.
struct ReferenceCell {
    CopulaFamily family;
    double theta_true;
    double estimate;
    double se;
};

// Neural estimates, n = 10,000 per cell, trained at 500 θ × 10,000 obs.
inline const std::vector<ReferenceCell> kReferenceIgnis = {
    {CopulaFamily::Clayton, 2.0, 1.9289, 0.1044}, {CopulaFamily::Gumbel, 2.0, 2.0248, 0.0460},
    {CopulaFamily::Frank, 2.0, 1.8426, 0.0985},   {CopulaFamily::A1, 2.0, 2.0828, 0.0789},
    {CopulaFamily::A2, 2.0, 1.9205, 0.0536},      {CopulaFamily::Clayton, 5.0, 4.9696, 0.1957},
    {CopulaFamily::Gumbel, 5.0, 5.0243, 0.1156},  {CopulaFamily::Frank, 5.0, 4.8715, 0.1406},
    {CopulaFamily::A1, 5.0, 4.9502, 0.1782},      {CopulaFamily::A2, 5.0, 5.0869, 0.1365},
    {CopulaFamily::Clayton, 10.0, 10.0439, 0.2968}, {CopulaFamily::Gumbel, 10.0, 9.8307, 0.2461},
    {CopulaFamily::Frank, 10.0, 9.9020, 0.2036},  {CopulaFamily::A1, 10.0, 9.8938, 0.2326},
    {CopulaFamily::A2, 10.0, 9.8044, 0.2967},
};

// Moment estimates, n = 100,000 per cell.
inline const std::vector<ReferenceCell> kReferenceMom = {
    {CopulaFamily::A1, 2.0, 4.4860, 0.1597}, {CopulaFamily::A2, 2.0, 1.9047, 0.0709},
    {CopulaFamily::A1, 5.0, 9.5215, 0.8844}, {CopulaFamily::A2, 5.0, 4.9398, 0.2335},
    {CopulaFamily::A1, 10.0, 6.1183, 1.2273}, {CopulaFamily::A2, 10.0, 9.4366, 0.1900},
};

/// Relative band around the truth for point estimates, and the accepted
/// ratio range between our and the reference standard errors.
inline constexpr double kReportEstimateBand = 0.10;
inline constexpr double kReportSeRatioLow = 0.25;
inline constexpr double kReportSeRatioHigh = 4.0;

struct ReportContext {
    std::string scale;
    GenConfig gen;
    const TrainResult& trained;
    double seconds;
};

namespace detail {

inline std::string f4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

inline std::string band_status(double est, double theta, std::optional<double> se, double ref_se) {
    std::string s = std::abs(est - theta) <= kReportEstimateBand * theta ? "ok" : "outside band";
    if (se) {
        const double ratio = *se / ref_se;
        if (ratio < kReportSeRatioLow || ratio > kReportSeRatioHigh) s += ", se off by >4x";
    }
    return s;
}

} // namespace detail

inline void write_report(std::ostream& os, const std::vector<StudyRow>& rows, const ReportContext& ctx) {
    os << "# Simulation study (" << ctx.scale << " scale)\n\n";
    os << "- training data: " << ctx.gen.thetas_per_family << " θ per family × "
       << ctx.gen.obs_per_theta << " observations, seed " << ctx.gen.seed << "\n";
    os << "- training: " << ctx.trained.history.size() << " epochs, best epoch "
       << ctx.trained.best_epoch << ", validation MSE " << detail::f4(ctx.trained.model.meta.final_val_loss)
       << "\n";
    os << "- wall time: " << detail::f4(ctx.seconds) << " s\n\n";
    os << "Point estimates pass when |θ̂ − θ| ≤ " << kReportEstimateBand * 100
       << "% of θ. Standard errors are compared with the reference as a ratio and flagged outside ["
       << kReportSeRatioLow << ", " << kReportSeRatioHigh << "]. The reference values come from a "
          "single stochastic run, so agreement is expected only within these bands.\n\n";

    os << "## Neural estimator\n\n";
    os << "| family | θ | θ̂ | SE | reference θ̂ | reference SE | status |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& ref : kReferenceIgnis) {
        for (const auto& r : rows) {
            if (r.method != "ignis" || r.family != ref.family || r.theta_true != ref.theta_true ||
                r.replicate != 0 || !r.theta_hat) {
                continue;
            }
            os << "| " << family_name(r.family) << " | " << detail::f4(r.theta_true) << " | "
               << detail::f4(*r.theta_hat) << " | " << (r.se ? detail::f4(*r.se) : "") << " | "
               << detail::f4(ref.estimate) << " | " << detail::f4(ref.se) << " | "
               << detail::band_status(*r.theta_hat, r.theta_true, r.se, ref.se)
               << (r.note.empty() ? "" : ", " + r.note) << " |\n";
        }
    }

    os << "\n## Method of moments\n\n";
    os << "| family | θ | roots | SE | reference θ̂ | reference SE | status |\n";
    os << "|---|---|---|---|---|---|---|\n";
    for (const auto& ref : kReferenceMom) {
        std::string roots;
        std::string ses;
        std::string status;
        bool any = false;
        for (const auto& r : rows) {
            if (r.method != "mom" || r.family != ref.family || r.theta_true != ref.theta_true ||
                r.replicate != 0) {
                continue;
            }
            if (!r.theta_hat) {
                status = "infeasible";
                continue;
            }
            any = true;
            if (!roots.empty()) {
                roots += "; ";
                ses += "; ";
                status += "; ";
            }
            roots += detail::f4(*r.theta_hat);
            ses += r.se ? detail::f4(*r.se) : "n/a";
            status += detail::band_status(*r.theta_hat, r.theta_true, r.se, ref.se);
        }
        if (!any && status.empty()) continue;
        os << "| " << family_name(ref.family) << " | " << detail::f4(ref.theta_true) << " | " << roots
           << " | " << ses << " | " << detail::f4(ref.estimate) << " | " << detail::f4(ref.se) << " | "
           << status << " |\n";
    }
    os << "\nThe A1 reference values cannot be matched: with the A1 Kendall's τ computed by "
          "quadrature the curve is strictly increasing, so moment inversion recovers θ. The "
          "reference values are consistent with inverting a different closed form.\n";
}

} // namespace ignis
