#pragma once

#include "ignis/bootstrap.hpp"
#include "ignis/copula.hpp"
#include "ignis/error.hpp"
#include "ignis/family.hpp"
#include "ignis/features.hpp"
#include "ignis/net.hpp"
#include "ignis/random.hpp"
#include "ignis/tau.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace ignis {

/// Worker count: hardware concurrency, capped by IGNIS_THREADS when set.
inline unsigned worker_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("IGNIS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) {
            n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        }
    }
    return n;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any task is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, const Body& body) {
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Uniform draw over the family's training range; Frank redraws until
/// |θ| ≥ 0.1.
template <class Rng>
double sample_theta(CopulaFamily f, Rng& rng) {
    const auto dom = theta_domain(f);
    for (;;) {
        const double th = rng.uniform(dom.train_lower, dom.train_upper);
        if (dom.in_training_range(th)) {
            return th;
        }
    }
}

struct GenConfig {
    std::size_t thetas_per_family = 200;
    std::size_t obs_per_theta = 2000;
    std::vector<CopulaFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
    std::uint64_t seed = 0;

    void validate() const {
        if (thetas_per_family < 1) {
            throw DomainError("GenConfig: thetas_per_family must be at least 1");
        }
        if (obs_per_theta < 100) {
            throw DomainError("GenConfig: obs_per_theta must be at least 100");
        }
        if (families.empty()) {
            throw DomainError("GenConfig: no families selected");
        }
    }

    static GenConfig paper_scale(std::uint64_t seed = 0) {
        GenConfig c;
        c.thetas_per_family = 500;
        c.obs_per_theta = 10000;
        c.seed = seed;
        return c;
    }
};

struct TrainingRow {
    ModelInput x;
    double theta;
    CopulaFamily family;
};

struct TrainingSet {
    std::vector<TrainingRow> rows;
    GenConfig provenance;

    [[nodiscard]] std::vector<Example> examples() const {
        std::vector<Example> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back({r.x, r.theta});
        return out;
    }
};

/// One training row; its randomness depends only on (seed, family, k).
inline TrainingRow make_training_row(const GenConfig& cfg, CopulaFamily f, std::size_t k) {
    const RandomSource root(cfg.seed);
    auto theta_rng = root.split({family_index(f), k, 0});
    const double theta = sample_theta(f, theta_rng);
    const auto sample_seed = root.split({family_index(f), k, 1}).seed();
    const auto s = sample_n(f, theta, cfg.obs_per_theta, sample_seed);
    return {encode_input(feature_vector(s.u, s.v), f), theta, f};
}

/// Simulates |families| × thetas_per_family rows, family-major.
inline TrainingSet build_training_set(const GenConfig& cfg, unsigned threads = worker_threads()) {
    cfg.validate();
    const std::size_t per = cfg.thetas_per_family;
    TrainingSet ts{std::vector<TrainingRow>(cfg.families.size() * per), cfg};
    parallel_for(ts.rows.size(), threads, [&](std::size_t i) {
        ts.rows[i] = make_training_row(cfg, cfg.families[i / per], i % per);
    });
    return ts;
}

inline constexpr const char* kTrainingCsvHeader =
    "tau,rho,tail,pearson,onehot0,onehot1,onehot2,onehot3,onehot4,theta,family";

inline void write_training_csv(const TrainingSet& ts, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    os << kTrainingCsvHeader << '\n';
    for (const auto& r : ts.rows) {
        for (double x : r.x) os << detail::fmt17(x) << ',';
        os << detail::fmt17(r.theta) << ',' << family_name(r.family) << '\n';
    }
    if (!os) {
        throw IoError("error writing " + path);
    }
}

inline TrainingSet read_training_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path);
    }
    std::string line;
    if (!std::getline(is, line) || line != kTrainingCsvHeader) {
        throw FormatError(path + ": unexpected training-set header");
    }
    TrainingSet ts;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        TrainingRow row{};
        for (std::size_t k = 0; k <= kInputDim; ++k) {
            if (!std::getline(ss, cell, ',')) {
                throw FormatError(path + ":" + std::to_string(line_no) + ": too few fields");
            }
            const double v = detail::ModelReader::parse(cell, "training row");
            (k < kInputDim ? row.x[k] : row.theta) = v;
        }
        if (!std::getline(ss, cell, ',')) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": missing family");
        }
        const auto fam = parse_family(cell);
        if (!fam) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": unknown family " + cell);
        }
        row.family = *fam;
        ts.rows.push_back(row);
    }
    return ts;
}

// ---------------------------------------------------------------------------
// Simulation study
// ---------------------------------------------------------------------------

struct StudyConfig {
    std::vector<double> thetas{2.0, 5.0, 10.0};
    std::vector<CopulaFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
    std::size_t n = 10000;        // IGNIS test sample size
    std::size_t mom_n = 100000;   // MoM sample size (A1/A2 only)
    int replicates = 1;
    int bootstrap_replicates = 200;
    bool include_mom = true;
    std::uint64_t seed = 0;
};

/// One estimate in the study table. MoM contributes one row per root, or a
/// single infeasible row with no estimate.
struct StudyRow {
    CopulaFamily family;
    double theta_true;
    std::size_t n;
    int replicate;
    std::string method; // "ignis" or "mom"
    std::optional<double> theta_hat;
    std::optional<double> se;
    std::string note;
};

inline std::vector<StudyRow> run_simulation_study(const IgnisModel& model, const StudyConfig& cfg) {
    if (cfg.replicates < 1) {
        throw DomainError("study: replicates must be at least 1");
    }
    const RandomSource root(cfg.seed);
    std::vector<StudyRow> rows;
    for (std::size_t fi = 0; fi < cfg.families.size(); ++fi) {
        const CopulaFamily f = cfg.families[fi];
        for (std::size_t ti = 0; ti < cfg.thetas.size(); ++ti) {
            const double theta = cfg.thetas[ti];
            for (int rep = 0; rep < cfg.replicates; ++rep) {
                const auto key = static_cast<std::uint64_t>(rep);
                const auto sample = sample_n(
                    f, theta, cfg.n, root.split({family_index(f), ti, key, 0}).seed());
                const BootstrapConfig bcfg{cfg.bootstrap_replicates,
                                           root.split({family_index(f), ti, key, 1}).seed()};
                const auto boot = bootstrap_se(sample.u, sample.v, f, model, bcfg);
                rows.push_back({f, theta, cfg.n, rep, "ignis", boot.theta_hat, boot.se,
                                frank_near_zero(f, boot.theta_hat) ? "frank_near_zero" : ""});

                if (cfg.include_mom && (f == CopulaFamily::A1 || f == CopulaFamily::A2)) {
                    const auto ms = sample_n(f, theta, cfg.mom_n,
                                             root.split({family_index(f), ti, key, 2}).seed());
                    const auto mom = mom_fit(f, ms.u, ms.v);
                    if (!mom.feasible()) {
                        rows.push_back({f, theta, cfg.mom_n, rep, "mom", std::nullopt,
                                        std::nullopt, "infeasible"});
                    }
                    for (std::size_t r = 0; r < mom.roots.size(); ++r) {
                        rows.push_back({f, theta, cfg.mom_n, rep, "mom", mom.roots[r], mom.se[r],
                                        mom.roots.size() > 1 ? "multiple_roots" : ""});
                    }
                }
            }
        }
    }
    return rows;
}

namespace detail {

inline std::string opt_cell(const std::optional<double>& x) {
    return x ? fmt17(*x) : std::string();
}

} // namespace detail

inline constexpr const char* kStudyCsvHeader = "family,theta_true,n,replicate,method,theta_hat,se,note";

inline void write_study_csv(const std::vector<StudyRow>& rows, std::ostream& os) {
    os << kStudyCsvHeader << '\n';
    for (const auto& r : rows) {
        os << family_name(r.family) << ',' << detail::fmt17(r.theta_true) << ',' << r.n << ','
           << r.replicate << ',' << r.method << ',' << detail::opt_cell(r.theta_hat) << ','
           << detail::opt_cell(r.se) << ',' << r.note << '\n';
    }
}

/// IGNIS rows in the layout `copula,true_theta,est_theta,bootstrap_se`,
/// averaged over replicates.
inline void write_table3_csv(const std::vector<StudyRow>& rows, std::ostream& os) {
    os << "copula,true_theta,est_theta,bootstrap_se\n";
    std::vector<std::pair<CopulaFamily, double>> cells;
    for (const auto& r : rows) {
        if (r.method != "ignis") continue;
        const std::pair<CopulaFamily, double> key{r.family, r.theta_true};
        if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
    }
    // Grouped by θ first, as in the published layout.
    std::stable_sort(cells.begin(), cells.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [f, th] : cells) {
        double est = 0.0;
        double se = 0.0;
        int count = 0;
        for (const auto& r : rows) {
            if (r.method == "ignis" && r.family == f && r.theta_true == th) {
                est += *r.theta_hat;
                se += *r.se;
                ++count;
            }
        }
        os << family_name(f) << ',' << detail::fmt17(th) << ',' << detail::fmt17(est / count) << ','
           << detail::fmt17(se / count) << '\n';
    }
}

/// MoM rows in the layout `true_theta,est_theta_a1,se_a1,est_theta_a2,se_a2`
/// (replicate 0). Multiple roots are joined with ';'; infeasible cells are empty.
inline void write_table2_csv(const std::vector<StudyRow>& rows, std::ostream& os) {
    os << "true_theta,est_theta_a1,se_a1,est_theta_a2,se_a2\n";
    std::vector<double> thetas;
    for (const auto& r : rows) {
        if (r.method == "mom" && std::find(thetas.begin(), thetas.end(), r.theta_true) == thetas.end()) {
            thetas.push_back(r.theta_true);
        }
    }
    std::sort(thetas.begin(), thetas.end());
    auto cell = [&](CopulaFamily f, double th, bool want_se) {
        std::string out;
        for (const auto& r : rows) {
            if (r.method != "mom" || r.family != f || r.theta_true != th || r.replicate != 0) continue;
            const auto& v = want_se ? r.se : r.theta_hat;
            if (!v) continue;
            if (!out.empty()) out += ';';
            out += detail::fmt17(*v);
        }
        return out;
    };
    for (double th : thetas) {
        os << detail::fmt17(th) << ',' << cell(CopulaFamily::A1, th, false) << ','
           << cell(CopulaFamily::A1, th, true) << ',' << cell(CopulaFamily::A2, th, false) << ','
           << cell(CopulaFamily::A2, th, true) << '\n';
    }
}

} // namespace ignis
