#include "reference.hpp"

#include <ignis/bootstrap.hpp>
#include <ignis/copula.hpp>
#include <ignis/features.hpp>
#include <ignis/ingest.hpp>
#include <ignis/net.hpp>
#include <ignis/pipeline.hpp>
#include <ignis/tau.hpp>
#include <ignis/train.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ignis;

namespace {

constexpr int kExitData = 2;
constexpr int kExitPipeline = 3;

// Thrown by pipeline commands so main can report which stage failed.
struct StageError {
    std::string stage;
    std::string message;
};

template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw StageError{name, e.what()};
    }
}

CopulaFamily family_arg(const std::string& name) {
    const auto f = parse_family(name);
    if (!f) {
        throw DomainError("unknown family '" + name + "' (clayton, gumbel, frank, a1, a2)");
    }
    return *f;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string num(double x) { return detail::fmt17(x); }

void print_features(const FeatureVector& fv) {
    std::printf("tau,rho,tail,pearson\n%s,%s,%s,%s\n", num(fv.tau).c_str(), num(fv.rho).c_str(),
                num(fv.tail).c_str(), num(fv.pearson).c_str());
}

// --- data loading shared by features / estimate / mom ----------------------

struct DataArgs {
    std::string path;
    std::string cols;
    std::string time_col;
    std::string transform = "none";
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool required) {
    auto* data = cmd->add_option("--data", a.path, "CSV file with a header row");
    if (required) data->required();
    cmd->add_option("--cols", a.cols, "two column names, comma separated (one for monthly)");
    cmd->add_option("--time", a.time_col, "ISO-8601 date column; rows are sorted by it");
    cmd->add_option("--transform", a.transform, "none | logret | diff | monthly")
        ->check(CLI::IsMember({"none", "logret", "diff", "monthly"}));
}

PseudoObservations load_pseudo(const DataArgs& a) {
    const auto cols = split_list(a.cols);
    const auto time = a.time_col.empty() ? std::nullopt : std::optional<std::string>(a.time_col);
    if (a.transform == "monthly") {
        if (cols.size() != 1 || !time) {
            throw DomainError("--transform monthly needs one --cols entry and --time");
        }
        const auto s = load_bivariate_csv(a.path, cols[0], cols[0], time);
        const auto m = monthly_aggregate(*s.timestamps, s.x);
        if (s.dropped > 0) std::fprintf(stderr, "dropped %zu unusable rows\n", s.dropped);
        for (const auto& ym : m.skipped) {
            std::fprintf(stderr, "no data for %s\n", ym.str().c_str());
        }
        return pseudo_observations(m.mean, m.p99);
    }
    if (cols.size() != 2) {
        throw DomainError("--cols needs two comma-separated column names");
    }
    auto s = load_bivariate_csv(a.path, cols[0], cols[1], time);
    if (s.dropped > 0) std::fprintf(stderr, "dropped %zu unusable rows\n", s.dropped);
    if (a.transform == "logret") {
        s.x = log_returns(s.x);
        s.y = log_returns(s.y);
    } else if (a.transform == "diff") {
        s.x = difference(s.x);
        s.y = difference(s.y);
    }
    return pseudo_observations(s.x, s.y);
}

// --- config files ------------------------------------------------------------

nlohmann::json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

GenConfig gen_config_from(const nlohmann::json& j) {
    GenConfig c;
    if (j.value("scale", std::string("desk")) == "paper") c = GenConfig::paper_scale();
    c.thetas_per_family = j.value("thetas_per_family", c.thetas_per_family);
    c.obs_per_theta = j.value("obs_per_theta", c.obs_per_theta);
    c.seed = j.value("seed", c.seed);
    if (j.contains("families")) {
        c.families.clear();
        for (const auto& name : j.at("families")) c.families.push_back(family_arg(name.get<std::string>()));
    }
    c.validate();
    return c;
}

TrainConfig train_config_from(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.seed = j.value("seed", c.seed);
    c.constrain_in_loss = j.value("constrain_in_loss", c.constrain_in_loss);
    c.average_decay = j.value("average_decay", c.average_decay);
    c.validate();
    return c;
}

void write_history(const std::vector<EpochRecord>& h, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "epoch,train_loss,val_loss\n";
    for (const auto& r : h) os << r.epoch << ',' << num(r.train_loss) << ',' << num(r.val_loss) << '\n';
    if (!os) throw IoError("error writing " + path);
}

TrainResult train_logged(const TrainingSet& ts, TrainConfig cfg, bool verbose) {
    if (verbose) {
        cfg.on_epoch = [](const EpochRecord& r, const IgnisModel&) {
            if (r.epoch % 50 == 0) {
                std::fprintf(stderr, "epoch %d  train %.4f  val %.4f\n", r.epoch, r.train_loss,
                             r.val_loss);
            }
        };
    }
    const auto examples = ts.examples();
    return train(examples, cfg);
}

// --- subcommands ---------------------------------------------------------------

struct SimulateArgs {
    std::string family;
    double theta = 0.0;
    std::size_t n = 10000;
    std::uint64_t seed = 0;
    std::string out = "sample.csv";
};

int run_simulate(const SimulateArgs& a) {
    const auto f = family_arg(a.family);
    const auto s = sample_n(f, a.theta, a.n, a.seed);
    write_sample_csv(s, a.out);
    print_features(feature_vector(s.u, s.v));
    return 0;
}

int run_features(const DataArgs& d) {
    const auto p = load_pseudo(d);
    print_features(feature_vector(p.u, p.v));
    return 0;
}

struct TrainArgs {
    std::string gen_config;
    std::string train_config;
    std::string model_out = "ignis.model";
    std::string history_out;
    std::string training_csv;
    bool verbose = false;
};

int run_train(const TrainArgs& a) {
    const auto gcfg = stage("config", [&] {
        return a.gen_config.empty() ? GenConfig{} : gen_config_from(read_json(a.gen_config));
    });
    auto tcfg = stage("config", [&] {
        return a.train_config.empty() ? TrainConfig{} : train_config_from(read_json(a.train_config));
    });
    const auto ts = stage("generate", [&] { return build_training_set(gcfg); });
    if (!a.training_csv.empty()) {
        stage("write", [&] { write_training_csv(ts, a.training_csv); });
    }
    const auto result = stage("train", [&] { return train_logged(ts, tcfg, a.verbose); });
    const auto history = a.history_out.empty() ? a.model_out + ".history.csv" : a.history_out;
    stage("write", [&] {
        save_model(result.model, a.model_out);
        write_history(result.history, history);
    });
    std::printf("final_val_loss,%s\nbest_epoch,%d\nepochs,%zu\n",
                num(result.model.meta.final_val_loss).c_str(), result.best_epoch,
                result.history.size());
    return 0;
}

struct EstimateArgs {
    std::string model;
    DataArgs data;
    std::string family;
    int bootstrap = 200;
    std::uint64_t seed = 0;
};

int run_estimate(const EstimateArgs& a) {
    const auto f = family_arg(a.family);
    const auto model = load_model(a.model);
    const auto p = load_pseudo(a.data);
    const double theta_hat = predict(model, p.u, p.v, f);
    std::optional<double> se;
    if (a.bootstrap > 0) {
        se = bootstrap_se(p.u, p.v, f, model, {a.bootstrap, a.seed}).se;
    }
    if (frank_near_zero(f, theta_hat)) {
        std::fprintf(stderr, "warning: frank estimate %.4g is inside (-0.1, 0.1), near independence\n",
                     theta_hat);
    }
    std::printf("family,theta_hat,se,n,method\n%s,%s,%s,%zu,ignis\n",
                std::string(family_name(f)).c_str(), num(theta_hat).c_str(),
                detail::opt_cell(se).c_str(), p.u.size());
    return 0;
}

struct MomArgs {
    DataArgs data;
    std::string family;
    std::optional<double> theta;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
};

int run_mom(const MomArgs& a) {
    const auto f = family_arg(a.family);
    MomResult r;
    if (!a.data.path.empty()) {
        const auto p = load_pseudo(a.data);
        r = mom_fit(f, p.u, p.v);
    } else if (a.theta) {
        const auto s = sample_n(f, *a.theta, a.n, a.seed);
        r = mom_fit(f, s.u, s.v);
    } else {
        throw DomainError("mom needs --data or --theta");
    }
    const std::string fam(family_name(f));
    std::printf("family,tau_hat,theta_hat,se,feasible\n");
    if (!r.feasible()) {
        std::printf("%s,%s,,,false\n", fam.c_str(), num(r.tau_hat).c_str());
    }
    for (std::size_t i = 0; i < r.roots.size(); ++i) {
        std::printf("%s,%s,%s,%s,true\n", fam.c_str(), num(r.tau_hat).c_str(),
                    num(r.roots[i]).c_str(), detail::opt_cell(r.se[i]).c_str());
    }
    return 0;
}

struct TauArgs {
    std::string family;
    std::optional<double> theta;
    std::string curve;
};

int run_tau(const TauArgs& a) {
    const auto f = family_arg(a.family);
    std::vector<double> grid;
    if (!a.curve.empty()) {
        const auto parts = split_list(a.curve, ':');
        if (parts.size() != 3) throw DomainError("--curve expects start:stop:step");
        const auto lo = parse_number(parts[0]);
        const auto hi = parse_number(parts[1]);
        const auto step = parse_number(parts[2]);
        if (!lo || !hi || !step || !(*step > 0.0) || *hi < *lo) {
            throw DomainError("--curve expects start:stop:step with step > 0 and start <= stop");
        }
        const auto count = static_cast<long>(std::floor((*hi - *lo) / *step + 1e-9));
        for (long k = 0; k <= count; ++k) grid.push_back(*lo + static_cast<double>(k) * *step);
    } else if (a.theta) {
        grid.push_back(*a.theta);
    } else {
        throw DomainError("tau needs --theta or --curve");
    }
    for (double th : grid) require_theta(f, th);
    std::printf("family,theta,tau_closed,tau_quadrature,diff\n");
    for (double th : grid) {
        const double c = theoretical_tau(f, th);
        const double q = tau_quadrature(f, th);
        std::printf("%s,%s,%s,%s,%.3e\n", std::string(family_name(f)).c_str(), num(th).c_str(),
                    num(c).c_str(), num(q).c_str(), std::abs(c - q));
    }
    return 0;
}

struct ReproduceArgs {
    std::string scale = "desk";
    std::uint64_t seed = 0;
    std::string outdir = "reproduce";
    std::optional<std::size_t> thetas_per_family;
    std::optional<std::size_t> obs_per_theta;
    std::optional<int> max_epochs;
    std::optional<int> bootstrap;
    std::optional<std::size_t> test_n;
    std::optional<std::size_t> mom_n;
    bool verbose = false;
};

int run_reproduce(const ReproduceArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    GenConfig gcfg = a.scale == "paper" ? GenConfig::paper_scale(a.seed) : GenConfig{};
    gcfg.seed = a.seed;
    if (a.thetas_per_family) gcfg.thetas_per_family = *a.thetas_per_family;
    if (a.obs_per_theta) gcfg.obs_per_theta = *a.obs_per_theta;
    TrainConfig tcfg;
    tcfg.seed = a.seed + 1;
    if (a.max_epochs) tcfg.max_epochs = *a.max_epochs;
    StudyConfig scfg;
    scfg.seed = a.seed + 2;
    if (a.bootstrap) scfg.bootstrap_replicates = *a.bootstrap;
    if (a.test_n) scfg.n = *a.test_n;
    if (a.mom_n) scfg.mom_n = *a.mom_n;

    stage("config", [&] {
        gcfg.validate();
        tcfg.validate();
        fs::create_directories(a.outdir);
    });
    const fs::path out(a.outdir);
    const auto ts = stage("generate", [&] { return build_training_set(gcfg); });
    const auto trained = stage("train", [&] { return train_logged(ts, tcfg, a.verbose); });
    stage("write", [&] {
        save_model(trained.model, (out / "ignis.model").string());
        write_history(trained.history, (out / "history.csv").string());
    });
    const auto rows = stage("study", [&] { return run_simulation_study(trained.model, scfg); });
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stage("report", [&] {
        auto open = [&](const char* name) {
            std::ofstream os(out / name);
            if (!os) throw IoError("cannot open " + (out / name).string());
            return os;
        };
        auto study = open("study.csv");
        write_study_csv(rows, study);
        auto t2 = open("table2.csv");
        write_table2_csv(rows, t2);
        auto t3 = open("table3.csv");
        write_table3_csv(rows, t3);
        auto md = open("report.md");
        write_report(md, rows, {a.scale, gcfg, trained, secs});
    });
    std::printf("wrote %s (%.1f s)\n", a.outdir.c_str(), secs);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural and moment-based estimation of Archimedean copula parameters"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "draw a sample from a copula");
    c_sim->add_option("--family", sim.family)->required();
    c_sim->add_option("--theta", sim.theta)->required();
    c_sim->add_option("--n", sim.n)->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", sim.seed);
    c_sim->add_option("--out", sim.out);

    DataArgs feat;
    auto* c_feat = app.add_subcommand("features", "dependence features of a bivariate CSV");
    add_data_options(c_feat, feat, true);

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "generate training data and fit the network");
    c_train->add_option("--gen-config", tr.gen_config, "JSON data-generation config");
    c_train->add_option("--train-config", tr.train_config, "JSON optimiser config");
    c_train->add_option("--model-out", tr.model_out);
    c_train->add_option("--history-out", tr.history_out, "default: <model-out>.history.csv");
    c_train->add_option("--training-csv", tr.training_csv, "also write the generated rows");
    c_train->add_flag("-v,--verbose", tr.verbose);

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "estimate theta from data with a trained model");
    c_est->add_option("--model", est.model)->required();
    add_data_options(c_est, est.data, true);
    c_est->add_option("--family", est.family)->required();
    c_est->add_option("--bootstrap", est.bootstrap, "replicates; 0 skips the standard error")
        ->check(CLI::NonNegativeNumber);
    c_est->add_option("--seed", est.seed);

    MomArgs mom;
    auto* c_mom = app.add_subcommand("mom", "method-of-moments estimate via Kendall's tau");
    add_data_options(c_mom, mom.data, false);
    c_mom->add_option("--family", mom.family)->required();
    c_mom->add_option("--theta", mom.theta, "simulate instead of reading --data");
    c_mom->add_option("--n", mom.n)->check(CLI::PositiveNumber);
    c_mom->add_option("--seed", mom.seed);

    TauArgs tau;
    auto* c_tau = app.add_subcommand("tau", "theoretical Kendall's tau");
    c_tau->add_option("--family", tau.family)->required();
    auto* tau_theta = c_tau->add_option("--theta", tau.theta);
    c_tau->add_option("--curve", tau.curve, "start:stop:step")->excludes(tau_theta);

    ReproduceArgs rep;
    auto* c_rep = app.add_subcommand("reproduce", "train and run the simulation study end to end");
    c_rep->add_option("--scale", rep.scale)->check(CLI::IsMember({"desk", "paper"}));
    c_rep->add_option("--seed", rep.seed);
    c_rep->add_option("--outdir", rep.outdir);
    c_rep->add_option("--thetas-per-family", rep.thetas_per_family);
    c_rep->add_option("--obs-per-theta", rep.obs_per_theta);
    c_rep->add_option("--max-epochs", rep.max_epochs);
    c_rep->add_option("--bootstrap", rep.bootstrap);
    c_rep->add_option("--test-n", rep.test_n);
    c_rep->add_option("--mom-n", rep.mom_n);
    c_rep->add_flag("-v,--verbose", rep.verbose);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitData;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_feat->parsed()) return run_features(feat);
        if (c_train->parsed()) return run_train(tr);
        if (c_est->parsed()) return run_estimate(est);
        if (c_mom->parsed()) return run_mom(mom);
        if (c_tau->parsed()) return run_tau(tau);
        if (c_rep->parsed()) return run_reproduce(rep);
    } catch (const StageError& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.stage.c_str(), e.message.c_str());
        return kExitPipeline;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitPipeline;
    }
    return kExitData;
}
