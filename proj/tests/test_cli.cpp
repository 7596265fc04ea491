#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "ignis_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    const auto err_path = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && '" IGNIS_CLI_PATH "' " + args + " 2>'" +
                            err_path.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err_path)};
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream is(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) ++n;
    return n;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(Cli, SimulateWritesSampleAndFeatures) {
    const auto r = run("simulate --family a2 --theta 2 --n 50000 --seed 1 --out a2.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(workdir() / "a2.csv"), 50001u);
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"tau", "rho", "tail", "pearson"}));
    EXPECT_NEAR(std::stod(rows[1][0]), 0.7726, 0.01);

    ASSERT_EQ(run("simulate --family a2 --theta 2 --n 50000 --seed 1 --out a2_again.csv").code, 0);
    EXPECT_EQ(slurp(workdir() / "a2.csv"), slurp(workdir() / "a2_again.csv"));
}

TEST(Cli, SimulateAcceptsNegativeFrank) {
    const auto r = run("simulate --family frank --theta -5 --n 2000 --seed 2 --out frank.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(std::stod(csv_rows(r.out)[1][0]), 0.0);
}

TEST(Cli, DomainErrorsExitTwo) {
    const auto r = run("simulate --family gumbel --theta 0.5 --out x.csv");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("θ ≥ 1 required"), std::string::npos) << r.err;
    EXPECT_EQ(run("simulate --family nope --theta 2").code, 2);
    EXPECT_EQ(run("tau --family a2 --theta 0.5").code, 2);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("tau --family a2 --theta 1 --bogus").code, 2);
    EXPECT_EQ(run("tau --family a2 --theta 1 simulate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, TauReportsBothEvaluations) {
    const auto r = run("tau --family a2 --theta 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"family", "theta", "tau_closed", "tau_quadrature", "diff"}));
    EXPECT_NEAR(std::stod(rows[1][2]), 0.5452, 1e-4);
    EXPECT_NEAR(std::stod(rows[1][3]), 0.5452, 1e-4);
    EXPECT_LT(std::stod(rows[1][4]), 1e-8);

    const auto c = csv_rows(run("tau --family clayton --theta 2").out);
    EXPECT_DOUBLE_EQ(std::stod(c[1][2]), 0.5);
}

TEST(Cli, TauCurve) {
    const auto r = run("tau --family a1 --curve 1:20:0.1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 192u);
    EXPECT_DOUBLE_EQ(std::stod(rows[1][1]), 1.0);
    EXPECT_NEAR(std::stod(rows.back()[1]), 20.0, 1e-9);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][4]), 1e-6);
    EXPECT_EQ(run("tau --family a1 --curve 1:20").code, 2);
    EXPECT_EQ(run("tau --family a1").code, 2);
}

TEST(Cli, MomFromSimulation) {
    const auto r = run("mom --family a2 --theta 2 --n 100000 --seed 3");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"family", "tau_hat", "theta_hat", "se", "feasible"}));
    EXPECT_NEAR(std::stod(rows[1][2]), 1.90, 0.2);
    EXPECT_GT(std::stod(rows[1][3]), 0.0);
    EXPECT_EQ(rows[1][4], "true");
}

TEST(Cli, MomInfeasibleIsDataOutcome) {
    // Clayton with τ = 0.3 sits below the A2 range.
    ASSERT_EQ(run("simulate --family clayton --theta 0.857142857 --n 20000 --seed 4 --out low.csv").code, 0);
    const auto r = run("mom --family a2 --data low.csv --cols u,v");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(std::stod(rows[1][1]), 0.3, 0.02);
    EXPECT_EQ(rows[1][4], "false");
}

TEST(Cli, FeaturesFromCsv) {
    write_file(workdir() / "prices.csv",
               "date,a,b\n2020-01-03,101,50.5\n2020-01-01,100,50\n2020-01-02,102,NA\n2020-01-04,99,51\n"
               "2020-01-05,103,52\n2020-01-06,104,51.5\n");
    const auto r = run("features --data prices.csv --cols a,b --time date --transform logret");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("dropped 1"), std::string::npos);
    EXPECT_EQ(csv_rows(r.out)[0], (std::vector<std::string>{"tau", "rho", "tail", "pearson"}));
    EXPECT_EQ(run("features --data prices.csv --cols a,zzz").code, 2);
    EXPECT_EQ(run("features --data missing.csv --cols a,b").code, 2);
}

TEST(Cli, TrainEstimateRoundTrip) {
    write_file(workdir() / "gen.json", R"({"thetas_per_family": 20, "obs_per_theta": 300, "seed": 5})");
    write_file(workdir() / "opt.json", R"({"max_epochs": 15, "seed": 6})");
    const auto r = run("train --gen-config gen.json --train-config opt.json --model-out small.model");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("final_val_loss"), std::string::npos);
    const auto history = workdir() / "small.model.history.csv";
    EXPECT_EQ(line_count(history), 16u);

    const auto again = run("train --gen-config gen.json --train-config opt.json --model-out small2.model");
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(slurp(workdir() / "small.model"), slurp(workdir() / "small2.model"));

    ASSERT_EQ(run("simulate --family gumbel --theta 3 --n 3000 --seed 8 --out g.csv").code, 0);
    const auto e = run("estimate --model small.model --data g.csv --cols u,v --family gumbel --bootstrap 0");
    ASSERT_EQ(e.code, 0) << e.err;
    const auto rows = csv_rows(e.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"family", "theta_hat", "se", "n", "method"}));
    EXPECT_EQ(rows[1][0], "gumbel");
    EXPECT_GE(std::stod(rows[1][1]), 1.0);
    EXPECT_EQ(rows[1][2], "");
    EXPECT_EQ(rows[1][3], "3000");
    EXPECT_EQ(rows[1][4], "ignis");

    const auto b = run("estimate --model small.model --data g.csv --cols u,v --family gumbel --bootstrap 20 --seed 1");
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_GT(std::stod(csv_rows(b.out)[1][2]), 0.0);

    EXPECT_EQ(run("estimate --model nothere.model --data g.csv --cols u,v --family gumbel").code, 2);
}

TEST(Cli, TrainConfigErrorsExitThree) {
    write_file(workdir() / "bad.json", R"({"obs_per_theta": 5})");
    const auto r = run("train --gen-config bad.json --model-out bad.model");
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("[config]"), std::string::npos) << r.err;
    write_file(workdir() / "broken.json", "{not json");
    EXPECT_EQ(run("train --gen-config broken.json").code, 3);
}

TEST(Cli, DeskModelEstimatesA1) {
    const auto t = run("train --model-out desk.model");
    ASSERT_EQ(t.code, 0) << t.err;
    ASSERT_EQ(run("simulate --family a1 --theta 5 --n 10000 --seed 9 --out a1.csv").code, 0);
    const auto e = run("estimate --model desk.model --data a1.csv --cols u,v --family a1 --bootstrap 50");
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NEAR(std::stod(csv_rows(e.out)[1][1]), 5.0, 0.5);
}

TEST(Cli, ReproduceSmallRun) {
    const auto r = run("reproduce --outdir rep --seed 2 --thetas-per-family 10 --obs-per-theta 300 "
                       "--max-epochs 5 --bootstrap 3 --test-n 500 --mom-n 2000");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto dir = workdir() / "rep";
    EXPECT_EQ(line_count(dir / "table3.csv"), 16u);
    EXPECT_EQ(line_count(dir / "table2.csv"), 4u);
    EXPECT_EQ(line_count(dir / "history.csv"), 6u);
    EXPECT_TRUE(fs::exists(dir / "ignis.model"));
    const auto report = slurp(dir / "report.md");
    EXPECT_NE(report.find("| a2 |"), std::string::npos);
    for (const auto& row : csv_rows(slurp(dir / "table3.csv"))) {
        if (row[0] == "copula") continue;
        const double est = std::stod(row[2]);
        if (row[0] == "frank") {
            EXPECT_LT(std::abs(est), 20.0);
        } else if (row[0] == "clayton") {
            EXPECT_GT(est, 0.0);
        } else {
            EXPECT_GE(est, 1.0);
        }
    }
    EXPECT_EQ(run("reproduce --scale huge").code, 2);
}
