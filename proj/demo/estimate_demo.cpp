// Trains a small IGNIS model, then compares it with the moment estimator on
// one A2 sample.
//
//   estimate_demo [theta] [seed]

#include <ignis/bootstrap.hpp>
#include <ignis/copula.hpp>
#include <ignis/pipeline.hpp>
#include <ignis/tau.hpp>
#include <ignis/train.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    using namespace ignis;
    const double theta = argc > 1 ? std::atof(argv[1]) : 4.0;
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;

    // A reduced training run; the CLI's `reproduce` uses the full desk scale.
    GenConfig gen;
    gen.thetas_per_family = 400;
    gen.obs_per_theta = 1000;
    gen.families = {CopulaFamily::A2};
    gen.seed = seed;
    const auto data = build_training_set(gen);

    TrainConfig cfg;
    cfg.seed = seed;
    cfg.max_epochs = 400;
    const auto fit = train(data.examples(), cfg);
    std::printf("trained %zu epochs, validation MSE %.4f\n", fit.history.size(),
                fit.model.meta.final_val_loss);

    const auto sample = sample_n(CopulaFamily::A2, theta, 5000, seed + 1);
    const auto boot = bootstrap_se(sample.u, sample.v, CopulaFamily::A2, fit.model, {100, seed});
    std::printf("true theta   %.3f\n", theta);
    std::printf("ignis        %.3f  (bootstrap se %.3f)\n", boot.theta_hat, boot.se);

    const auto mom = mom_fit(CopulaFamily::A2, sample.u, sample.v);
    if (!mom.feasible()) {
        std::printf("moments      infeasible (tau %.3f below the family's range)\n", mom.tau_hat);
    }
    for (std::size_t i = 0; i < mom.roots.size(); ++i) {
        std::printf("moments      %.3f  (delta-method se %.3f)\n", mom.roots[i], mom.se[i].value_or(NAN));
    }
    return 0;
}
