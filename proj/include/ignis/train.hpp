#pragma once

#include "ignis/error.hpp"
#include "ignis/net.hpp"
#include "ignis/random.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ignis {

/// avg ← keep·avg + (1 − keep)·cur, parameter-wise.
inline void blend_into(LayerStack& avg, const LayerStack& cur, double keep) {
    for (std::size_t l = 0; l < avg.size(); ++l) {
        for (std::size_t i = 0; i < avg[l].w.size(); ++i) {
            avg[l].w[i] = keep * avg[l].w[i] + (1.0 - keep) * cur[l].w[i];
        }
        for (std::size_t i = 0; i < avg[l].b.size(); ++i) {
            avg[l].b[i] = keep * avg[l].b[i] + (1.0 - keep) * cur[l].b[i];
        }
    }
}

struct EpochRecord {
    int epoch;
    double train_loss;
    double val_loss;
};

struct TrainConfig {
    double learning_rate = 0.0005;
    std::size_t batch_size = 32;
    int max_epochs = 2000;
    // Counted against the averaged model's validation loss, which lags the
    // iterate; 20 epochs stops while the low-θ end is still underfit.
    int patience = 100;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    bool constrain_in_loss = true;
    /// Per-step decay of the parameter moving average that is validated and
    /// snapshotted; 0 validates the raw iterate.
    double average_decay = 0.998;
    /// Called after every epoch with the record and the current (not best) model.
    std::function<void(const EpochRecord&, const IgnisModel&)> on_epoch;

    void validate() const {
        if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
            throw DomainError("TrainConfig: val_fraction must lie in (0,1)");
        }
        if (patience < 1 || max_epochs < 1 || batch_size < 1) {
            throw DomainError("TrainConfig: patience, max_epochs and batch_size must be positive");
        }
        if (!(learning_rate > 0.0)) {
            throw DomainError("TrainConfig: learning_rate must be positive");
        }
        if (!(average_decay >= 0.0 && average_decay < 1.0)) {
            throw DomainError("TrainConfig: average_decay must lie in [0,1)");
        }
    }
};

/// Adam moments for every parameter of a LayerStack.
class AdamState {
public:
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(const LayerStack& like) {
        for (std::size_t l = 0; l < kNumLayers; ++l) {
            m_[l] = Dense(like[l].in, like[l].out);
            v_[l] = Dense(like[l].in, like[l].out);
        }
    }

    [[nodiscard]] std::int64_t step_count() const noexcept { return step_; }

    void step(LayerStack& params, const LayerStack& grads, double lr) {
        ++step_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (std::size_t l = 0; l < kNumLayers; ++l) {
            update(params[l].w, grads[l].w, m_[l].w, v_[l].w, lr, c1, c2);
            update(params[l].b, grads[l].b, m_[l].b, v_[l].b, lr, c1, c2);
        }
    }

private:
    void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, double lr, double c1, double c2) const {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }

    LayerStack m_;
    LayerStack v_;
    std::int64_t step_ = 0;
};


struct TrainResult {
    IgnisModel model;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

/// Seeded Fisher–Yates shuffle.
template <class T>
void shuffle_in_place(std::vector<T>& items, RandomSource& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Mini-batch Adam on MSE with early stopping on a held-out split.
///
/// The scaler is fitted on the training split only. The returned model is
/// the snapshot with the lowest validation loss.
inline TrainResult train(std::span<const Example> dataset, const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.size() < 10) {
        throw TooFewObservations("train: need at least 10 examples, got " +
                                 std::to_string(dataset.size()));
    }
    RandomSource rng(cfg.seed);
    std::vector<std::size_t> idx(dataset.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle_in_place(idx, rng);

    auto n_val = static_cast<std::size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(dataset.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, dataset.size() - 1);
    std::vector<Example> val;
    std::vector<Example> trn;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        (i < n_val ? val : trn).push_back(dataset[idx[i]]);
    }

    IgnisModel model = init_model(cfg.seed);
    {
        std::vector<ModelInput> xs;
        xs.reserve(trn.size());
        for (const auto& e : trn) xs.push_back(e.x);
        model.scaler = fit_scaler(xs);
    }
    model.meta.constrain_in_loss = cfg.constrain_in_loss;

    AdamState adam(model.layers);
    TrainResult result{model, {}, 0};
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    IgnisModel averaged = model;
    const double keep = cfg.average_decay;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle_in_place(trn, rng);
        double train_loss = 0.0;
        for (std::size_t start = 0; start < trn.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(trn.size(), start + cfg.batch_size);
            const std::span<const Example> b(trn.data() + start, end - start);
            const auto g = backward(model, b);
            train_loss += g.loss * static_cast<double>(b.size());
            adam.step(model.layers, g.layers, cfg.learning_rate);
            if (keep > 0.0) blend_into(averaged.layers, model.layers, keep);
        }
        train_loss /= static_cast<double>(trn.size());
        const IgnisModel& current = keep > 0.0 ? averaged : model;
        const double val_loss = loss(current, val);
        result.history.push_back({epoch, train_loss, val_loss});
        if (cfg.on_epoch) cfg.on_epoch(result.history.back(), current);

        if (val_loss < best_val) {
            best_val = val_loss;
            since_best = 0;
            result.model = current;
            result.best_epoch = epoch;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.model.meta.epochs_trained = static_cast<int>(result.history.size());
    result.model.meta.final_val_loss = best_val;
    return result;
}

} // namespace ignis
