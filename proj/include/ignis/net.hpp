#pragma once

#include "ignis/error.hpp"
#include "ignis/family.hpp"
#include "ignis/features.hpp"
#include "ignis/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ignis {

/// Fully connected layer; weights are row-major (out × in).
struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;
    std::vector<double> b;

    Dense() = default;
    Dense(std::size_t fan_in, std::size_t fan_out)
        : in(fan_in), out(fan_out), w(fan_in * fan_out, 0.0), b(fan_out, 0.0) {}

    [[nodiscard]] double& weight(std::size_t row, std::size_t col) { return w[row * in + col]; }
    [[nodiscard]] double weight(std::size_t row, std::size_t col) const { return w[row * in + col]; }

    bool operator==(const Dense&) const = default;
};

inline constexpr std::size_t kNumLayers = 4;
inline constexpr std::array<std::pair<std::size_t, std::size_t>, kNumLayers> kLayerShapes = {
    {{kInputDim, 128}, {128, 128}, {128, 64}, {64, 1}}};

using LayerStack = std::array<Dense, kNumLayers>;

inline constexpr double kScalerStdFloor = 1e-8;

/// Per-coordinate z-score (population standard deviation).
struct Scaler {
    ModelInput mean{};
    ModelInput stddev{};
    bool fitted = false;

    [[nodiscard]] ModelInput transform(const ModelInput& x) const {
        ModelInput z{};
        for (std::size_t k = 0; k < kInputDim; ++k) {
            z[k] = (x[k] - mean[k]) / stddev[k];
        }
        return z;
    }

    [[nodiscard]] ModelInput inverse(const ModelInput& z) const {
        ModelInput x{};
        for (std::size_t k = 0; k < kInputDim; ++k) {
            x[k] = z[k] * stddev[k] + mean[k];
        }
        return x;
    }

    bool operator==(const Scaler&) const = default;
};

inline Scaler fit_scaler(std::span<const ModelInput> inputs) {
    if (inputs.size() < 2) {
        throw TooFewObservations("fit_scaler: need at least 2 inputs");
    }
    Scaler s;
    const double n = static_cast<double>(inputs.size());
    for (std::size_t k = 0; k < kInputDim; ++k) {
        double m = 0.0;
        for (const auto& x : inputs) m += x[k];
        m /= n;
        double ss = 0.0;
        for (const auto& x : inputs) ss += (x[k] - m) * (x[k] - m);
        s.mean[k] = m;
        s.stddev[k] = std::max(std::sqrt(ss / n), kScalerStdFloor);
    }
    s.fitted = true;
    return s;
}

struct ModelMeta {
    std::uint64_t seed = 0;
    int epochs_trained = 0;
    double final_val_loss = std::numeric_limits<double>::quiet_NaN();
    /// Whether training compared constrained outputs with the targets.
    bool constrain_in_loss = true;
};

/// The 9 → 128 → 128 → 64 → 1 ReLU network with its input scaler.
struct IgnisModel {
    LayerStack layers;
    Scaler scaler;
    ModelMeta meta;
};

/// He-uniform weights U(−√(6/fan_in), √(6/fan_in)), zero biases.
inline IgnisModel init_model(std::uint64_t seed) {
    IgnisModel m;
    RandomSource rng(seed);
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const auto [fan_in, fan_out] = kLayerShapes[l];
        m.layers[l] = Dense(fan_in, fan_out);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& w : m.layers[l].w) {
            w = rng.uniform(-limit, limit);
        }
    }
    m.meta.seed = seed;
    return m;
}

inline constexpr double kFrankBound = 20.0;
inline constexpr double kFrankFlagThreshold = 0.1;

inline double softplus(double x) noexcept {
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Maps the raw network output into the family's parameter domain:
/// softplus for Clayton, softplus + 1 for Gumbel/A1/A2, 20·tanh for Frank.
/// Clayton is floored at the smallest normal double and Frank is kept strictly
/// inside (−20, 20), so saturated outputs stay in the open domain.
inline double constrain(double raw, CopulaFamily f) noexcept {
    switch (f) {
    case CopulaFamily::Clayton:
        return std::max(softplus(raw), std::numeric_limits<double>::min());
    case CopulaFamily::Frank: {
        constexpr double cap = 0x1.3ffffffffffffp+4; // largest double below 20
        return std::clamp(kFrankBound * std::tanh(raw), -cap, cap);
    }
    case CopulaFamily::Gumbel:
    case CopulaFamily::A1:
    case CopulaFamily::A2: break;
    }
    return softplus(raw) + 1.0;
}

/// d constrain / d raw.
inline double constrain_slope(double raw, CopulaFamily f) noexcept {
    if (f == CopulaFamily::Frank) {
        const double t = std::tanh(raw);
        return kFrankBound * (1.0 - t * t);
    }
    return sigmoid(raw);
}

/// Frank estimates this close to 0 sit in the excluded band of the training range.
inline bool frank_near_zero(CopulaFamily f, double theta) noexcept {
    return f == CopulaFamily::Frank && std::abs(theta) < kFrankFlagThreshold;
}

namespace detail {

// Activations kept for backpropagation: acts[0] is the scaled input,
// acts[l+1] the post-ReLU output of layer l (raw output for the last layer).
struct ForwardTrace {
    std::array<std::vector<double>, kNumLayers + 1> acts;
};

inline double forward_trace(const LayerStack& layers, const ModelInput& scaled, ForwardTrace& tr) {
    tr.acts[0].assign(scaled.begin(), scaled.end());
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const Dense& d = layers[l];
        const auto& in = tr.acts[l];
        auto& out = tr.acts[l + 1];
        out.assign(d.out, 0.0);
        for (std::size_t r = 0; r < d.out; ++r) {
            const double* row = &d.w[r * d.in];
            double z = d.b[r];
            for (std::size_t c = 0; c < d.in; ++c) {
                z += row[c] * in[c];
            }
            out[r] = (l + 1 < kNumLayers) ? std::max(z, 0.0) : z;
        }
    }
    return tr.acts[kNumLayers][0];
}

} // namespace detail

/// Raw (unconstrained) network output.
inline double forward(const IgnisModel& model, const ModelInput& x) {
    if (!model.scaler.fitted) {
        throw ScalerUnset("forward: scaler has not been fitted");
    }
    detail::ForwardTrace tr;
    return detail::forward_trace(model.layers, model.scaler.transform(x), tr);
}

/// A labelled network input.
struct Example {
    ModelInput x;
    double theta;
};

inline double prediction(double raw, CopulaFamily f, bool constrained) {
    return constrained ? constrain(raw, f) : raw;
}

/// Mean squared error of (constrained) predictions against the targets.
inline double loss(const IgnisModel& model, std::span<const Example> batch) {
    if (batch.empty()) {
        throw EmptyBatch("loss: empty batch");
    }
    double total = 0.0;
    for (const auto& ex : batch) {
        const double pred =
            prediction(forward(model, ex.x), input_family(ex.x), model.meta.constrain_in_loss);
        total += (pred - ex.theta) * (pred - ex.theta);
    }
    return total / static_cast<double>(batch.size());
}

/// Gradients with the same shapes as the model layers.
struct Gradients {
    LayerStack layers;
    double loss = 0.0;
};

inline Gradients zero_gradients_like(const LayerStack& layers) {
    Gradients g;
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        g.layers[l] = Dense(layers[l].in, layers[l].out);
    }
    return g;
}

/// Loss and its gradient with respect to every weight and bias.
inline Gradients backward(const IgnisModel& model, std::span<const Example> batch) {
    if (batch.empty()) {
        throw EmptyBatch("backward: empty batch");
    }
    if (!model.scaler.fitted) {
        throw ScalerUnset("backward: scaler has not been fitted");
    }
    Gradients g = zero_gradients_like(model.layers);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    detail::ForwardTrace tr;
    std::vector<double> delta;
    std::vector<double> delta_prev;
    for (const auto& ex : batch) {
        const CopulaFamily fam = input_family(ex.x);
        const double raw = detail::forward_trace(model.layers, model.scaler.transform(ex.x), tr);
        const double pred = prediction(raw, fam, model.meta.constrain_in_loss);
        const double err = pred - ex.theta;
        g.loss += err * err * inv_n;
        const double slope = model.meta.constrain_in_loss ? constrain_slope(raw, fam) : 1.0;
        delta.assign(1, 2.0 * err * slope * inv_n);

        for (std::size_t l = kNumLayers; l-- > 0;) {
            const Dense& d = model.layers[l];
            Dense& gd = g.layers[l];
            const auto& in = tr.acts[l];
            for (std::size_t r = 0; r < d.out; ++r) {
                const double dr = delta[r];
                if (dr == 0.0) {
                    continue;
                }
                gd.b[r] += dr;
                double* grow = &gd.w[r * d.in];
                for (std::size_t c = 0; c < d.in; ++c) {
                    grow[c] += dr * in[c];
                }
            }
            if (l == 0) {
                break;
            }
            delta_prev.assign(d.in, 0.0);
            for (std::size_t r = 0; r < d.out; ++r) {
                const double dr = delta[r];
                if (dr == 0.0) {
                    continue;
                }
                const double* row = &d.w[r * d.in];
                for (std::size_t c = 0; c < d.in; ++c) {
                    delta_prev[c] += dr * row[c];
                }
            }
            // ReLU gate of the previous layer's output.
            for (std::size_t c = 0; c < d.in; ++c) {
                if (in[c] <= 0.0) {
                    delta_prev[c] = 0.0;
                }
            }
            delta.swap(delta_prev);
        }
    }
    return g;
}

/// θ̂ for bivariate data already on the copula scale.
inline double predict(const IgnisModel& model, std::span<const double> u, std::span<const double> v,
                      CopulaFamily f) {
    return constrain(forward(model, encode_input(feature_vector(u, v), f)), f);
}

inline double predict(const IgnisModel& model, const FeatureVector& features, CopulaFamily f) {
    return constrain(forward(model, encode_input(features, f)), f);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr const char* kModelMagic = "IGNIS";
inline constexpr int kModelVersion = 1;

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_values(std::ostream& os, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (i != 0) os << ' ';
        os << fmt17(data[i]);
    }
    os << '\n';
}

class ModelReader {
public:
    explicit ModelReader(std::istream& is) : is_(is) {}

    std::istringstream line(const std::string& expected_key) {
        std::string text;
        if (!std::getline(is_, text)) {
            throw FormatError("model file truncated: expected '" + expected_key + "'");
        }
        ++line_no_;
        std::istringstream ss(text);
        std::string key;
        ss >> key;
        if (key != expected_key) {
            throw FormatError("model file line " + std::to_string(line_no_) + ": expected '" +
                              expected_key + "', found '" + key + "'");
        }
        return ss;
    }

    void values(std::istringstream& ss, double* out, std::size_t n, const std::string& what) {
        for (std::size_t i = 0; i < n; ++i) {
            std::string tok;
            if (!(ss >> tok)) {
                throw FormatError("model file: " + what + " has fewer than " + std::to_string(n) +
                                  " values");
            }
            out[i] = parse(tok, what);
        }
        std::string extra;
        if (ss >> extra) {
            throw FormatError("model file: " + what + " has more than " + std::to_string(n) +
                              " values");
        }
    }

    std::istringstream data_line(const std::string& what) {
        std::string text;
        if (!std::getline(is_, text)) {
            throw FormatError("model file truncated inside " + what);
        }
        ++line_no_;
        return std::istringstream(text);
    }

    static double parse(const std::string& tok, const std::string& what) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') {
            throw FormatError("model file: bad number '" + tok + "' in " + what);
        }
        return v;
    }

private:
    std::istream& is_;
    int line_no_ = 0;
};

} // namespace detail

/// Text format:
///   IGNIS v1
///   shapes 9x128 128x128 128x64 64x1
///   scaler_mean … / scaler_std …
///   seed, epochs_trained, final_val_loss, constrain_in_loss
///   W<i> <rows> <cols> followed by one line per row, then b<i> <n> and its values.
inline void write_model(std::ostream& os, const IgnisModel& m) {
    if (!m.scaler.fitted) {
        throw ScalerUnset("save_model: scaler has not been fitted");
    }
    os << kModelMagic << " v" << kModelVersion << '\n';
    os << "shapes";
    for (const auto& d : m.layers) os << ' ' << d.in << 'x' << d.out;
    os << '\n';
    os << "scaler_mean ";
    detail::write_values(os, m.scaler.mean.data(), kInputDim);
    os << "scaler_std ";
    detail::write_values(os, m.scaler.stddev.data(), kInputDim);
    os << "seed " << m.meta.seed << '\n';
    os << "epochs_trained " << m.meta.epochs_trained << '\n';
    os << "final_val_loss " << detail::fmt17(m.meta.final_val_loss) << '\n';
    os << "constrain_in_loss " << (m.meta.constrain_in_loss ? 1 : 0) << '\n';
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const Dense& d = m.layers[l];
        os << 'W' << (l + 1) << ' ' << d.out << ' ' << d.in << '\n';
        for (std::size_t r = 0; r < d.out; ++r) {
            detail::write_values(os, &d.w[r * d.in], d.in);
        }
        os << 'b' << (l + 1) << ' ' << d.out << '\n';
        detail::write_values(os, d.b.data(), d.out);
    }
}

inline IgnisModel read_model(std::istream& is) {
    detail::ModelReader rd(is);
    IgnisModel m;
    {
        auto ss = rd.line(kModelMagic);
        std::string version;
        ss >> version;
        const std::string expected = "v" + std::to_string(kModelVersion);
        if (version != expected) {
            throw FormatError("model file version mismatch: expected " + expected + ", found " +
                              (version.empty() ? "<none>" : version));
        }
    }
    {
        auto ss = rd.line("shapes");
        for (std::size_t l = 0; l < kNumLayers; ++l) {
            std::string tok;
            ss >> tok;
            const std::string expected = std::to_string(kLayerShapes[l].first) + "x" +
                                         std::to_string(kLayerShapes[l].second);
            if (tok != expected) {
                throw FormatError("model file: layer " + std::to_string(l + 1) + " shape expected " +
                                  expected + ", found " + (tok.empty() ? "<none>" : tok));
            }
        }
    }
    {
        auto ss = rd.line("scaler_mean");
        rd.values(ss, m.scaler.mean.data(), kInputDim, "scaler_mean");
    }
    {
        auto ss = rd.line("scaler_std");
        rd.values(ss, m.scaler.stddev.data(), kInputDim, "scaler_std");
        for (double s : m.scaler.stddev) {
            if (!(s > 0.0)) {
                throw FormatError("model file: scaler_std must be positive");
            }
        }
        m.scaler.fitted = true;
    }
    {
        auto ss = rd.line("seed");
        if (!(ss >> m.meta.seed)) throw FormatError("model file: bad seed");
    }
    {
        auto ss = rd.line("epochs_trained");
        if (!(ss >> m.meta.epochs_trained)) throw FormatError("model file: bad epochs_trained");
    }
    {
        auto ss = rd.line("final_val_loss");
        std::string tok;
        ss >> tok;
        m.meta.final_val_loss = detail::ModelReader::parse(tok, "final_val_loss");
    }
    {
        auto ss = rd.line("constrain_in_loss");
        int flag = -1;
        ss >> flag;
        if (flag != 0 && flag != 1) throw FormatError("model file: constrain_in_loss must be 0 or 1");
        m.meta.constrain_in_loss = flag == 1;
    }
    for (std::size_t l = 0; l < kNumLayers; ++l) {
        const auto [fan_in, fan_out] = kLayerShapes[l];
        Dense d(fan_in, fan_out);
        const std::string wkey = "W" + std::to_string(l + 1);
        {
            auto ss = rd.line(wkey);
            std::size_t rows = 0;
            std::size_t cols = 0;
            ss >> rows >> cols;
            if (rows != fan_out || cols != fan_in) {
                throw FormatError("model file: " + wkey + " expected " + std::to_string(fan_out) +
                                  "x" + std::to_string(fan_in) + ", found " + std::to_string(rows) +
                                  "x" + std::to_string(cols));
            }
        }
        for (std::size_t r = 0; r < fan_out; ++r) {
            auto ss = rd.data_line(wkey);
            rd.values(ss, &d.w[r * fan_in], fan_in, wkey + " row " + std::to_string(r));
        }
        const std::string bkey = "b" + std::to_string(l + 1);
        {
            auto ss = rd.line(bkey);
            std::size_t n = 0;
            ss >> n;
            if (n != fan_out) {
                throw FormatError("model file: " + bkey + " expected " + std::to_string(fan_out) +
                                  " values, found " + std::to_string(n));
            }
        }
        {
            auto ss = rd.data_line(bkey);
            rd.values(ss, d.b.data(), fan_out, bkey);
        }
        m.layers[l] = std::move(d);
    }
    return m;
}

inline void save_model(const IgnisModel& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path + " for writing");
    }
    write_model(os, m);
    if (!os) {
        throw IoError("error writing " + path);
    }
}

inline IgnisModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open model file " + path);
    }
    return read_model(is);
}

} // namespace ignis
