#pragma once

// Dense feed-forward PMV surrogate: 2 inputs, four ReLU hidden layers and a
// sigmoid output, trained with Adam on mean squared error.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comfort/dataset.hpp"
#include "comfort/errors.hpp"
#include "comfort/kv_config.hpp"

namespace comfort {

inline constexpr std::size_t kInputWidth = 2;
inline constexpr std::size_t kHiddenLayerCount = 4;

using HiddenWidths = std::array<std::size_t, kHiddenLayerCount>;
inline constexpr HiddenWidths kDefaultHiddenWidths{16, 16, 16, 16};

enum class Activation { Relu, Sigmoid };

inline std::string_view to_string(Activation a) {
    return a == Activation::Relu ? "relu" : "sigmoid";
}

inline double sigmoid(double z) {
    // Split on sign so exp never overflows.
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // row-major, outputs x inputs
    std::vector<double> biases;
    Activation activation = Activation::Relu;

    double& w(std::size_t row, std::size_t col) { return weights[row * inputs + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * inputs + col]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    NormalizationStats norm;

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims;
        if (layers.empty()) return dims;
        dims.push_back(layers.front().inputs);
        for (const auto& l : layers) dims.push_back(l.outputs);
        return dims;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.biases.size();
        return n;
    }

    // Shape and finiteness checks; does not constrain the hidden depth.
    void validate() const {
        if (layers.empty()) throw InvalidArgument("model has no layers");
        if (layers.front().inputs != kInputWidth)
            throw InvalidArgument("model must take exactly 2 inputs");
        if (layers.back().outputs != 1) throw InvalidArgument("model must have one output");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const std::string name = "layer " + std::to_string(i + 1);
            if (l.inputs == 0 || l.outputs == 0) throw InvalidArgument(name + " has zero width");
            if (i > 0 && layers[i - 1].outputs != l.inputs)
                throw InvalidArgument(name + " input width does not match previous layer");
            if (l.weights.size() != l.inputs * l.outputs || l.biases.size() != l.outputs)
                throw InvalidArgument(name + " parameter count does not match its shape");
            const bool last = i + 1 == layers.size();
            if (l.activation != (last ? Activation::Sigmoid : Activation::Relu))
                throw InvalidArgument(name + " has the wrong activation");
            for (double v : l.weights)
                if (!std::isfinite(v)) throw InvalidArgument(name + " has a non-finite weight");
            for (double v : l.biases)
                if (!std::isfinite(v)) throw InvalidArgument(name + " has a non-finite bias");
        }
    }

    bool has_standard_depth() const { return layers.size() == kHiddenLayerCount + 1; }

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

// Builds a zero-initialized network with the given hidden widths (any depth).
inline MlpModel make_model_shape(std::span<const std::size_t> hidden_widths) {
    MlpModel model;
    std::size_t in = kInputWidth;
    for (std::size_t width : hidden_widths) {
        if (width == 0) throw InvalidArgument("hidden layer width must be positive");
        model.layers.push_back({in, width, std::vector<double>(in * width, 0.0),
                                std::vector<double>(width, 0.0), Activation::Relu});
        in = width;
    }
    model.layers.push_back(
        {in, 1, std::vector<double>(in, 0.0), std::vector<double>(1, 0.0), Activation::Sigmoid});
    return model;
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline MlpModel init_model(const HiddenWidths& hidden_widths, std::uint64_t seed) {
    MlpModel model = make_model_shape(hidden_widths);
    std::mt19937_64 rng(seed);
    for (auto& layer : model.layers) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
        for (auto& w : layer.weights) w = scale * (2.0 * detail::uniform01(rng) - 1.0);
        for (auto& b : layer.biases) b = scale * (2.0 * detail::uniform01(rng) - 1.0);
    }
    return model;
}

namespace detail {

// Per-layer post-activation values for one sample; [0] is the input.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;
};

inline void forward_into(const MlpModel& model, const std::array<double, 2>& input,
                         ForwardTrace& trace) {
    trace.activations.resize(model.layers.size() + 1);
    trace.activations[0].assign(input.begin(), input.end());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& layer = model.layers[li];
        const auto& in = trace.activations[li];
        auto& out = trace.activations[li + 1];
        out.resize(layer.outputs);
        for (std::size_t r = 0; r < layer.outputs; ++r) {
            double z = layer.biases[r];
            const double* row = &layer.weights[r * layer.inputs];
            for (std::size_t c = 0; c < layer.inputs; ++c) z += row[c] * in[c];
            out[r] = layer.activation == Activation::Relu ? (z > 0.0 ? z : 0.0) : sigmoid(z);
        }
    }
}

}  // namespace detail

// Normalized (temperature, humidity) -> normalized PMV in (0, 1).
inline double forward(const MlpModel& model, const std::array<double, 2>& input) {
    detail::ForwardTrace trace;
    detail::forward_into(model, input, trace);
    return trace.activations.back()[0];
}

// Parameter-shaped gradient buffers.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MlpModel& model) {
        Gradients g;
        for (const auto& l : model.layers) {
            g.weights.emplace_back(l.weights.size(), 0.0);
            g.biases.emplace_back(l.biases.size(), 0.0);
        }
        return g;
    }
};

// Mean squared error over the given samples and its exact gradient.
inline double loss_and_gradient(const MlpModel& model,
                                std::span<const std::array<double, 2>> inputs,
                                std::span<const double> targets, Gradients& grad) {
    grad = Gradients::zeros_like(model);
    const std::size_t n = targets.size();
    if (n == 0) return 0.0;

    detail::ForwardTrace trace;
    std::vector<double> delta;
    std::vector<double> next_delta;
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t s = 0; s < n; ++s) {
        detail::forward_into(model, inputs[s], trace);
        const double y = trace.activations.back()[0];
        const double err = y - targets[s];
        loss += err * err;

        // dL/dz at the sigmoid output.
        delta.assign(1, 2.0 * err * inv_n * y * (1.0 - y));
        for (std::size_t li = model.layers.size(); li-- > 0;) {
            const auto& layer = model.layers[li];
            const auto& in = trace.activations[li];
            auto& gw = grad.weights[li];
            auto& gb = grad.biases[li];
            for (std::size_t r = 0; r < layer.outputs; ++r) {
                gb[r] += delta[r];
                double* grow = &gw[r * layer.inputs];
                for (std::size_t c = 0; c < layer.inputs; ++c) grow[c] += delta[r] * in[c];
            }
            if (li == 0) break;
            // Back through the weights and the previous layer's ReLU.
            next_delta.assign(layer.inputs, 0.0);
            for (std::size_t r = 0; r < layer.outputs; ++r) {
                const double* row = &layer.weights[r * layer.inputs];
                for (std::size_t c = 0; c < layer.inputs; ++c) next_delta[c] += row[c] * delta[r];
            }
            for (std::size_t c = 0; c < layer.inputs; ++c)
                if (in[c] <= 0.0) next_delta[c] = 0.0;
            delta.swap(next_delta);
        }
    }
    return loss * inv_n;
}

struct TrainConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    std::uint64_t seed = 7;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw InvalidArgument("learning rate must be positive");
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
            throw InvalidArgument("Adam betas must lie in [0, 1)");
        if (!(adam_epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
        if (batch_size == 0) throw InvalidArgument("batch size must be at least 1");
        if (epochs == 0) throw InvalidArgument("epochs must be at least 1");
    }
};

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_history;  // mean training loss per epoch
    // Finite but failed: the last epoch ended with a higher loss than the
    // first (typically a saturated sigmoid after an oversized step).
    bool diverged = false;
};

namespace detail {

inline bool all_finite(const MlpModel& model) {
    for (const auto& l : model.layers) {
        for (double v : l.weights)
            if (!std::isfinite(v)) return false;
        for (double v : l.biases)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace detail

// Mini-batch Adam. The epoch loss is the sample-weighted mean of batch losses
// seen during the epoch. Any non-finite loss or parameter raises DivergedTraining.
inline TrainResult train(MlpModel model, const NormalizedSplit& data, const TrainConfig& config) {
    config.validate();
    model.validate();
    if (data.empty()) throw InvalidArgument("training split is empty");
    if (data.inputs.size() != data.targets.size())
        throw InvalidArgument("training inputs and targets differ in length");

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Gradients m = Gradients::zeros_like(model);
    Gradients v = Gradients::zeros_like(model);
    Gradients grad;
    std::vector<std::array<double, 2>> batch_x;
    std::vector<double> batch_y;
    std::mt19937_64 rng(config.seed);
    std::uint64_t step = 0;

    TrainResult result;
    result.loss_history.reserve(config.epochs);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(detail::uniform01(rng) * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch_x.push_back(data.inputs[order[k]]);
                batch_y.push_back(data.targets[order[k]]);
            }
            const double loss = loss_and_gradient(model, batch_x, batch_y, grad);
            if (!std::isfinite(loss))
                throw DivergedTraining("training loss became non-finite", epoch + 1);
            epoch_loss += loss * static_cast<double>(end - start);

            ++step;
            const double c1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
            const auto update = [&](std::vector<double>& param, const std::vector<double>& g,
                                    std::vector<double>& m1, std::vector<double>& m2) {
                for (std::size_t p = 0; p < param.size(); ++p) {
                    m1[p] = config.adam_beta1 * m1[p] + (1.0 - config.adam_beta1) * g[p];
                    m2[p] = config.adam_beta2 * m2[p] + (1.0 - config.adam_beta2) * g[p] * g[p];
                    const double mhat = m1[p] / c1;
                    const double vhat = m2[p] / c2;
                    param[p] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
                }
            };
            for (std::size_t li = 0; li < model.layers.size(); ++li) {
                update(model.layers[li].weights, grad.weights[li], m.weights[li], v.weights[li]);
                update(model.layers[li].biases, grad.biases[li], m.biases[li], v.biases[li]);
            }
        }
        epoch_loss /= static_cast<double>(n);
        if (!std::isfinite(epoch_loss) || !detail::all_finite(model))
            throw DivergedTraining("parameters became non-finite", epoch + 1);
        result.loss_history.push_back(epoch_loss);
    }
    result.diverged = result.loss_history.back() > result.loss_history.front();
    result.model = std::move(model);
    return result;
}

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    double r_squared = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

inline Metrics compute_metrics(std::span<const double> predictions, std::span<const double> targets) {
    if (targets.empty()) throw InvalidArgument("cannot evaluate on an empty split");
    if (predictions.size() != targets.size())
        throw InvalidArgument("prediction and target counts differ");
    const double n = static_cast<double>(targets.size());
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= n;

    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double r = predictions[i] - targets[i];
        ss_res += r * r;
        abs_sum += std::abs(r);
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
    }
    if (ss_tot == 0.0) throw UndefinedR2("targets have zero variance; R^2 is undefined");
    return {ss_res / n, abs_sum / n, 1.0 - ss_res / ss_tot};
}

// Metrics in normalized target space.
inline Metrics evaluate(const MlpModel& model, const NormalizedSplit& data) {
    if (data.empty()) throw InvalidArgument("cannot evaluate on an empty split");
    std::vector<double> predictions;
    predictions.reserve(data.size());
    for (const auto& x : data.inputs) predictions.push_back(forward(model, x));
    return compute_metrics(predictions, data.targets);
}

struct PmvPrediction {
    double pmv = 0.0;
    double normalized_output = 0.0;
    bool out_of_domain = false;  // inputs outside the training box
};

inline PmvPrediction predict_pmv(const MlpModel& model, double temp_c, double rh_pct) {
    PmvPrediction p;
    p.out_of_domain = !in_dataset_box(temp_c, rh_pct);
    p.normalized_output = forward(model, model.norm.normalize_input(temp_c, rh_pct));
    p.pmv = model.norm.denormalize_target(p.normalized_output);
    return p;
}

// ---------------------------------------------------------------------------
// Weight file, format version 1. Whitespace-separated tokens, one record per
// line, numbers printed with 17 significant digits:
//
//   comfort-mlp
//   version 1
//   layer_dims 2 16 16 16 16 1
//   activations relu relu relu relu sigmoid
//   input_temp_min <v>
//   input_temp_max <v>
//   input_rh_pct_min <v>
//   input_rh_pct_max <v>
//   target_min <v>
//   target_max <v>
//   layer <k> <outputs> <inputs>      (k = 1..L)
//   w <inputs values>                 (repeated <outputs> times, row-major)
//   b <outputs values>
//   end

inline constexpr int kWeightFormatVersion = 1;

inline void save_model(std::ostream& out, const MlpModel& model) {
    model.validate();
    const auto g = [](double v) { return detail::format_g(v, 17); };
    out << "comfort-mlp\n";
    out << "version " << kWeightFormatVersion << '\n';
    out << "layer_dims";
    for (auto d : model.layer_dims()) out << ' ' << d;
    out << "\nactivations";
    for (const auto& l : model.layers) out << ' ' << to_string(l.activation);
    out << '\n';
    out << "input_temp_min " << g(model.norm.temp_min) << '\n'
        << "input_temp_max " << g(model.norm.temp_max) << '\n'
        << "input_rh_pct_min " << g(model.norm.rh_min_pct) << '\n'
        << "input_rh_pct_max " << g(model.norm.rh_max_pct) << '\n'
        << "target_min " << g(model.norm.target_min) << '\n'
        << "target_max " << g(model.norm.target_max) << '\n';
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& l = model.layers[li];
        out << "layer " << li + 1 << ' ' << l.outputs << ' ' << l.inputs << '\n';
        for (std::size_t r = 0; r < l.outputs; ++r) {
            out << 'w';
            for (std::size_t c = 0; c < l.inputs; ++c) out << ' ' << g(l.w(r, c));
            out << '\n';
        }
        out << 'b';
        for (double b : l.biases) out << ' ' << g(b);
        out << '\n';
    }
    out << "end\n";
}

inline void save_model(const std::string& path, const MlpModel& model) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model to '" + path + "'");
    save_model(out, model);
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace detail {

class TokenLines {
public:
    TokenLines(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    // Next non-blank line split into tokens; fails at end of input.
    std::vector<std::string> next(const std::string& expecting) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            std::istringstream ss(line);
            std::vector<std::string> tokens;
            for (std::string t; ss >> t;) tokens.push_back(t);
            if (!tokens.empty()) return tokens;
        }
        throw ParseError(source_, line_ + 1, "unexpected end of file, expected " + expecting);
    }

    std::vector<std::string> expect(const std::string& keyword) {
        auto tokens = next("'" + keyword + "'");
        if (tokens[0] != keyword)
            fail("expected '" + keyword + "', found '" + tokens[0] + "'");
        return tokens;
    }

    double number(const std::string& token, const std::string& field) const {
        double v = 0.0;
        if (!parse_double(token, v)) fail(field + ": not a number: '" + token + "'");
        if (!std::isfinite(v)) fail(field + ": non-finite value");
        return v;
    }

    std::size_t count(const std::string& token, const std::string& field) const {
        unsigned long long v = 0;
        if (!parse_uint64(token, v)) fail(field + ": not a non-negative integer: '" + token + "'");
        return static_cast<std::size_t>(v);
    }

    double scalar(const std::string& keyword) {
        auto tokens = expect(keyword);
        if (tokens.size() != 2) fail(keyword + ": expected exactly one value");
        return number(tokens[1], keyword);
    }

    [[noreturn]] void fail(const std::string& detail) const {
        throw ParseError(source_, line_, detail);
    }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_ = 0;
};

}  // namespace detail

inline MlpModel load_model(std::istream& in, const std::string& source) {
    detail::TokenLines lines(in, source);

    auto magic = lines.next("'comfort-mlp'");
    if (magic.size() != 1 || magic[0] != "comfort-mlp") lines.fail("not a comfort-mlp weight file");

    auto version = lines.expect("version");
    if (version.size() != 2 || version[1] != std::to_string(kWeightFormatVersion))
        lines.fail("unsupported weight file version");

    auto dims_tokens = lines.expect("layer_dims");
    std::vector<std::size_t> dims;
    for (std::size_t i = 1; i < dims_tokens.size(); ++i)
        dims.push_back(lines.count(dims_tokens[i], "layer_dims"));
    if (dims.size() != kHiddenLayerCount + 2)
        lines.fail("layer_dims: expected input, 4 hidden and output widths");
    if (dims.front() != kInputWidth || dims.back() != 1)
        lines.fail("layer_dims: must start with 2 and end with 1");
    for (auto d : dims)
        if (d == 0) lines.fail("layer_dims: zero width");
    const std::size_t n_layers = dims.size() - 1;

    auto act_tokens = lines.expect("activations");
    if (act_tokens.size() != n_layers + 1)
        lines.fail("activations: expected " + std::to_string(n_layers) + " names");
    std::vector<Activation> acts;
    for (std::size_t i = 1; i < act_tokens.size(); ++i) {
        if (act_tokens[i] == "relu") acts.push_back(Activation::Relu);
        else if (act_tokens[i] == "sigmoid") acts.push_back(Activation::Sigmoid);
        else lines.fail("activations: unknown activation '" + act_tokens[i] + "'");
    }

    MlpModel model;
    model.norm.temp_min = lines.scalar("input_temp_min");
    model.norm.temp_max = lines.scalar("input_temp_max");
    model.norm.rh_min_pct = lines.scalar("input_rh_pct_min");
    model.norm.rh_max_pct = lines.scalar("input_rh_pct_max");
    model.norm.target_min = lines.scalar("target_min");
    model.norm.target_max = lines.scalar("target_max");

    for (std::size_t li = 0; li < n_layers; ++li) {
        const std::string name = "layer " + std::to_string(li + 1);
        auto header = lines.expect("layer");
        if (header.size() != 4) lines.fail(name + ": expected 'layer <k> <outputs> <inputs>'");
        if (lines.count(header[1], "layer index") != li + 1)
            lines.fail("expected " + name + ", found layer " + header[1]);
        const std::size_t outputs = lines.count(header[2], name + " outputs");
        const std::size_t inputs = lines.count(header[3], name + " inputs");
        if (outputs != dims[li + 1] || inputs != dims[li])
            lines.fail(name + ": declared shape " + header[2] + "x" + header[3] +
                       " does not match layer_dims " + std::to_string(dims[li + 1]) + "x" +
                       std::to_string(dims[li]));

        DenseLayer layer{inputs, outputs, {}, {}, acts[li]};
        layer.weights.reserve(inputs * outputs);
        for (std::size_t r = 0; r < outputs; ++r) {
            auto row = lines.next(name + " weight row " + std::to_string(r + 1));
            if (row[0] != "w")
                lines.fail(name + ": expected weight row " + std::to_string(r + 1) + " of " +
                           std::to_string(outputs) + ", found '" + row[0] + "'");
            if (row.size() != inputs + 1)
                lines.fail(name + ": weight row " + std::to_string(r + 1) + " has " +
                           std::to_string(row.size() - 1) + " values, expected " +
                           std::to_string(inputs));
            for (std::size_t c = 1; c < row.size(); ++c)
                layer.weights.push_back(lines.number(row[c], name + " weight"));
        }
        auto biases = lines.next(name + " biases");
        if (biases[0] != "b") lines.fail(name + ": expected bias row, found '" + biases[0] + "'");
        if (biases.size() != outputs + 1)
            lines.fail(name + ": bias row has " + std::to_string(biases.size() - 1) +
                       " values, expected " + std::to_string(outputs));
        for (std::size_t c = 1; c < biases.size(); ++c)
            layer.biases.push_back(lines.number(biases[c], name + " bias"));
        model.layers.push_back(std::move(layer));
    }
    auto tail = lines.next("'end'");
    if (tail.size() != 1 || tail[0] != "end") lines.fail("expected 'end' after the last layer");

    try {
        model.norm.validate();
        model.validate();
    } catch (const ComfortError& e) {
        lines.fail(e.what());
    }
    return model;
}

inline MlpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model '" + path + "'");
    return load_model(in, path);
}

}  // namespace comfort
