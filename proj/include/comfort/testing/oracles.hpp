#pragma once

// Independent reference computations used to certify the production paths:
// a bracketing root finder for the clothing temperature and a
// finite-difference gradient for the network loss. Neither shares code with
// the Newton solver or with backpropagation.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "comfort/comfort_core.hpp"
#include "comfort/errors.hpp"
#include "comfort/mlp.hpp"

namespace comfort::testing {

// Bisection on clothing_balance_residual over [lo, hi].
inline double bisect_clothing_temperature(const EnvironmentSample& sample,
                                          const OccupantProfile& occupant, double lo = 0.0,
                                          double hi = 60.0, int iterations = 200) {
    double f_lo = clothing_balance_residual(lo, sample, occupant);
    const double f_hi = clothing_balance_residual(hi, sample, occupant);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0))
        throw InvalidArgument("bisection bracket does not straddle a root");
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = clothing_balance_residual(mid, sample, occupant);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13) break;
    }
    return 0.5 * (lo + hi);
}

// Mean squared error by plain forward evaluation.
inline double mse_loss(const MlpModel& model, std::span<const std::array<double, 2>> inputs,
                       std::span<const double> targets) {
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double e = forward(model, inputs[i]) - targets[i];
        sum += e * e;
    }
    return sum / static_cast<double>(targets.size());
}

// Central-difference gradient of mse_loss, flattened layer by layer as
// weights then biases.
inline std::vector<double> finite_difference_gradient(MlpModel model,
                                                      std::span<const std::array<double, 2>> inputs,
                                                      std::span<const double> targets,
                                                      double step = 1e-5) {
    std::vector<double> grad;
    const auto probe = [&](double& param) {
        const double saved = param;
        param = saved + step;
        const double up = mse_loss(model, inputs, targets);
        param = saved - step;
        const double down = mse_loss(model, inputs, targets);
        param = saved;
        grad.push_back((up - down) / (2.0 * step));
    };
    for (auto& layer : model.layers) {
        for (auto& w : layer.weights) probe(w);
        for (auto& b : layer.biases) probe(b);
    }
    return grad;
}

inline std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (std::size_t li = 0; li < g.weights.size(); ++li) {
        out.insert(out.end(), g.weights[li].begin(), g.weights[li].end());
        out.insert(out.end(), g.biases[li].begin(), g.biases[li].end());
    }
    return out;
}

// |a - b| / max(|a|, |b|), with exact agreement (including 0 == 0) scoring 0.
inline double relative_error(double a, double b, double floor = 1e-10) {
    const double diff = std::abs(a - b);
    if (diff == 0.0) return 0.0;
    return diff / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace comfort::testing
