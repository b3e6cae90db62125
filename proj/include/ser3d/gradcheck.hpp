#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ser3d/tensor.hpp"

namespace ser3d {

// Central finite differences against an analytic gradient, both evaluated
// in 64-bit. `loss` must be a pure function of the tensors it is handed.
// Returns the worst relative error over every coordinate.
inline double gradient_check(const std::function<double(const std::vector<Tensor<double>>&)>& loss,
                             std::vector<Tensor<double>> inputs,
                             const std::vector<Tensor<double>>& analytic_grads,
                             double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::int64_t j = 0; j < inputs[t].numel(); ++j) {
            const double saved = inputs[t][j];
            inputs[t][j] = saved + h;
            const double up = loss(inputs);
            inputs[t][j] = saved - h;
            const double down = loss(inputs);
            inputs[t][j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = analytic_grads[t][j];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
    }
    return worst;
}

}  // namespace ser3d
