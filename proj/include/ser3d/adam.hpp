#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"
#include "ser3d/tensor.hpp"

namespace ser3d {

// Adam with bias correction over a flat list of parameter tensors.
// Moment tensors mirror parameter shapes; step_count advances by exactly
// one per update.
template <typename Scalar>
struct AdamState {
    std::vector<Tensor<Scalar>> first_moment;
    std::vector<Tensor<Scalar>> second_moment;
    std::int64_t step_count = 0;
    double learning_rate = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const std::vector<Tensor<Scalar>>& params, double learning_rate = 3e-3) {
        AdamState st;
        st.learning_rate = learning_rate;
        for (const auto& p : params) {
            st.first_moment.emplace_back(p.shape(), Scalar(0));
            st.second_moment.emplace_back(p.shape(), Scalar(0));
        }
        return st;
    }
};

template <typename Scalar>
void adam_step(std::vector<Tensor<Scalar>>& params, const std::vector<Tensor<Scalar>>& grads,
               AdamState<Scalar>& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw DimensionError("adam_step: parameter/gradient/state count mismatch");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    const double lr = state.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i], grads[i], "adam_step");
        if (!grads[i].all_finite())
            throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i) +
                               " " + shape_str(params[i].shape()));
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::int64_t j = 0; j < params[i].numel(); ++j) {
            const double g = static_cast<double>(grads[i][j]);
            const double mj = state.beta1 * static_cast<double>(m[j]) + (1.0 - state.beta1) * g;
            const double vj = state.beta2 * static_cast<double>(v[j]) + (1.0 - state.beta2) * g * g;
            m[j] = static_cast<Scalar>(mj);
            v[j] = static_cast<Scalar>(vj);
            params[i][j] -= static_cast<Scalar>(lr * (mj / bc1) / (std::sqrt(vj / bc2) + state.epsilon));
        }
    }
}

}  // namespace ser3d
