#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"
#include "ser3d/rng.hpp"
#include "ser3d/tensor.hpp"

// Utterance-level statistical functionals over the per-step softmax
// outputs, and the Extreme Learning Machine on top of them: frozen random
// input weights, ridge-solved output weights.

namespace ser3d {

struct FunctionalConfig {
    double threshold = 0.2;  // per-class fraction of steps above this
    // 4 functionals per class: max, min, mean, fraction > threshold
    static constexpr int kPerClass = 4;
};

// [steps, classes] probabilities -> class-major 4*classes feature vector.
inline std::vector<double> functionals(const Tensor<float>& per_step_probs,
                                       const FunctionalConfig& cfg = FunctionalConfig{}) {
    if (per_step_probs.rank() != 2)
        throw DataError("functionals: expected [steps, classes], got " + shape_str(per_step_probs.shape()));
    const int steps = per_step_probs.extent(0);
    const int classes = per_step_probs.extent(1);
    for (int l = 0; l < steps; ++l) {
        double row_sum = 0.0;
        for (int k = 0; k < classes; ++k) {
            const double p = per_step_probs.at({l, k});
            if (p < -1e-6 || p > 1.0 + 1e-6)
                throw DataError("functionals: step " + std::to_string(l) + " is not a probability row");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-4)
            throw DataError("functionals: step " + std::to_string(l) + " probabilities sum to " + std::to_string(row_sum));
    }
    std::vector<double> feat(static_cast<std::size_t>(classes) * FunctionalConfig::kPerClass);
    for (int k = 0; k < classes; ++k) {
        double mx = -1.0, mn = 2.0, sum = 0.0;
        int above = 0;
        for (int l = 0; l < steps; ++l) {
            const double p = per_step_probs.at({l, k});
            mx = std::max(mx, p);
            mn = std::min(mn, p);
            sum += p;
            if (p > cfg.threshold) ++above;
        }
        double* out = feat.data() + static_cast<std::size_t>(k) * FunctionalConfig::kPerClass;
        out[0] = mx;
        out[1] = mn;
        out[2] = sum / steps;
        out[3] = static_cast<double>(above) / steps;
    }
    return feat;
}

struct ElmModel {
    Eigen::MatrixXd input_weights;   // [H, F], frozen after init
    Eigen::VectorXd hidden_bias;     // [H]
    Eigen::MatrixXd output_weights;  // [H, classes], ridge-solved
    double lambda = 1e-3;

    int hidden_size() const { return static_cast<int>(input_weights.rows()); }
    int feature_size() const { return static_cast<int>(input_weights.cols()); }
    int n_classes() const { return static_cast<int>(output_weights.cols()); }
};

namespace detail {

inline Eigen::MatrixXd elm_hidden(const ElmModel& m, const Eigen::MatrixXd& features) {
    Eigen::MatrixXd z = features * m.input_weights.transpose();
    z.rowwise() += m.hidden_bias.transpose();
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();  // sigmoid
}

}  // namespace detail

// Normal equations with ridge; lambda escalates x10 up to three times if
// the solve comes back non-finite.
inline ElmModel elm_train(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                          int n_classes, int hidden_size = 256, double lambda = 1e-3, std::uint64_t seed = 0) {
    if (features.empty() || features.size() != labels.size())
        throw DataError("elm_train: empty or mismatched training data");
    const int n = static_cast<int>(features.size());
    const int f = static_cast<int>(features[0].size());

    std::vector<int> class_count(static_cast<std::size_t>(n_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw DataError("elm_train: label " + std::to_string(y) + " out of range");
        class_count[static_cast<std::size_t>(y)] += 1;
    }
    for (int k = 0; k < n_classes; ++k)
        if (class_count[static_cast<std::size_t>(k)] == 0)
            throw DataError("elm_train: no examples for class " + std::to_string(k));

    ElmModel m;
    m.lambda = lambda;
    Rng rng(seed);
    m.input_weights.resize(hidden_size, f);
    m.hidden_bias.resize(hidden_size);
    for (int i = 0; i < hidden_size; ++i) {
        for (int j = 0; j < f; ++j) m.input_weights(i, j) = rng.uniform(-1.0, 1.0);
        m.hidden_bias(i) = rng.uniform(-1.0, 1.0);
    }

    Eigen::MatrixXd x(n, f);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n_classes);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(features[static_cast<std::size_t>(i)].size()) != f)
            throw DimensionError("elm_train: inconsistent feature length at example " + std::to_string(i));
        for (int j = 0; j < f; ++j) x(i, j) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    }

    const Eigen::MatrixXd g = detail::elm_hidden(m, x);
    const Eigen::MatrixXd gtg = g.transpose() * g;
    const Eigen::MatrixXd gty = g.transpose() * y;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Eigen::MatrixXd a = gtg;
        a.diagonal().array() += m.lambda;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() == Eigen::Success) {
            m.output_weights = ldlt.solve(gty);
            if (m.output_weights.allFinite()) return m;
        }
        m.lambda *= 10.0;
    }
    throw NumericError("elm_train: ridge system remained ill-conditioned up to lambda=" + std::to_string(m.lambda));
}

inline Eigen::VectorXd elm_scores(const ElmModel& m, const std::vector<double>& feature) {
    if (static_cast<int>(feature.size()) != m.feature_size())
        throw DimensionError("elm_predict: feature length " + std::to_string(feature.size()) + " vs model " +
                             std::to_string(m.feature_size()));
    Eigen::Map<const Eigen::VectorXd> x(feature.data(), static_cast<Eigen::Index>(feature.size()));
    return detail::elm_hidden(m, x.transpose()).row(0) * m.output_weights;
}

// Argmax over output scores; ties go to the lowest class index.
inline int elm_predict(const ElmModel& m, const std::vector<double>& feature) {
    const Eigen::VectorXd scores = elm_scores(m, feature);
    int best = 0;
    for (int k = 1; k < m.n_classes(); ++k)
        if (scores(k) > scores(best)) best = k;
    return best;
}

}  // namespace ser3d
