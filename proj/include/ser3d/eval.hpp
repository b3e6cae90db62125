#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"

namespace ser3d {

// Rows = true class, columns = predicted.
struct ConfusionMatrix {
    int n_classes = 4;
    std::vector<std::int64_t> counts;  // row-major n x n

    explicit ConfusionMatrix(int n = 4) : n_classes(n), counts(static_cast<std::size_t>(n) * n, 0) {}

    std::int64_t& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth) * n_classes + pred]; }
    std::int64_t at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth) * n_classes + pred]; }

    std::int64_t row_sum(int truth) const {
        std::int64_t s = 0;
        for (int c = 0; c < n_classes; ++c) s += at(truth, c);
        return s;
    }
};

// Mean of per-class recalls; classes with no true examples are excluded
// (their names go to `warnings` when provided).
double unweighted_accuracy(const ConfusionMatrix& cm, std::vector<std::string>* warnings = nullptr);

// Rows scaled to sum to exactly 100, largest-remainder rounding. Zero rows
// come back as all -1 (skipped with marker).
std::vector<std::vector<int>> row_percent(const ConfusionMatrix& cm);

struct WilcoxonResult {
    double statistic = 0.0;   // W = min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_two_sided = 1.0;
    int n_nonzero = 0;
    bool exact = false;       // enumeration (n <= 20) vs normal approximation
    bool significant_at_01 = false;
};

// Paired two-sided signed-rank test. Zero differences dropped, mid-rank
// ties, exact sign-pattern enumeration for n <= 20, tie-corrected normal
// approximation with continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& paired_a, const std::vector<double>& paired_b);

struct TsneOptions {
    double perplexity = 30.0;
    int iters = 1000;
    std::uint64_t seed = 0;
    double learning_rate = 200.0;
    int exaggeration_iters = 250;
    double exaggeration = 12.0;
};

struct TsneResult {
    std::vector<std::array<double, 2>> embedding;
    std::vector<double> kl_history;  // recorded every 50 iterations
};

// Exact O(N^2) t-SNE: per-point bandwidths by binary search, symmetrized
// P, Student-t Q, momentum gradient descent (0.5 -> 0.8 at iter 250).
TsneResult tsne(const std::vector<std::vector<double>>& features, const TsneOptions& opt = TsneOptions{});

}  // namespace ser3d
