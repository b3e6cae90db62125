#include "ser3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ser3d {

double unweighted_accuracy(const ConfusionMatrix& cm, std::vector<std::string>* warnings) {
    double sum = 0.0;
    int present = 0;
    for (int k = 0; k < cm.n_classes; ++k) {
        const std::int64_t total = cm.row_sum(k);
        if (total == 0) {
            if (warnings) warnings->push_back("class " + std::to_string(k) + " absent from test set; excluded from UA");
            continue;
        }
        sum += static_cast<double>(cm.at(k, k)) / static_cast<double>(total);
        ++present;
    }
    if (present == 0) throw DataError("unweighted_accuracy: confusion matrix is empty");
    return sum / present;
}

std::vector<std::vector<int>> row_percent(const ConfusionMatrix& cm) {
    std::vector<std::vector<int>> out;
    for (int r = 0; r < cm.n_classes; ++r) {
        const std::int64_t total = cm.row_sum(r);
        std::vector<int> row(static_cast<std::size_t>(cm.n_classes), -1);
        if (total > 0) {
            std::vector<double> exact(static_cast<std::size_t>(cm.n_classes));
            std::vector<double> remainder(static_cast<std::size_t>(cm.n_classes));
            int assigned = 0;
            for (int c = 0; c < cm.n_classes; ++c) {
                exact[c] = 100.0 * static_cast<double>(cm.at(r, c)) / static_cast<double>(total);
                row[c] = static_cast<int>(std::floor(exact[c]));
                remainder[c] = exact[c] - row[c];
                assigned += row[c];
            }
            std::vector<int> order(static_cast<std::size_t>(cm.n_classes));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return remainder[a] > remainder[b]; });
            for (int i = 0; i < 100 - assigned; ++i) row[order[static_cast<std::size_t>(i)]] += 1;
        }
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& paired_a, const std::vector<double>& paired_b) {
    if (paired_a.size() != paired_b.size())
        throw DataError("wilcoxon_signed_rank: sample sizes differ");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < paired_a.size(); ++i) {
        const double d = paired_a[i] - paired_b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const int n = static_cast<int>(diffs.size());
    if (n < 5)
        throw DataError("wilcoxon_signed_rank: only " + std::to_string(n) +
                        " nonzero differences; need at least 5");

    // Mid-ranks of |d|.
    std::vector<int> order(diffs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
    std::vector<double> ranks(diffs.size());
    double tie_correction = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
        const double t = static_cast<double>(j - i);
        tie_correction += t * t * t - t;
        i = j;
    }

    WilcoxonResult res;
    res.n_nonzero = n;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        (diffs[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];
    res.statistic = std::min(res.w_plus, res.w_minus);

    if (n <= 20) {
        // Exact distribution of W+ by DP over doubled ranks (mid-ranks can
        // be half-integers; doubling keeps sums integral).
        std::vector<long long> r2(diffs.size());
        long long max_sum = 0;
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            r2[i] = static_cast<long long>(std::llround(2.0 * ranks[i]));
            max_sum += r2[i];
        }
        std::vector<double> counts(static_cast<std::size_t>(max_sum) + 1, 0.0);
        counts[0] = 1.0;
        for (long long r : r2)
            for (long long s = max_sum; s >= r; --s) counts[s] += counts[s - r];
        const double total = std::pow(2.0, n);
        const long long w2 = static_cast<long long>(std::llround(2.0 * res.w_plus));
        double p_low = 0.0, p_high = 0.0;
        for (long long s = 0; s <= max_sum; ++s) {
            if (s <= w2) p_low += counts[s];
            if (s >= w2) p_high += counts[s];
        }
        res.p_two_sided = std::min(1.0, 2.0 * std::min(p_low, p_high) / total);
        res.exact = true;
    } else {
        const double mean = n * (n + 1) / 4.0;
        const double var = n * (n + 1) * (2.0 * n + 1.0) / 24.0 - tie_correction / 48.0;
        const double sd = std::sqrt(var);
        // Continuity correction toward the mean.
        const double z = (res.statistic - mean + 0.5) / sd;
        res.p_two_sided = std::min(1.0, 2.0 * normal_cdf(z));
        res.exact = false;
    }
    res.significant_at_01 = res.p_two_sided < 0.01;
    return res;
}

}  // namespace ser3d
