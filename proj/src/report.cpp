#include "ser3d/report.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ser3d {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

FeatureTable load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_feature_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("load_feature_csv: empty file " + path);
    const std::size_t n_cols = split_csv(line).size();
    if (n_cols < 3) throw DataError("load_feature_csv: header needs id,label and feature columns: " + path);

    FeatureTable table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != n_cols)
            throw DataError("load_feature_csv: " + path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
        table.ids.push_back(fields[0]);
        std::vector<double> row(n_cols - 2);
        try {
            table.labels.push_back(std::stoi(fields[1]));
            for (std::size_t j = 2; j < n_cols; ++j) row[j - 2] = std::stod(fields[j]);
        } catch (const std::exception&) {
            throw DataError("load_feature_csv: " + path + ":" + std::to_string(line_no) + ": bad numeric field");
        }
        table.features.push_back(std::move(row));
    }
    return table;
}

std::string format_mean_std(const std::vector<double>& values) {
    if (values.empty()) throw DataError("format_mean_std: no values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    if (values.size() > 1) {
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size() - 1);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f±%.3f", mean, std::sqrt(var));
    return buf;
}

void write_results_file(const std::string& path, const std::string& experiment,
                        const std::vector<FoldResult>& folds, const WilcoxonResult* significance,
                        const std::string& baseline) {
    if (folds.empty()) throw DataError("write_results_file: no fold results");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("write_results_file: cannot open " + path);

    std::fprintf(f, "experiment: %s\n", experiment.c_str());
    std::fprintf(f, "folds: %zu\n\n", folds.size());
    std::fprintf(f, "[unweighted_accuracy]\n");
    std::vector<double> uas;
    for (std::size_t k = 0; k < folds.size(); ++k) {
        uas.push_back(folds[k].ua);
        std::fprintf(f, "fold %zu: %.3f\n", k, folds[k].ua);
    }
    std::fprintf(f, "mean: %s\n", format_mean_std(uas).c_str());

    for (std::size_t k = 0; k < folds.size(); ++k) {
        const ConfusionMatrix& cm = folds[k].cm;
        std::fprintf(f, "\n[confusion fold %zu] (rows = true, cols = predicted)\n", k);
        for (int r = 0; r < cm.n_classes; ++r) {
            std::fprintf(f, "counts:");
            for (int c = 0; c < cm.n_classes; ++c) std::fprintf(f, " %6lld", static_cast<long long>(cm.at(r, c)));
            std::fprintf(f, "\n");
        }
        auto pct = row_percent(cm);
        for (int r = 0; r < cm.n_classes; ++r) {
            std::fprintf(f, "percent:");
            for (int c = 0; c < cm.n_classes; ++c) {
                if (pct[r][c] < 0)
                    std::fprintf(f, "      -");
                else
                    std::fprintf(f, " %6d", pct[r][c]);
            }
            std::fprintf(f, "\n");
        }
    }

    if (significance) {
        std::fprintf(f, "\n[wilcoxon vs %s]\n", baseline.empty() ? "baseline" : baseline.c_str());
        std::fprintf(f, "W: %.1f (W+ %.1f, W- %.1f, n %d, %s)\n", significance->statistic, significance->w_plus,
                     significance->w_minus, significance->n_nonzero,
                     significance->exact ? "exact" : "normal approximation");
        std::fprintf(f, "p_two_sided: %.6f\n", significance->p_two_sided);
        std::fprintf(f, "significant_at_0.01: %s\n", significance->significant_at_01 ? "yes" : "no");
    }
    std::fclose(f);
}

void write_embedding(const std::string& path, const std::vector<std::array<double, 2>>& embedding,
                     const std::vector<int>& labels) {
    if (!labels.empty() && labels.size() != embedding.size())
        throw DataError("write_embedding: labels/embedding length mismatch");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("write_embedding: cannot open " + path);
    if (labels.empty()) {
        for (const auto& p : embedding) std::fprintf(f, "%.9g %.9g\n", p[0], p[1]);
    } else {
        int max_label = 0;
        for (int l : labels) max_label = std::max(max_label, l);
        for (int cls = 0; cls <= max_label; ++cls) {
            std::fprintf(f, "# class %d\n", cls);
            for (std::size_t i = 0; i < embedding.size(); ++i)
                if (labels[i] == cls) std::fprintf(f, "%.9g %.9g\n", embedding[i][0], embedding[i][1]);
            std::fprintf(f, "\n\n");
        }
    }
    std::fclose(f);
}

}  // namespace ser3d
