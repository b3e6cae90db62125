#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"
#include "ser3d/eval.hpp"
#include "ser3d/model.hpp"

namespace ser3d {

// Post-ReLU top-FC activations for every utterance, one CSV row each:
// id, true label, then one column per activation. Values are printed with
// 9 significant digits so the float round-trips bit-exactly.
template <typename Scalar>
void export_features(const ModelParams<Scalar>& model, const std::vector<std::string>& ids,
                     const LabeledVolumes<Scalar>& data, const std::string& path) {
    if (ids.size() != data.volumes.size() || ids.size() != data.labels.size())
        throw DataError("export_features: ids/volumes/labels length mismatch");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw DataError("export_features: cannot open " + path);
    bool wrote_header = false;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        Tensor<Scalar> feat = top_fc_features(model, data.volumes[i]);
        if (!wrote_header) {
            std::fprintf(f, "id,label");
            for (int j = 0; j < feat.numel(); ++j) std::fprintf(f, ",f%d", j);
            std::fprintf(f, "\n");
            wrote_header = true;
        }
        std::fprintf(f, "%s,%d", ids[i].c_str(), data.labels[i]);
        for (int j = 0; j < feat.numel(); ++j) std::fprintf(f, ",%.9g", static_cast<double>(feat[j]));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
    if (!wrote_header) throw DataError("export_features: empty dataset");
}

struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<std::vector<double>> features;
};

// Parse a CSV produced by export_features.
FeatureTable load_feature_csv(const std::string& path);

struct FoldResult {
    double ua = 0.0;
    ConfusionMatrix cm;
};

// "mean±std" with three decimals; std is the sample standard deviation
// (n-1 denominator), 0 for a single value.
std::string format_mean_std(const std::vector<double>& values);

// Structured-text results file: per-fold UA, mean±std, per-fold confusion
// matrices (counts and row percentages), and an optional significance test
// against a named baseline. Deterministic output (no timestamps).
void write_results_file(const std::string& path, const std::string& experiment,
                        const std::vector<FoldResult>& folds, const WilcoxonResult* significance = nullptr,
                        const std::string& baseline = "");

// Gnuplot-compatible embedding dump: two numeric columns per line, one
// blank-line-separated block per class when labels are provided.
void write_embedding(const std::string& path, const std::vector<std::array<double, 2>>& embedding,
                     const std::vector<int>& labels = {});

}  // namespace ser3d
