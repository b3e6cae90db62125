// ser3d command-line front end: wires the dataset, DSP, model, ELM, and
// evaluation modules into an experiment pipeline. All randomness is seeded
// from the config or flags; no wall-clock seeding anywhere.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ser3d/checkpoint.hpp"
#include "ser3d/dataset.hpp"
#include "ser3d/dsp.hpp"
#include "ser3d/elm.hpp"
#include "ser3d/errors.hpp"
#include "ser3d/eval.hpp"
#include "ser3d/model.hpp"
#include "ser3d/report.hpp"
#include "ser3d/wav.hpp"

namespace fs = std::filesystem;
using namespace ser3d;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kNumFolds = 5;

// ---------------------------------------------------------------------------
// Experiment config: flat key=value lines grouped under [section] headers.
// Unknown sections or keys are rejected.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string manifest;
    std::string out_dir;
    std::uint64_t fold_seed = 1;
    ArchConfig arch;
    TrainOptions train;
    std::uint64_t elm_seed = 1;
    int elm_hidden = 256;
    double elm_lambda = 1e-3;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    ExperimentConfig cfg;
    std::string line, section;
    int line_no = 0;
    bool have_train_seed = false;
    auto where = [&] { return path + ":" + std::to_string(line_no); };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section != "data" && section != "model" && section != "train" && section != "elm")
                throw ConfigError("config: unknown section [" + section + "] at " + where());
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected key = value at " + where());
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("config: key '" + key + "' outside any section at " + where());
        try {
            if (section == "data") {
                if (key == "manifest")
                    cfg.manifest = value;
                else if (key == "out_dir")
                    cfg.out_dir = value;
                else if (key == "fold_seed")
                    cfg.fold_seed = std::stoull(value);
                else if (key == "folds") {
                    if (std::stoi(value) != kNumFolds)
                        throw ConfigError("config: fold count is fixed at 5, got " + value + " at " + where());
                } else
                    throw ConfigError("config: unknown key '" + key + "' in [data] at " + where());
            } else if (section == "model") {
                if (key == "head") {
                    if (value == "dnn")
                        cfg.arch.head = Head::DNN;
                    else if (value == "elm")
                        cfg.arch.head = Head::ELM;
                    else
                        throw ConfigError("config: head must be dnn or elm at " + where());
                } else if (key == "n_conv_layers")
                    cfg.arch.n_conv_layers = std::stoi(value);
                else if (key == "kernel_l")
                    cfg.arch.kernel_l = std::stoi(value);
                else if (key == "kernel_t")
                    cfg.arch.kernel_t = std::stoi(value);
                else if (key == "kernel_s")
                    cfg.arch.kernel_s = std::stoi(value);
                else if (key == "kernels_per_layer")
                    cfg.arch.kernels_per_layer = std::stoi(value);
                else if (key == "fc_width")
                    cfg.arch.fc_width = std::stoi(value);
                else if (key == "fc_layers")
                    cfg.arch.fc_layers = std::stoi(value);
                else if (key == "dropout_p")
                    cfg.arch.dropout_p = std::stod(value);
                else
                    throw ConfigError("config: unknown key '" + key + "' in [model] at " + where());
            } else if (section == "train") {
                if (key == "seed") {
                    cfg.train.seed = std::stoull(value);
                    have_train_seed = true;
                } else if (key == "batch_size")
                    cfg.train.batch_size = std::stoi(value);
                else if (key == "max_epochs")
                    cfg.train.max_epochs = std::stoi(value);
                else if (key == "patience")
                    cfg.train.patience = std::stoi(value);
                else if (key == "learning_rate")
                    cfg.train.learning_rate = std::stod(value);
                else
                    throw ConfigError("config: unknown key '" + key + "' in [train] at " + where());
            } else {  // elm
                if (key == "seed")
                    cfg.elm_seed = std::stoull(value);
                else if (key == "hidden")
                    cfg.elm_hidden = std::stoi(value);
                else if (key == "lambda")
                    cfg.elm_lambda = std::stod(value);
                else
                    throw ConfigError("config: unknown key '" + key + "' in [elm] at " + where());
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("config: bad numeric value '" + value + "' at " + where());
        } catch (const std::out_of_range&) {
            throw ConfigError("config: numeric value out of range at " + where());
        }
    }
    if (cfg.manifest.empty()) throw ConfigError("config: [data] manifest is required: " + path);
    if (cfg.out_dir.empty()) throw ConfigError("config: [data] out_dir is required: " + path);
    if (!have_train_seed) throw ConfigError("config: [train] seed is mandatory (no wall-clock seeding): " + path);
    cfg.arch.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Feature extraction with an on-disk cache (one container file per
// utterance). Gain is normalized per speaker before the spectrogram.
// ---------------------------------------------------------------------------

fs::path cache_dir(const std::string& fallback_root) {
    if (const char* env = std::getenv("SER3D_CACHE_DIR"); env && *env) return fs::path(env);
    return fs::path(fallback_root) / "cache";
}

std::map<std::string, FeatureVolume> extract_all_volumes(const std::vector<UtteranceRecord>& manifest,
                                                         const fs::path& cache) {
    fs::create_directories(cache);
    std::map<std::string, FeatureVolume> volumes;
    std::vector<const UtteranceRecord*> missing;
    for (const auto& rec : manifest) {
        const fs::path f = cache / (rec.id + ".fvol");
        if (fs::exists(f)) {
            CheckpointContents c = load_checkpoint(f.string());
            if (c.volumes.size() != 1) throw DataError("cache: " + f.string() + " does not hold one volume");
            volumes[rec.id] = std::move(c.volumes[0]);
        } else {
            missing.push_back(&rec);
        }
    }
    if (!missing.empty()) {
        std::fprintf(stderr, "extracting %zu feature volumes...\n", missing.size());
        // Group by speaker so gain normalization sees all of a speaker's
        // utterances together.
        std::map<std::pair<std::string, std::string>, std::vector<const UtteranceRecord*>> by_speaker;
        for (const auto* rec : missing) by_speaker[{rec->corpus_id, rec->speaker_id}].push_back(rec);
        for (auto& [speaker, recs] : by_speaker) {
            std::vector<Waveform> waves;
            for (const auto* rec : recs) {
                Waveform w = read_wav(rec->audio_path);
                w.speaker_id = speaker.second;
                w.utterance_id = rec->id;
                waves.push_back(std::move(w));
            }
            normalize_gain(waves);
            for (std::size_t i = 0; i < waves.size(); ++i) {
                std::vector<FeatureVolume> vols = extract_volumes(waves[i]);
                CheckpointContents c;
                c.volumes = {vols[0]};
                save_checkpoint((cache / (recs[i]->id + ".fvol")).string(), c);
                volumes[recs[i]->id] = std::move(vols[0]);
            }
        }
    }
    return volumes;
}

std::vector<UtteranceRecord> load_labeled_manifest(const std::string& path) {
    auto manifest = load_manifest(path);
    for (const auto& rec : manifest)
        if (!rec.label)
            throw DataError("manifest: utterance '" + rec.id + "' has a trace, not a label; run map-labels first");
    return manifest;
}

LabeledVolumes<float> gather(const std::vector<std::string>& ids,
                             const std::map<std::string, FeatureVolume>& volumes,
                             const std::map<std::string, int>& labels) {
    LabeledVolumes<float> out;
    for (const auto& id : ids) {
        out.volumes.push_back(volumes.at(id).values);
        out.labels.push_back(labels.at(id));
    }
    return out;
}

// Full-pipeline class decision: DNN head by argmax; ELM head through the
// statistical functionals and the trained ELM when one is present.
int pipeline_predict(const ModelParams<float>& m, const std::optional<ElmModel>& elm, const Tensor<float>& volume) {
    if (m.config.head == Head::ELM && elm) {
        Tensor<float> per_step = predict(m, volume);
        return elm_predict(*elm, functionals(per_step));
    }
    return predict_class(m, volume);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& out, std::uint64_t seed, int speakers, int utt_per_class) {
    SynthSpec spec;
    spec.out_dir = out;
    spec.seed = seed;
    spec.n_speakers = speakers;
    spec.n_utt_per_class = utt_per_class;
    auto records = synth_corpus(spec);
    std::fprintf(stderr, "wrote %zu utterances under %s\n", records.size(), out.c_str());
    std::printf("%s/manifest.csv\n", out.c_str());
    return kExitOk;
}

int cmd_folds(const std::string& manifest_path, std::uint64_t seed, const std::string& out) {
    auto manifest = load_manifest(manifest_path);
    std::vector<std::string> warnings;
    auto folds = make_folds(manifest, seed, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    fs::create_directories(out);
    for (const auto& plan : folds) {
        const fs::path p = fs::path(out) / ("fold_" + std::to_string(plan.fold_index) + ".json");
        save_fold_plan(p.string(), plan);
        std::printf("%s\n", p.string().c_str());
    }
    return kExitOk;
}

int cmd_map_labels(const std::string& manifest_path, const std::string& out) {
    auto manifest = load_manifest(manifest_path);
    int mapped = 0;
    for (auto& rec : manifest) {
        if (rec.label) continue;
        rec.label = map_trace(load_trace(*rec.trace_path));
        rec.trace_path.reset();
        ++mapped;
    }
    save_manifest(out, manifest);
    std::fprintf(stderr, "mapped %d trace-labeled records\n", mapped);
    std::printf("%s\n", out.c_str());
    return kExitOk;
}

int cmd_features(const std::string& manifest_path, const std::string& out, bool spectrogram_csv) {
    auto manifest = load_manifest(manifest_path);
    const fs::path cache = out.empty() ? cache_dir(fs::path(manifest_path).parent_path().string()) : fs::path(out);
    auto volumes = extract_all_volumes(manifest, cache);
    if (spectrogram_csv) {
        for (const auto& [id, vol] : volumes) {
            const fs::path p = cache / (id + ".spec.csv");
            std::FILE* f = std::fopen(p.string().c_str(), "wb");
            if (!f) throw DataError("features: cannot open " + p.string());
            // Rows are the 100 frames of the flattened [10,10,256] volume.
            for (int l = 0; l < vol.values.extent(0); ++l)
                for (int t = 0; t < vol.values.extent(1); ++t) {
                    for (int s = 0; s < vol.values.extent(2); ++s)
                        std::fprintf(f, s ? ",%.9g" : "%.9g", static_cast<double>(vol.values.at({l, t, s})));
                    std::fprintf(f, "\n");
                }
            std::fclose(f);
        }
    }
    std::fprintf(stderr, "cached %zu volumes in %s\n", volumes.size(), cache.string().c_str());
    std::printf("%s\n", cache.string().c_str());
    return kExitOk;
}

int cmd_params(const std::string& config_path) {
    ExperimentConfig cfg = load_config(config_path);
    auto stages = conv_stage_shapes(cfg.arch);
    std::printf("layer            output shape        params\n");
    std::int64_t total = 0;
    int cin = 1;
    std::printf("input            %dx%dx%dx1\n", cfg.arch.input_l, cfg.arch.input_t, cfg.arch.input_s);
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::int64_t p = static_cast<std::int64_t>(cfg.arch.kernels_per_layer) *
                               (static_cast<std::int64_t>(cfg.arch.kernel_l) * cfg.arch.kernel_t * cfg.arch.kernel_s * cin + 1);
        total += p;
        std::printf("conv%zu%s  %dx%dx%dx%d  %lld\n", i + 1, i >= 1 ? "+pool " : "       ", stages[i].l, stages[i].t,
                    stages[i].s, stages[i].c, static_cast<long long>(p));
        cin = cfg.arch.kernels_per_layer;
    }
    int in = fc_input_length(cfg.arch);
    for (int j = 0; j < cfg.arch.fc_layers; ++j) {
        const std::int64_t p = static_cast<std::int64_t>(cfg.arch.fc_width) * (in + 1);
        total += p;
        std::printf("fc%d              %d  %lld\n", j + 1, cfg.arch.fc_width, static_cast<long long>(p));
        in = cfg.arch.fc_width;
    }
    const std::int64_t p = static_cast<std::int64_t>(cfg.arch.n_classes) * (cfg.arch.fc_width + 1);
    total += p;
    std::printf("softmax          %d  %lld\n", cfg.arch.n_classes, static_cast<long long>(p));
    std::printf("total            %lld\n", static_cast<long long>(total));
    if (total != count_params(cfg.arch)) throw NumericError("params: shape table disagrees with count_params");
    return kExitOk;
}

int train_one_fold(const ExperimentConfig& cfg, const std::vector<UtteranceRecord>& manifest,
                   const FoldPlan& plan, const std::map<std::string, FeatureVolume>& volumes) {
    const fs::path ckpt = fs::path(cfg.out_dir) / ("fold_" + std::to_string(plan.fold_index) + ".ckpt");
    if (fs::exists(ckpt)) {
        std::fprintf(stderr, "fold %d: checkpoint exists, skipping\n", plan.fold_index);
        return kExitOk;
    }
    std::map<std::string, int> labels;
    for (const auto& rec : manifest) labels[rec.id] = static_cast<int>(*rec.label);

    LabeledVolumes<float> train_set = gather(plan.train_ids, volumes, labels);
    LabeledVolumes<float> val_set = gather(plan.val_ids, volumes, labels);

    TrainOptions opt = cfg.train;
    opt.seed = cfg.train.seed + static_cast<std::uint64_t>(plan.fold_index);
    opt.verbose = true;
    auto model = build_model<float>(cfg.arch, opt.seed);
    std::fprintf(stderr, "fold %d: training on %zu utterances (%zu val)\n", plan.fold_index,
                 train_set.volumes.size(), val_set.volumes.size());
    auto history = train_model(model, train_set, val_set, opt);

    std::optional<ElmModel> elm;
    if (cfg.arch.head == Head::ELM) {
        std::vector<std::vector<double>> feats;
        for (const auto& v : train_set.volumes) feats.push_back(functionals(predict(model, v)));
        elm = elm_train(feats, train_set.labels, cfg.arch.n_classes, cfg.elm_hidden, cfg.elm_lambda,
                        cfg.elm_seed + static_cast<std::uint64_t>(plan.fold_index));
    }
    save_model_checkpoint(ckpt.string(), model, elm ? &*elm : nullptr);

    const fs::path hist = fs::path(cfg.out_dir) / ("fold_" + std::to_string(plan.fold_index) + "_history.csv");
    std::FILE* f = std::fopen(hist.string().c_str(), "wb");
    if (!f) throw DataError("train: cannot open " + hist.string());
    std::fprintf(f, "epoch,train_loss,val_ua\n");
    for (const auto& st : history) std::fprintf(f, "%d,%.9g,%.9g\n", st.epoch, st.train_loss, st.val_ua);
    std::fclose(f);
    std::fprintf(stderr, "fold %d: wrote %s\n", plan.fold_index, ckpt.string().c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path, int fold) {
    ExperimentConfig cfg = load_config(config_path);
    fs::create_directories(cfg.out_dir);
    auto manifest = load_labeled_manifest(cfg.manifest);
    std::vector<std::string> warnings;
    auto folds = make_folds(manifest, cfg.fold_seed, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    auto volumes = extract_all_volumes(manifest, cache_dir(cfg.out_dir));
    if (fold >= 0) {
        if (fold >= static_cast<int>(folds.size())) throw ConfigError("train: fold index out of range");
        return train_one_fold(cfg, manifest, folds[static_cast<std::size_t>(fold)], volumes);
    }
    for (const auto& plan : folds) train_one_fold(cfg, manifest, plan, volumes);
    return kExitOk;
}

std::vector<double> parse_fold_uas(const std::string& results_path) {
    std::ifstream in(results_path);
    if (!in) throw DataError("eval: cannot open baseline results " + results_path);
    std::vector<double> uas;
    std::string line;
    while (std::getline(in, line)) {
        double ua;
        int idx;
        if (std::sscanf(line.c_str(), "fold %d: %lf", &idx, &ua) == 2) uas.push_back(ua);
    }
    if (uas.empty()) throw DataError("eval: no 'fold k: ua' lines in " + results_path);
    return uas;
}

int cmd_eval(const std::string& config_path, const std::string& baseline, const std::string& features_out) {
    ExperimentConfig cfg = load_config(config_path);
    auto manifest = load_labeled_manifest(cfg.manifest);
    auto folds = make_folds(manifest, cfg.fold_seed, nullptr);
    auto volumes = extract_all_volumes(manifest, cache_dir(cfg.out_dir));
    std::map<std::string, int> labels;
    for (const auto& rec : manifest) labels[rec.id] = static_cast<int>(*rec.label);

    std::vector<FoldResult> results;
    std::vector<std::string> all_test_ids;
    LabeledVolumes<float> all_test;
    std::optional<ModelParams<float>> last_model;
    for (const auto& plan : folds) {
        const fs::path ckpt = fs::path(cfg.out_dir) / ("fold_" + std::to_string(plan.fold_index) + ".ckpt");
        if (!fs::exists(ckpt)) throw DataError("eval: missing checkpoint " + ckpt.string() + "; run train first");
        std::optional<ElmModel> elm;
        ModelParams<float> model = load_model_checkpoint(ckpt.string(), cfg.arch, &elm);
        FoldResult fr;
        fr.cm = ConfusionMatrix(cfg.arch.n_classes);
        LabeledVolumes<float> test_set = gather(plan.test_ids, volumes, labels);
        for (std::size_t i = 0; i < test_set.volumes.size(); ++i)
            fr.cm.at(test_set.labels[i], pipeline_predict(model, elm, test_set.volumes[i])) += 1;
        fr.ua = unweighted_accuracy(fr.cm);
        std::fprintf(stderr, "fold %d: UA %.3f over %zu test utterances\n", plan.fold_index, fr.ua,
                     test_set.volumes.size());
        results.push_back(std::move(fr));
        for (std::size_t i = 0; i < plan.test_ids.size(); ++i) {
            all_test_ids.push_back(plan.test_ids[i]);
            all_test.volumes.push_back(test_set.volumes[i]);
            all_test.labels.push_back(test_set.labels[i]);
        }
        last_model = std::move(model);
    }

    std::optional<WilcoxonResult> signif;
    if (!baseline.empty()) {
        auto base_uas = parse_fold_uas(baseline);
        std::vector<double> mine;
        for (const auto& fr : results) mine.push_back(fr.ua);
        if (base_uas.size() != mine.size())
            throw DataError("eval: baseline has " + std::to_string(base_uas.size()) + " folds, expected " +
                            std::to_string(mine.size()));
        signif = wilcoxon_signed_rank(mine, base_uas);
    }

    const fs::path results_path = fs::path(cfg.out_dir) / "results.txt";
    write_results_file(results_path.string(), fs::path(config_path).stem().string(), results,
                       signif ? &*signif : nullptr, baseline);
    if (!features_out.empty()) export_features(*last_model, all_test_ids, all_test, features_out);

    std::ifstream in(results_path);
    std::string text(std::istreambuf_iterator<char>(in), {});
    std::fputs(text.c_str(), stdout);
    return kExitOk;
}

int cmd_tsne(const std::string& features_csv, const std::string& out, double perplexity, std::uint64_t seed,
             int iters) {
    FeatureTable table = load_feature_csv(features_csv);
    TsneOptions opt;
    opt.perplexity = perplexity;
    opt.seed = seed;
    opt.iters = iters;
    std::fprintf(stderr, "embedding %zu points...\n", table.features.size());
    TsneResult res = tsne(table.features, opt);
    write_embedding(out, res.embedding, table.labels);
    std::printf("%s\n", out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ser3d: 3D spectro-temporal speech emotion recognition pipeline"};
    app.require_subcommand(1);

    std::string manifest, out, config_path, baseline, features_csv, features_out;
    std::uint64_t seed = 1;
    int fold = -1, speakers = 8, utt_per_class = 25, iters = 1000;
    double perplexity = 30.0;
    bool spectrogram_csv = false;

    auto* synth = app.add_subcommand("synth", "generate the synthetic 4-class corpus");
    synth->add_option("--out", out, "output directory")->required();
    synth->add_option("--seed", seed, "corpus seed");
    synth->add_option("--speakers", speakers, "number of speakers");
    synth->add_option("--utt-per-class", utt_per_class, "utterances per class per speaker");

    auto* folds_cmd = app.add_subcommand("folds", "emit speaker-independent fold plans");
    folds_cmd->add_option("--manifest", manifest, "manifest CSV")->required();
    folds_cmd->add_option("--seed", seed, "fold shuffle seed");
    folds_cmd->add_option("--out", out, "output directory")->required();

    auto* map_cmd = app.add_subcommand("map-labels", "resolve dimensional traces to categories");
    map_cmd->add_option("--manifest", manifest, "manifest CSV")->required();
    map_cmd->add_option("--out", out, "output manifest path")->required();

    auto* feat_cmd = app.add_subcommand("features", "extract and cache feature volumes");
    feat_cmd->add_option("--manifest", manifest, "manifest CSV")->required();
    feat_cmd->add_option("--out", out, "cache directory (default: $SER3D_CACHE_DIR or <manifest dir>/cache)");
    feat_cmd->add_flag("--spectrogram-csv", spectrogram_csv, "also dump raw spectrograms as CSV");

    auto* params_cmd = app.add_subcommand("params", "print the layer shape and parameter table");
    params_cmd->add_option("--config", config_path, "experiment config")->required();

    auto* train_cmd = app.add_subcommand("train", "train folds (resumable; existing checkpoints are skipped)");
    train_cmd->add_option("--config", config_path, "experiment config")->required();
    train_cmd->add_option("--fold", fold, "train a single fold (default: all)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate trained folds and write the results file");
    eval_cmd->add_option("--config", config_path, "experiment config")->required();
    eval_cmd->add_option("--baseline", baseline, "results file of another run for the significance test");
    eval_cmd->add_option("--export-features", features_out, "write test-set top-FC features to this CSV");

    auto* tsne_cmd = app.add_subcommand("tsne", "embed exported features in 2-D");
    tsne_cmd->add_option("--features", features_csv, "feature CSV from eval --export-features")->required();
    tsne_cmd->add_option("--out", out, "embedding output path")->required();
    tsne_cmd->add_option("--perplexity", perplexity, "t-SNE perplexity");
    tsne_cmd->add_option("--seed", seed, "embedding seed");
    tsne_cmd->add_option("--iters", iters, "gradient-descent iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed()) return cmd_synth(out, seed, speakers, utt_per_class);
        if (folds_cmd->parsed()) return cmd_folds(manifest, seed, out);
        if (map_cmd->parsed()) return cmd_map_labels(manifest, out);
        if (feat_cmd->parsed()) return cmd_features(manifest, out, spectrogram_csv);
        if (params_cmd->parsed()) return cmd_params(config_path);
        if (train_cmd->parsed()) return cmd_train(config_path, fold);
        if (eval_cmd->parsed()) return cmd_eval(config_path, baseline, features_out);
        if (tsne_cmd->parsed()) return cmd_tsne(features_csv, out, perplexity, seed, iters);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return kExitUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: data: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
