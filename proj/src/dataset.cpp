#include "ser3d/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ser3d/rng.hpp"
#include "ser3d/wav.hpp"

namespace ser3d {

namespace {

constexpr const char* kEmotionNames[kNumClasses] = {"neutral", "happy", "sad", "angry"};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

const char* emotion_name(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }

Emotion emotion_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kEmotionNames[i]) return static_cast<Emotion>(i);
    throw DataError("unknown emotion label '" + name + "'");
}

Emotion map_trace(const std::vector<TraceSample>& trace, const Landmarks& landmarks) {
    if (trace.empty()) throw DataError("map_trace: empty trace");
    double best = std::numeric_limits<double>::infinity();
    int best_class = 0;
    for (int k = 0; k < kNumClasses; ++k) {
        const auto [vl, al] = landmarks.points[static_cast<std::size_t>(k)];
        double sum = 0.0;
        for (const auto& s : trace) {
            const double dv = s.valence - vl;
            const double da = s.arousal - al;
            sum += std::sqrt(dv * dv + da * da);
        }
        const double mean = sum / static_cast<double>(trace.size());
        if (mean < best) {  // ties keep the earlier (lower-index) category
            best = mean;
            best_class = k;
        }
    }
    return static_cast<Emotion>(best_class);
}

std::vector<UtteranceRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_manifest: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("load_manifest: '" + path + "' is empty");
    const std::string expected = "id,audio_path,corpus_id,speaker_id,label,trace_path";
    {
        auto hdr = split_csv(line);
        std::string joined;
        for (std::size_t i = 0; i < hdr.size(); ++i) joined += (i ? "," : "") + hdr[i];
        if (joined != expected)
            throw DataError("load_manifest: '" + path + "' bad header, expected '" + expected + "'");
    }
    std::vector<UtteranceRecord> records;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        const std::string where = path + ":" + std::to_string(row);
        if (f.size() != 6) throw DataError("load_manifest: " + where + ": expected 6 fields, got " + std::to_string(f.size()));
        UtteranceRecord r;
        r.id = f[0];
        r.audio_path = f[1];
        r.corpus_id = f[2];
        r.speaker_id = f[3];
        if (r.id.empty()) throw DataError("load_manifest: " + where + ": empty id");
        if (r.speaker_id.empty()) throw DataError("load_manifest: " + where + ": empty speaker_id");
        const bool has_label = !f[4].empty();
        const bool has_trace = !f[5].empty();
        if (has_label == has_trace)
            throw DataError("load_manifest: " + where + ": exactly one of label/trace_path must be set");
        if (has_label) r.label = emotion_from_name(f[4]);
        if (has_trace) r.trace_path = f[5];
        records.push_back(std::move(r));
    }
    if (records.empty()) throw DataError("load_manifest: '" + path + "' has no records");
    return records;
}

void save_manifest(const std::string& path, const std::vector<UtteranceRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("save_manifest: cannot open '" + path + "'");
    out << "id,audio_path,corpus_id,speaker_id,label,trace_path\n";
    for (const auto& r : records)
        out << r.id << ',' << r.audio_path << ',' << r.corpus_id << ',' << r.speaker_id << ','
            << (r.label ? emotion_name(*r.label) : "") << ',' << (r.trace_path ? *r.trace_path : "") << '\n';
}

std::vector<TraceSample> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_trace: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("load_trace: '" + path + "' is empty");
    std::vector<TraceSample> trace;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != 3)
            throw DataError("load_trace: " + path + ":" + std::to_string(row) + ": expected 3 fields");
        TraceSample s;
        try {
            s.time = std::stod(f[0]);
            s.valence = std::stod(f[1]);
            s.arousal = std::stod(f[2]);
        } catch (const std::exception&) {
            throw DataError("load_trace: " + path + ":" + std::to_string(row) + ": non-numeric field");
        }
        if (!trace.empty() && s.time < trace.back().time)
            throw DataError("load_trace: " + path + ":" + std::to_string(row) + ": time not nondecreasing");
        trace.push_back(s);
    }
    return trace;
}

namespace {

struct CorpusSpeakers {
    std::string corpus_id;
    std::vector<std::string> speakers;
};

int split_test_count(int n) { return std::max(1, static_cast<int>(std::lround(0.2 * n))); }
int split_val_count(int n) { return n >= 3 ? std::max(1, static_cast<int>(std::lround(0.2 * n))) : 0; }

}  // namespace

std::vector<FoldPlan> make_folds(const std::vector<UtteranceRecord>& manifest, std::uint64_t seed,
                                 std::vector<std::string>* warnings) {
    if (manifest.empty()) throw DataError("make_folds: empty manifest");

    // Sorted speaker lists per corpus so the seeded shuffle is the only
    // source of ordering.
    std::map<std::string, std::set<std::string>> by_corpus;
    for (const auto& r : manifest) by_corpus[r.corpus_id].insert(r.speaker_id);
    std::vector<CorpusSpeakers> corpora;
    for (const auto& [cid, spk] : by_corpus)
        corpora.push_back({cid, std::vector<std::string>(spk.begin(), spk.end())});

    Rng rng(seed);
    for (auto& c : corpora) {
        Rng corpus_rng = rng.fork(std::hash<std::string>{}(c.corpus_id));
        corpus_rng.shuffle(c.speakers);
    }

    constexpr int kFolds = 5;
    std::vector<FoldPlan> plans(kFolds);
    for (int f = 0; f < kFolds; ++f) {
        plans[f].fold_index = f;
        for (const auto& c : corpora) {
            const int n = static_cast<int>(c.speakers.size());
            if (n < 2) {
                if (warnings && f == 0)
                    warnings->push_back("corpus '" + c.corpus_id + "' has " + std::to_string(n) +
                                        " speaker(s); cannot split speaker-independently");
                // Single speaker supplies the test set of fold 0 and trains elsewhere.
                plans[f].speakers[{c.corpus_id, c.speakers[0]}] = f == 0 ? Partition::Test : Partition::Train;
                continue;
            }
            const int n_test = split_test_count(n);
            const int n_val = split_val_count(n);
            for (int i = 0; i < n; ++i) {
                const auto& spk = c.speakers[static_cast<std::size_t>((f * n_test + i) % n)];
                Partition p = i < n_test ? Partition::Test : (i < n_test + n_val ? Partition::Val : Partition::Train);
                plans[f].speakers[{c.corpus_id, spk}] = p;
            }
        }
        for (const auto& r : manifest) {
            switch (plans[f].speakers.at({r.corpus_id, r.speaker_id})) {
                case Partition::Train: plans[f].train_ids.push_back(r.id); break;
                case Partition::Val: plans[f].val_ids.push_back(r.id); break;
                case Partition::Test: plans[f].test_ids.push_back(r.id); break;
            }
        }
    }
    return plans;
}

void save_fold_plan(const std::string& path, const FoldPlan& plan) {
    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["fold_index"] = plan.fold_index;
    auto spk = nlohmann::ordered_json::array();
    for (const auto& [key, part] : plan.speakers) {
        static const char* names[] = {"train", "val", "test"};
        spk.push_back({{"corpus_id", key.first}, {"speaker_id", key.second}, {"partition", names[static_cast<int>(part)]}});
    }
    j["speakers"] = spk;
    j["train_ids"] = plan.train_ids;
    j["val_ids"] = plan.val_ids;
    j["test_ids"] = plan.test_ids;
    std::ofstream out(path);
    if (!out) throw DataError("save_fold_plan: cannot open '" + path + "'");
    out << j.dump(2) << '\n';
}

FoldPlan load_fold_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_fold_plan: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("load_fold_plan: '" + path + "': " + e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw DataError("load_fold_plan: '" + path + "': unsupported format_version");
    FoldPlan plan;
    plan.fold_index = j.at("fold_index").get<int>();
    for (const auto& s : j.at("speakers")) {
        const std::string p = s.at("partition").get<std::string>();
        Partition part = p == "train" ? Partition::Train : (p == "val" ? Partition::Val : Partition::Test);
        if (p != "train" && p != "val" && p != "test")
            throw DataError("load_fold_plan: '" + path + "': bad partition '" + p + "'");
        plan.speakers[{s.at("corpus_id").get<std::string>(), s.at("speaker_id").get<std::string>()}] = part;
    }
    plan.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    plan.val_ids = j.at("val_ids").get<std::vector<std::string>>();
    plan.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return plan;
}

std::vector<UtteranceRecord> synth_corpus(const SynthSpec& spec) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(spec.out_dir) / "wav");

    // Classes sit in disjoint carrier bands with distinct AM rates;
    // per-speaker offsets stay well inside the band gaps.
    constexpr double kCarrier[kNumClasses] = {500.0, 1400.0, 2300.0, 3200.0};
    constexpr double kAmRate[kNumClasses] = {3.0, 6.0, 12.0, 24.0};

    Rng rng(spec.seed);
    std::vector<UtteranceRecord> records;
    for (int spk = 0; spk < spec.n_speakers; ++spk) {
        const double speaker_offset = rng.uniform(-120.0, 120.0);
        for (int cls = 0; cls < kNumClasses; ++cls) {
            for (int u = 0; u < spec.n_utt_per_class; ++u) {
                const double carrier = kCarrier[cls] + speaker_offset + rng.uniform(-40.0, 40.0);
                const double am = kAmRate[cls] * (1.0 + rng.uniform(-0.1, 0.1));
                const double phase = rng.uniform(0.0, 2.0 * M_PI);
                Waveform w;
                w.sample_rate = kSampleRate;
                w.samples.resize(kClipSamples);
                for (int i = 0; i < kClipSamples; ++i) {
                    const double t = static_cast<double>(i) / kSampleRate;
                    const double env = 0.55 + 0.45 * std::sin(2.0 * M_PI * am * t + phase);
                    const double tone = std::sin(2.0 * M_PI * carrier * t);
                    const double noise = rng.uniform(-0.02, 0.02);
                    w.samples[i] = static_cast<float>(0.7 * env * tone + noise);
                }
                UtteranceRecord r;
                r.id = "s" + std::to_string(spk) + "_c" + std::to_string(cls) + "_u" + std::to_string(u);
                r.audio_path = (fs::path(spec.out_dir) / "wav" / (r.id + ".wav")).string();
                r.corpus_id = "synth";
                r.speaker_id = "spk" + std::to_string(spk);
                r.label = static_cast<Emotion>(cls);
                write_wav(r.audio_path, w);
                records.push_back(std::move(r));
            }
        }
    }
    save_manifest((fs::path(spec.out_dir) / "manifest.csv").string(), records);
    return records;
}

}  // namespace ser3d
