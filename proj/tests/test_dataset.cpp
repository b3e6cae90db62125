#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "ser3d/dataset.hpp"
#include "ser3d/rng.hpp"
#include "ser3d/wav.hpp"

using namespace ser3d;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("ser3d_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<UtteranceRecord> fake_manifest(int n_speakers, int n_utt_per_speaker,
                                           const std::string& corpus = "c") {
    std::vector<UtteranceRecord> records;
    for (int s = 0; s < n_speakers; ++s)
        for (int u = 0; u < n_utt_per_speaker; ++u) {
            UtteranceRecord r;
            r.id = corpus + "_s" + std::to_string(s) + "_u" + std::to_string(u);
            r.audio_path = "none.wav";
            r.corpus_id = corpus;
            r.speaker_id = "spk" + std::to_string(s);
            r.label = static_cast<Emotion>(u % kNumClasses);
            records.push_back(r);
        }
    return records;
}

}  // namespace

TEST_CASE("map_trace: each FEELTRACE landmark maps to its own category") {
    const Landmarks lm = Landmarks::feeltrace();
    CHECK(map_trace({{0.0, 0.00, 0.00}}, lm) == Emotion::Neutral);
    CHECK(map_trace({{0.0, 0.74, 0.52}}, lm) == Emotion::Happy);
    CHECK(map_trace({{0.0, -0.70, -0.48}}, lm) == Emotion::Sad);
    CHECK(map_trace({{0.0, -0.77, 0.75}}, lm) == Emotion::Angry);
}

TEST_CASE("map_trace: two-sample trace follows the average-distance argmin") {
    // Hand-computed: both samples sit closest to the happy landmark.
    std::vector<TraceSample> trace{{0.0, 0.74, 0.52}, {1.0, 0.60, 0.40}};
    CHECK(map_trace(trace) == Emotion::Happy);

    // Verify the averaging rule itself against explicit arithmetic.
    const Landmarks lm = Landmarks::feeltrace();
    double best = 1e300;
    int best_k = -1;
    for (int k = 0; k < kNumClasses; ++k) {
        double sum = 0.0;
        for (const auto& s : trace) {
            const double dv = s.valence - lm.points[k].first;
            const double da = s.arousal - lm.points[k].second;
            sum += std::sqrt(dv * dv + da * da);
        }
        if (sum / 2.0 < best) {
            best = sum / 2.0;
            best_k = k;
        }
    }
    CHECK(static_cast<int>(map_trace(trace)) == best_k);
}

TEST_CASE("map_trace: invariant to reordering and duplication; empty trace rejected") {
    Rng rng(5);
    std::vector<TraceSample> trace;
    for (int i = 0; i < 9; ++i) trace.push_back({static_cast<double>(i), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const Emotion base = map_trace(trace);
    std::vector<TraceSample> reversed(trace.rbegin(), trace.rend());
    CHECK(map_trace(reversed) == base);
    std::vector<TraceSample> doubled = trace;
    doubled.insert(doubled.end(), trace.begin(), trace.end());
    CHECK(map_trace(doubled) == base);
    CHECK_THROWS_AS(map_trace({}), DataError);
}

TEST_CASE("make_folds: 10 speakers split 2 test / 2 val / 6 train per fold") {
    auto manifest = fake_manifest(10, 4);
    auto plans = make_folds(manifest, 7);
    REQUIRE(plans.size() == 5);
    for (const auto& plan : plans) {
        int n_test = 0, n_val = 0, n_train = 0;
        for (const auto& [key, part] : plan.speakers) {
            if (part == Partition::Test) ++n_test;
            if (part == Partition::Val) ++n_val;
            if (part == Partition::Train) ++n_train;
        }
        CHECK(n_test == 2);
        CHECK(n_val == 2);
        CHECK(n_train == 6);
    }
}

TEST_CASE("make_folds: no speaker appears in two partitions; utterances follow speakers") {
    auto manifest = fake_manifest(7, 5, "a");
    auto more = fake_manifest(4, 3, "b");
    manifest.insert(manifest.end(), more.begin(), more.end());
    auto plans = make_folds(manifest, 3);
    for (const auto& plan : plans) {
        std::set<std::string> train_spk, val_spk, test_spk;
        auto spk_of = [&](const std::string& id) {
            for (const auto& r : manifest)
                if (r.id == id) return r.corpus_id + "/" + r.speaker_id;
            return std::string();
        };
        for (const auto& id : plan.train_ids) train_spk.insert(spk_of(id));
        for (const auto& id : plan.val_ids) val_spk.insert(spk_of(id));
        for (const auto& id : plan.test_ids) test_spk.insert(spk_of(id));
        for (const auto& s : test_spk) {
            CHECK(train_spk.count(s) == 0);
            CHECK(val_spk.count(s) == 0);
        }
        for (const auto& s : val_spk) CHECK(train_spk.count(s) == 0);
        CHECK(plan.train_ids.size() + plan.val_ids.size() + plan.test_ids.size() == manifest.size());
    }
}

TEST_CASE("make_folds: fold test sets cover a 10-speaker corpus exactly once") {
    auto manifest = fake_manifest(10, 2);
    auto plans = make_folds(manifest, 11);
    std::map<std::string, int> seen;
    for (const auto& plan : plans)
        for (const auto& [key, part] : plan.speakers)
            if (part == Partition::Test) seen[key.second] += 1;
    CHECK(seen.size() == 10);
    for (const auto& [spk, count] : seen) CHECK(count == 1);
}

TEST_CASE("make_folds: deterministic per seed, distinct across seeds") {
    auto manifest = fake_manifest(9, 3);
    auto a = make_folds(manifest, 42);
    auto b = make_folds(manifest, 42);
    auto c = make_folds(manifest, 43);
    for (int f = 0; f < 5; ++f) {
        CHECK(a[f].test_ids == b[f].test_ids);
        CHECK(a[f].train_ids == b[f].train_ids);
    }
    bool any_diff = false;
    for (int f = 0; f < 5; ++f) any_diff = any_diff || a[f].test_ids != c[f].test_ids;
    CHECK(any_diff);
    CHECK_THROWS_AS(make_folds({}, 1), DataError);
}

TEST_CASE("make_folds: single-speaker corpus warns and mostly trains") {
    auto manifest = fake_manifest(6, 2, "big");
    auto lone = fake_manifest(1, 2, "tiny");
    manifest.insert(manifest.end(), lone.begin(), lone.end());
    std::vector<std::string> warnings;
    auto plans = make_folds(manifest, 1, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("tiny") != std::string::npos);
    CHECK(plans[0].speakers.at({"tiny", "spk0"}) == Partition::Test);
    for (int f = 1; f < 5; ++f) CHECK(plans[f].speakers.at({"tiny", "spk0"}) == Partition::Train);
}

TEST_CASE("fold plan round-trips through its JSON file") {
    auto dir = temp_dir("foldplan");
    auto plans = make_folds(fake_manifest(8, 3), 9);
    const std::string path = (dir / "fold0.json").string();
    save_fold_plan(path, plans[2]);
    FoldPlan loaded = load_fold_plan(path);
    CHECK(loaded.fold_index == plans[2].fold_index);
    CHECK(loaded.train_ids == plans[2].train_ids);
    CHECK(loaded.val_ids == plans[2].val_ids);
    CHECK(loaded.test_ids == plans[2].test_ids);
    CHECK(loaded.speakers == plans[2].speakers);
}

TEST_CASE("load_manifest: well-formed rows parse, bad rows are rejected with row numbers") {
    auto dir = temp_dir("manifest");
    const std::string path = (dir / "m.csv").string();
    {
        std::ofstream out(path);
        out << "id,audio_path,corpus_id,speaker_id,label,trace_path\n";
        out << "u1,a.wav,c1,s1,happy,\n";
        out << "u2,b.wav,c1,s2,,traces/t2.csv\n";
        out << "u3,c.wav,c2,s1,sad,\n";
    }
    auto records = load_manifest(path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].label == Emotion::Happy);
    CHECK(records[1].trace_path == "traces/t2.csv");
    CHECK(!records[1].label.has_value());

    {
        std::ofstream out(path);
        out << "id,audio_path,corpus_id,speaker_id,label,trace_path\n";
        out << "u1,a.wav,c1,s1,happy,traces/t.csv\n";  // both label and trace
    }
    try {
        load_manifest(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("wav: 16-bit extremes scale with divisor 32768; round trip is faithful") {
    auto dir = temp_dir("wav");
    Waveform w;
    w.sample_rate = 16000;
    w.samples = {-1.0f, 1.0f, 0.0f, 0.5f, -0.25f};
    const std::string path = (dir / "t.wav").string();
    write_wav(path, w);
    Waveform back = read_wav(path);
    REQUIRE(back.samples.size() == 5);
    CHECK(back.sample_rate == 16000);
    CHECK(back.samples[0] == doctest::Approx(-1.0));  // -32768 / 32768
    CHECK(back.samples[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(back.samples[2] == 0.0f);
    CHECK(back.samples[3] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(back.samples[4] == doctest::Approx(-0.25).epsilon(1e-3));
    CHECK_THROWS_AS(read_wav((dir / "missing.wav").string()), DataError);
}

TEST_CASE("wav: non-RIFF content is rejected") {
    auto dir = temp_dir("badwav");
    const std::string path = (dir / "x.wav").string();
    std::ofstream(path) << "definitely not audio data, padded to be long enough.........";
    CHECK_THROWS_AS(read_wav(path), DataError);
}

TEST_CASE("synth_corpus: counts, labels and per-seed reproducibility") {
    auto dir = temp_dir("synth");
    SynthSpec spec;
    spec.n_speakers = 3;
    spec.n_utt_per_class = 2;
    spec.seed = 77;
    spec.out_dir = (dir / "a").string();
    auto records = synth_corpus(spec);
    CHECK(records.size() == 3 * 4 * 2);
    int per_class[kNumClasses] = {0, 0, 0, 0};
    for (const auto& r : records) {
        REQUIRE(r.label.has_value());
        per_class[static_cast<int>(*r.label)] += 1;
        CHECK(fs::exists(r.audio_path));
    }
    for (int k = 0; k < kNumClasses; ++k) CHECK(per_class[k] == 6);

    SynthSpec again = spec;
    again.out_dir = (dir / "b").string();
    auto records2 = synth_corpus(again);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::ifstream f1(records[i].audio_path, std::ios::binary);
        std::ifstream f2(records2[i].audio_path, std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(b1 == b2);
    }
}

TEST_CASE("trace CSV loads and feeds map_trace") {
    auto dir = temp_dir("trace");
    const std::string path = (dir / "t.csv").string();
    std::ofstream(path) << "time,valence,arousal\n0.0,0.7,0.5\n0.5,0.74,0.52\n1.0,0.6,0.4\n";
    auto trace = load_trace(path);
    REQUIRE(trace.size() == 3);
    CHECK(map_trace(trace) == Emotion::Happy);

    std::ofstream(path) << "time,valence,arousal\n1.0,0.0,0.0\n0.5,0.0,0.0\n";  // time decreasing
    CHECK_THROWS_AS(load_trace(path), DataError);
}
