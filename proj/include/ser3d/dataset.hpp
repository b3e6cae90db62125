#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"

namespace ser3d {

enum class Emotion : int { Neutral = 0, Happy = 1, Sad = 2, Angry = 3 };
constexpr int kNumClasses = 4;

const char* emotion_name(Emotion e);
Emotion emotion_from_name(const std::string& name);

struct UtteranceRecord {
    std::string id;
    std::string audio_path;
    std::string corpus_id;
    std::string speaker_id;
    std::optional<Emotion> label;      // exactly one of label / trace_path present
    std::optional<std::string> trace_path;
};

struct TraceSample {
    double time = 0.0;
    double valence = 0.0;  // [-1, 1]
    double arousal = 0.0;  // [-1, 1]
};

// FEELTRACE landmarks per category: (valence, arousal).
struct Landmarks {
    std::array<std::pair<double, double>, kNumClasses> points;
    static Landmarks feeltrace() {
        return Landmarks{{{{0.00, 0.00},     // neutral
                           {0.74, 0.52},     // happy
                           {-0.70, -0.48},   // sad
                           {-0.77, 0.75}}}}; // angry
    }
};

// Mean over samples of the Euclidean distance to each landmark; argmin
// wins, ties broken neutral < happy < sad < angry.
Emotion map_trace(const std::vector<TraceSample>& trace, const Landmarks& landmarks = Landmarks::feeltrace());

// CSV `id,audio_path,corpus_id,speaker_id,label,trace_path`, header required.
std::vector<UtteranceRecord> load_manifest(const std::string& path);
void save_manifest(const std::string& path, const std::vector<UtteranceRecord>& records);

// CSV `time,valence,arousal`, header required.
std::vector<TraceSample> load_trace(const std::string& path);

enum class Partition : int { Train = 0, Val = 1, Test = 2 };

struct FoldPlan {
    int fold_index = 0;
    // speaker -> partition, keyed (corpus_id, speaker_id)
    std::map<std::pair<std::string, std::string>, Partition> speakers;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> test_ids;
};

// Per corpus: seeded speaker shuffle, 20% test / 20% val / 60% train by
// speaker count, five folds by rotating the shuffled list. Warnings for
// corpora too small to split go to `warnings` when provided.
std::vector<FoldPlan> make_folds(const std::vector<UtteranceRecord>& manifest, std::uint64_t seed,
                                 std::vector<std::string>* warnings = nullptr);

void save_fold_plan(const std::string& path, const FoldPlan& plan);
FoldPlan load_fold_plan(const std::string& path);

struct SynthSpec {
    int n_speakers = 8;
    int n_utt_per_class = 25;
    std::uint64_t seed = 1;
    std::string out_dir;
};

// Synthetic 4-class corpus: class-specific carrier band and AM rate,
// per-speaker base-frequency offset, additive noise. Writes WAV files
// plus a manifest and returns the records.
std::vector<UtteranceRecord> synth_corpus(const SynthSpec& spec);

}  // namespace ser3d
