#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ser3d/dsp.hpp"
#include "ser3d/elm.hpp"
#include "ser3d/model.hpp"

// Little-endian container: magic `S3DC`, format_version u32, tagged
// sections (4-byte tag + u64 payload length), trailing CRC32 over every
// preceding byte. Sections: MODL (ModelParams, tensors as rank/extents/
// raw f32), ELMS (ElmModel), FVOL (feature volumes). Byte layout is
// documented in docs/checkpoint-format.md.

namespace ser3d {

struct CheckpointContents {
    std::optional<ModelParams<float>> model;
    std::optional<ElmModel> elm;
    std::vector<FeatureVolume> volumes;
};

void save_checkpoint(const std::string& path, const CheckpointContents& contents);
CheckpointContents load_checkpoint(const std::string& path);

// Convenience wrappers; load rejects checkpoints whose ArchConfig does
// not match `expected` when one is given.
void save_model_checkpoint(const std::string& path, const ModelParams<float>& model,
                           const ElmModel* elm = nullptr);
ModelParams<float> load_model_checkpoint(const std::string& path,
                                         const std::optional<ArchConfig>& expected = std::nullopt,
                                         std::optional<ElmModel>* elm_out = nullptr);

}  // namespace ser3d
