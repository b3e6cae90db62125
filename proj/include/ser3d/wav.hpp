#pragma once

#include <string>

#include "ser3d/dsp.hpp"

namespace ser3d {

// PCM WAV decode: 8-bit unsigned or 16-bit signed, mono or first channel
// of multi-channel. Samples scale to [-1, 1] (16-bit divisor 32768).
Waveform read_wav(const std::string& path);

// 16-bit mono PCM.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace ser3d
