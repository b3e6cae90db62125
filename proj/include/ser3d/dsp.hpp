#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ser3d/errors.hpp"
#include "ser3d/tensor.hpp"

// Waveform -> log-spectrogram -> 10 x 10 x 256 feature volume.
//
// Frames: 100 per 2 s clip, 20 ms hop (320 samples at 16 kHz), 32 ms
// (512-sample) Hann-windowed slice, 512-point FFT, magnitudes of bins
// 1..256 (DC dropped), log floor 1e-10. Ten consecutive chunks of ten
// frames form the long-term axis; no sliding window, no overlap.

namespace ser3d {

constexpr int kSampleRate = 16000;
constexpr int kClipSamples = 32000;   // 2 s
constexpr int kHopSamples = 320;      // 20 ms
constexpr int kWindowSamples = 512;   // 32 ms
constexpr int kFrames = 100;
constexpr int kSpectralBins = 256;
constexpr int kLongSteps = 10;
constexpr int kShortSteps = 10;
constexpr double kLogFloor = 1e-10;

struct Waveform {
    std::vector<float> samples;  // in [-1, 1]
    int sample_rate = kSampleRate;
    std::string speaker_id;
    std::string utterance_id;
};

struct FeatureVolume {
    Tensor<float> values;  // [10, 10, 256]
    std::string source_utterance;
};

// One common factor per speaker so the speaker-level peak is 1.0.
// Relative gains between that speaker's utterances are preserved.
inline void normalize_gain(std::vector<Waveform>& speaker_utterances) {
    if (speaker_utterances.empty()) throw DataError("normalize_gain: no utterances for speaker");
    float peak = 0.0f;
    for (const auto& w : speaker_utterances)
        for (float s : w.samples) peak = std::max(peak, std::abs(s));
    if (peak <= 0.0f)
        throw DataError("normalize_gain: speaker '" + speaker_utterances.front().speaker_id + "' is all-silent");
    const float scale = 1.0f / peak;
    for (auto& w : speaker_utterances)
        for (float& s : w.samples) s *= scale;
}

// Linear-interpolation resample to 16 kHz.
inline Waveform resample_16k(const Waveform& w) {
    if (w.sample_rate <= 0) throw DataError("resample_16k: invalid sample rate");
    if (w.sample_rate == kSampleRate) return w;
    Waveform out = w;
    out.sample_rate = kSampleRate;
    const double ratio = static_cast<double>(w.sample_rate) / kSampleRate;
    const std::size_t n_out = static_cast<std::size_t>(std::floor((w.samples.size() - 1) / ratio)) + 1;
    out.samples.assign(n_out, 0.0f);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = i * ratio;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const float a = w.samples[i0];
        const float b = i0 + 1 < w.samples.size() ? w.samples[i0 + 1] : a;
        out.samples[i] = static_cast<float>(a + frac * (b - a));
    }
    return out;
}

// Zero-pad short clips at the end, trim long ones to the first 2 s.
inline Waveform fit_2s(const Waveform& w) {
    Waveform out = resample_16k(w);
    out.samples.resize(kClipSamples, 0.0f);
    return out;
}

namespace detail {

// Iterative radix-2 Cooley-Tukey, in place; n must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

// 100 x 256 log-magnitude spectrogram of a 2 s, 16 kHz waveform.
inline Tensor<float> log_spectrogram(const Waveform& w) {
    if (w.sample_rate != kSampleRate || static_cast<int>(w.samples.size()) != kClipSamples)
        throw DimensionError("log_spectrogram: expected " + std::to_string(kClipSamples) + " samples at 16 kHz, got " +
                             std::to_string(w.samples.size()) + " at " + std::to_string(w.sample_rate));
    static const std::vector<double> hann = [] {
        std::vector<double> win(kWindowSamples);
        for (int n = 0; n < kWindowSamples; ++n)
            win[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / kWindowSamples));
        return win;
    }();
    Tensor<float> spec({kFrames, kSpectralBins});
    std::vector<std::complex<double>> buf(kWindowSamples);
    for (int f = 0; f < kFrames; ++f) {
        const int start = f * kHopSamples;
        for (int n = 0; n < kWindowSamples; ++n) {
            const int i = start + n;
            const double x = i < kClipSamples ? static_cast<double>(w.samples[i]) : 0.0;  // edge frames zero-padded
            buf[n] = x * hann[n];
        }
        detail::fft_radix2(buf);
        for (int b = 0; b < kSpectralBins; ++b)
            spec.at({f, b}) = static_cast<float>(std::log(std::abs(buf[b + 1]) + kLogFloor));
    }
    spec.require_finite("log_spectrogram");
    return spec;
}

// Reshape 100 frames into 10 long-term steps of 10 short-term frames:
// values[l,t,s] = spec[10*l + t, s].
inline FeatureVolume compose_volume(const Tensor<float>& spec, const std::string& utterance_id = "") {
    if (spec.rank() != 2 || spec.extent(0) != kFrames || spec.extent(1) != kSpectralBins)
        throw DimensionError("compose_volume: expected [100,256], got " + shape_str(spec.shape()));
    FeatureVolume vol;
    vol.values = spec.reshaped({kLongSteps, kShortSteps, kSpectralBins});
    vol.source_utterance = utterance_id;
    return vol;
}

// Full pipeline for one already-gain-normalized utterance. With
// multi_segment, every complete non-overlapping 2 s segment yields a
// volume (evaluation then majority-votes); default is the first 2 s only.
inline std::vector<FeatureVolume> extract_volumes(const Waveform& w, bool multi_segment = false) {
    Waveform at16k = resample_16k(w);
    std::vector<FeatureVolume> volumes;
    const int n_segments =
        multi_segment ? std::max<int>(1, static_cast<int>(at16k.samples.size()) / kClipSamples) : 1;
    for (int seg = 0; seg < n_segments; ++seg) {
        Waveform clip;
        clip.sample_rate = kSampleRate;
        clip.speaker_id = at16k.speaker_id;
        clip.utterance_id = at16k.utterance_id;
        const std::size_t begin = static_cast<std::size_t>(seg) * kClipSamples;
        const std::size_t end = std::min(at16k.samples.size(), begin + kClipSamples);
        if (begin < at16k.samples.size())
            clip.samples.assign(at16k.samples.begin() + begin, at16k.samples.begin() + end);
        clip.samples.resize(kClipSamples, 0.0f);
        volumes.push_back(compose_volume(log_spectrogram(clip), w.utterance_id));
    }
    return volumes;
}

}  // namespace ser3d
