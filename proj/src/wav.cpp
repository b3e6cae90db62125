#include "ser3d/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ser3d/errors.hpp"

namespace ser3d {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_wav: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw DataError("read_wav: '" + path + "' is not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
            if (pos + 8 + 16 > bytes.size())
                throw DataError("read_wav: '" + path + "' truncated fmt chunk at byte " + std::to_string(pos));
            format = read_u16(bytes.data() + pos + 8);
            channels = read_u16(bytes.data() + pos + 10);
            rate = read_u32(bytes.data() + pos + 12);
            bits = read_u16(bytes.data() + pos + 22);
        } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
            data_off = pos + 8;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (format != 1)
        throw DataError("read_wav: '" + path + "' unsupported encoding " + std::to_string(format) + " (PCM only)");
    if (bits != 8 && bits != 16)
        throw DataError("read_wav: '" + path + "' unsupported bit depth " + std::to_string(bits));
    if (channels < 1 || data_off == 0)
        throw DataError("read_wav: '" + path + "' missing fmt or data chunk");
    if (data_off + data_len > bytes.size())
        throw DataError("read_wav: '" + path + "' data chunk truncated at byte " + std::to_string(bytes.size()));

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_size = bytes_per_sample * channels;
    const std::size_t n_frames = data_len / frame_size;
    Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.samples.resize(n_frames);
    const unsigned char* d = bytes.data() + data_off;
    for (std::size_t i = 0; i < n_frames; ++i) {
        const unsigned char* s = d + i * frame_size;  // first channel
        if (bits == 16) {
            const std::int16_t v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
            w.samples[i] = static_cast<float>(v) / 32768.0f;
        } else {
            w.samples[i] = (static_cast<float>(s[0]) - 128.0f) / 128.0f;
        }
    }
    return w;
}

void write_wav(const std::string& path, const Waveform& w) {
    const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
    std::vector<unsigned char> out;
    out.reserve(44 + 2 * n);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + 2 * n);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, 2 * n);
    for (float s : w.samples) {
        float clamped = s < -1.0f ? -1.0f : (s > 1.0f ? 1.0f : s);
        const int v = static_cast<int>(clamped < 0 ? clamped * 32768.0f : clamped * 32767.0f);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_wav: cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write_wav: short write to '" + path + "'");
}

}  // namespace ser3d
