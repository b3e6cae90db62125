#include "ser3d/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace ser3d {

namespace {

constexpr char kMagic[4] = {'S', '3', 'D', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void tensor_f32(const Tensor<float>& t) {
        u32(static_cast<std::uint32_t>(t.rank()));
        for (int e : t.shape()) u32(static_cast<std::uint32_t>(e));
        raw(t.data(), static_cast<std::size_t>(t.numel()) * 4);
    }
    std::vector<unsigned char>& bytes() { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class Reader {
public:
    Reader(const unsigned char* p, std::size_t n, std::string path) : p_(p), n_(n), path_(std::move(path)) {}

    void raw(void* out, std::size_t n) {
        if (pos_ + n > n_)
            throw DataError("checkpoint '" + path_ + "': truncated at byte " + std::to_string(pos_));
        std::memcpy(out, p_ + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
    float f32() { float v; raw(&v, 4); return v; }
    double f64() { double v; raw(&v, 8); return v; }
    std::string str() {
        const std::uint32_t len = u32();
        std::string s(len, '\0');
        raw(s.data(), len);
        return s;
    }
    Tensor<float> tensor_f32() {
        const std::uint32_t rank = u32();
        if (rank > 8) throw DataError("checkpoint '" + path_ + "': implausible tensor rank " + std::to_string(rank));
        Shape shape(rank);
        for (auto& e : shape) e = static_cast<int>(u32());
        Tensor<float> t(shape);
        raw(t.data(), static_cast<std::size_t>(t.numel()) * 4);
        return t;
    }
    std::size_t pos() const { return pos_; }
    std::size_t size() const { return n_; }
    const std::string& path() const { return path_; }

private:
    const unsigned char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
    std::string path_;
};

void write_config(Writer& w, const ArchConfig& c) {
    w.u32(static_cast<std::uint32_t>(c.n_conv_layers));
    w.u32(static_cast<std::uint32_t>(c.kernel_l));
    w.u32(static_cast<std::uint32_t>(c.kernel_t));
    w.u32(static_cast<std::uint32_t>(c.kernel_s));
    w.u32(static_cast<std::uint32_t>(c.kernels_per_layer));
    w.u32(static_cast<std::uint32_t>(c.fc_width));
    w.u32(static_cast<std::uint32_t>(c.fc_layers));
    w.u32(static_cast<std::uint32_t>(c.head));
    w.u32(static_cast<std::uint32_t>(c.n_classes));
    w.u32(static_cast<std::uint32_t>(c.input_l));
    w.u32(static_cast<std::uint32_t>(c.input_t));
    w.u32(static_cast<std::uint32_t>(c.input_s));
    w.f32(static_cast<float>(c.dropout_p));
}

ArchConfig read_config(Reader& r) {
    ArchConfig c;
    c.n_conv_layers = static_cast<int>(r.u32());
    c.kernel_l = static_cast<int>(r.u32());
    c.kernel_t = static_cast<int>(r.u32());
    c.kernel_s = static_cast<int>(r.u32());
    c.kernels_per_layer = static_cast<int>(r.u32());
    c.fc_width = static_cast<int>(r.u32());
    c.fc_layers = static_cast<int>(r.u32());
    c.head = static_cast<Head>(r.u32());
    c.n_classes = static_cast<int>(r.u32());
    c.input_l = static_cast<int>(r.u32());
    c.input_t = static_cast<int>(r.u32());
    c.input_s = static_cast<int>(r.u32());
    c.dropout_p = static_cast<double>(r.f32());
    return c;
}

void write_model_section(Writer& w, const ModelParams<float>& m) {
    write_config(w, m.config);
    w.u64(m.seed);
    w.u32(static_cast<std::uint32_t>(m.epochs_run));
    w.f64(m.best_val_ua);
    const auto tensors = m.flatten();
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) w.tensor_f32(t);
}

ModelParams<float> read_model_section(Reader& r) {
    const ArchConfig cfg = read_config(r);
    const std::uint64_t seed = r.u64();
    const int epochs = static_cast<int>(r.u32());
    const double best_ua = r.f64();
    ModelParams<float> m = build_model<float>(cfg, seed);
    m.epochs_run = epochs;
    m.best_val_ua = best_ua;
    const std::uint32_t n = r.u32();
    auto tensors = m.flatten();
    if (n != tensors.size())
        throw DataError("checkpoint '" + r.path() + "': tensor count " + std::to_string(n) +
                        " does not match architecture (" + std::to_string(tensors.size()) + ")");
    for (auto& t : tensors) {
        Tensor<float> loaded = r.tensor_f32();
        if (loaded.shape() != t.shape())
            throw DataError("checkpoint '" + r.path() + "': tensor shape " + shape_str(loaded.shape()) +
                            " does not match architecture " + shape_str(t.shape()));
        t = std::move(loaded);
    }
    m.unflatten(tensors);
    return m;
}

void write_elm_section(Writer& w, const ElmModel& m) {
    w.u32(static_cast<std::uint32_t>(m.hidden_size()));
    w.u32(static_cast<std::uint32_t>(m.feature_size()));
    w.u32(static_cast<std::uint32_t>(m.n_classes()));
    w.f64(m.lambda);
    w.raw(m.input_weights.data(), static_cast<std::size_t>(m.input_weights.size()) * 8);
    w.raw(m.hidden_bias.data(), static_cast<std::size_t>(m.hidden_bias.size()) * 8);
    w.raw(m.output_weights.data(), static_cast<std::size_t>(m.output_weights.size()) * 8);
}

ElmModel read_elm_section(Reader& r) {
    ElmModel m;
    const int h = static_cast<int>(r.u32());
    const int f = static_cast<int>(r.u32());
    const int k = static_cast<int>(r.u32());
    m.lambda = r.f64();
    m.input_weights.resize(h, f);
    m.hidden_bias.resize(h);
    m.output_weights.resize(h, k);
    r.raw(m.input_weights.data(), static_cast<std::size_t>(m.input_weights.size()) * 8);
    r.raw(m.hidden_bias.data(), static_cast<std::size_t>(m.hidden_bias.size()) * 8);
    r.raw(m.output_weights.data(), static_cast<std::size_t>(m.output_weights.size()) * 8);
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointContents& contents) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kFormatVersion);

    auto section = [&w](const char tag[4], const std::vector<unsigned char>& payload) {
        w.raw(tag, 4);
        w.u64(payload.size());
        w.raw(payload.data(), payload.size());
    };

    if (contents.model) {
        Writer body;
        write_model_section(body, *contents.model);
        section("MODL", body.bytes());
    }
    if (contents.elm) {
        Writer body;
        write_elm_section(body, *contents.elm);
        section("ELMS", body.bytes());
    }
    if (!contents.volumes.empty()) {
        Writer body;
        body.u32(static_cast<std::uint32_t>(contents.volumes.size()));
        for (const auto& v : contents.volumes) {
            body.str(v.source_utterance);
            body.tensor_f32(v.values);
        }
        section("FVOL", body.bytes());
    }

    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, w.bytes().data(), static_cast<uInt>(w.bytes().size())));
    w.u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot open '" + path + "'");
    out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw DataError("save_checkpoint: short write to '" + path + "'");
}

CheckpointContents load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12) throw DataError("load_checkpoint: '" + path + "' is too short to be a checkpoint");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw DataError("load_checkpoint: '" + path + "' has bad magic (not an S3DC checkpoint)");

    const std::size_t body_len = bytes.size() - 4;
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + body_len, 4);
    const std::uint32_t actual_crc =
        static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body_len)));
    if (stored_crc != actual_crc)
        throw DataError("load_checkpoint: '" + path + "' CRC mismatch (file corrupted)");

    Reader r(bytes.data(), body_len, path);
    char magic[4];
    r.raw(magic, 4);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw DataError("load_checkpoint: '" + path + "' format_version " + std::to_string(version) +
                        " unsupported (expected " + std::to_string(kFormatVersion) + ")");

    CheckpointContents contents;
    while (r.pos() < r.size()) {
        char tag[4];
        r.raw(tag, 4);
        const std::uint64_t len = r.u64();
        const std::size_t section_end = r.pos() + len;
        if (section_end > r.size())
            throw DataError("load_checkpoint: '" + path + "' section length overruns file");
        if (std::memcmp(tag, "MODL", 4) == 0) {
            contents.model = read_model_section(r);
        } else if (std::memcmp(tag, "ELMS", 4) == 0) {
            contents.elm = read_elm_section(r);
        } else if (std::memcmp(tag, "FVOL", 4) == 0) {
            const std::uint32_t count = r.u32();
            for (std::uint32_t i = 0; i < count; ++i) {
                FeatureVolume v;
                v.source_utterance = r.str();
                v.values = r.tensor_f32();
                contents.volumes.push_back(std::move(v));
            }
        } else {
            throw DataError("load_checkpoint: '" + path + "' unknown section tag");
        }
        if (r.pos() != section_end)
            throw DataError("load_checkpoint: '" + path + "' section payload size mismatch");
    }
    return contents;
}

void save_model_checkpoint(const std::string& path, const ModelParams<float>& model, const ElmModel* elm) {
    CheckpointContents c;
    c.model = model;
    if (elm) c.elm = *elm;
    save_checkpoint(path, c);
}

ModelParams<float> load_model_checkpoint(const std::string& path, const std::optional<ArchConfig>& expected,
                                         std::optional<ElmModel>* elm_out) {
    CheckpointContents c = load_checkpoint(path);
    if (!c.model) throw DataError("load_model_checkpoint: '" + path + "' has no model section");
    if (expected && !(c.model->config == *expected))
        throw DataError("load_model_checkpoint: '" + path + "' was trained with a different architecture");
    if (elm_out) *elm_out = c.elm;
    return std::move(*c.model);
}

}  // namespace ser3d
