#include "biadapt/embedding_store.hpp"

#include "biadapt/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>

namespace biadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMagicLen = 8;

class ByteWriter {
public:
    void magic(std::string_view m) { m_buf.insert(m_buf.end(), m.begin(), m.end()); }
    void u32(std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) m_buf.push_back(static_cast<unsigned char>((v >> s) & 0xffu));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void save(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
        out.write(reinterpret_cast<const char*>(m_buf.data()), static_cast<std::streamsize>(m_buf.size()));
        if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
    }

private:
    std::vector<unsigned char> m_buf;
};

class ByteReader {
public:
    explicit ByteReader(const fs::path& path) : m_path(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + m_path);
        m_buf.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    void expect_magic(std::string_view magic) {
        if (m_buf.size() < kMagicLen ||
            std::string_view(reinterpret_cast<const char*>(m_buf.data()), kMagicLen) != magic) {
            throw Error(ErrorKind::BadMagic, m_path + " does not start with " + std::string(magic));
        }
        m_pos = kMagicLen;
    }

    std::uint32_t u32() {
        if (remaining() < 4) throw Error(ErrorKind::SizeMismatch, m_path + ": truncated header");
        std::uint32_t v = 0;
        for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(m_buf[m_pos++]) << s;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }

    std::size_t remaining() const noexcept { return m_buf.size() - m_pos; }
    const std::string& path() const noexcept { return m_path; }

private:
    std::string m_path;
    std::vector<unsigned char> m_buf;
    std::size_t m_pos = 0;
};

std::vector<float> read_f32_block(ByteReader& r, std::size_t count) {
    std::vector<float> out(count);
    for (auto& v : out) v = r.f32();
    return out;
}

json meta_to_json(const SidecarMeta& meta) {
    return json{{"model_name", meta.model_name},
                {"logit_scale", meta.logit_scale},
                {"bias", meta.bias},
                {"dataset_name", meta.dataset_name},
                {"split", meta.split},
                {"class_names", meta.class_names}};
}

void write_sidecar(const SidecarMeta& meta, const fs::path& path) {
    std::ofstream out(sidecar_path(path), std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write sidecar for " + path.string());
    out << meta_to_json(meta).dump(2) << '\n';
    if (!out) throw Error(ErrorKind::IoFailure, "write failed for sidecar of " + path.string());
}

SidecarMeta read_sidecar(const fs::path& path) {
    const fs::path side = sidecar_path(path);
    std::ifstream in(side);
    if (!in) throw Error(ErrorKind::MissingSidecar, side.string() + " not found");
    SidecarMeta meta;
    try {
        const json j = json::parse(in);
        meta.model_name = j.at("model_name").get<std::string>();
        meta.logit_scale = j.at("logit_scale").get<float>();
        meta.bias = j.value("bias", 0.0f);
        meta.dataset_name = j.value("dataset_name", std::string{});
        meta.split = j.at("split").get<std::string>();
        meta.class_names = j.at("class_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::BadSidecar, side.string() + ": " + e.what());
    }
    if (!(meta.logit_scale > 0.0f) || !std::isfinite(meta.logit_scale)) {
        throw Error(ErrorKind::BadSidecar, side.string() + ": logit_scale must be positive");
    }
    if (meta.split != "train" && meta.split != "test" && meta.split != "prompts") {
        throw Error(ErrorKind::BadSidecar, side.string() + ": split must be train, test or prompts");
    }
    return meta;
}

struct RawContainer {
    Matrix features;
    std::vector<std::uint32_t> labels;
    std::uint32_t k = 0;
};

RawContainer read_container(const fs::path& path) {
    ByteReader r(path);
    r.expect_magic(kEmbeddingMagic);
    const std::uint32_t n = r.u32();
    const std::uint32_t d = r.u32();
    const std::uint32_t k = r.u32();
    if (n == 0 || d == 0) throw Error(ErrorKind::EmptySet, path.string() + ": N and D must be >= 1");
    const std::uint64_t expected = std::uint64_t{n} * d * 4 + std::uint64_t{n} * 4;
    if (r.remaining() != expected) {
        throw Error(ErrorKind::DimMismatch, path.string() + ": payload is " + std::to_string(r.remaining()) +
                                                " bytes, header implies " + std::to_string(expected));
    }
    RawContainer c{Matrix(n, d, read_f32_block(r, std::size_t{n} * d)), std::vector<std::uint32_t>(n), k};
    for (std::uint32_t i = 0; i < n; ++i) {
        c.labels[i] = r.u32();
        if (c.labels[i] >= k) {
            throw Error(ErrorKind::LabelOutOfRange, path.string() + ": row " + std::to_string(i) + " has label " +
                                                        std::to_string(c.labels[i]) + " with K=" +
                                                        std::to_string(k));
        }
    }
    return c;
}

void write_container(const Matrix& features, std::span<const std::uint32_t> labels, std::uint32_t k,
                     const fs::path& path) {
    if (features.rows() == 0 || features.cols() == 0) {
        throw Error(ErrorKind::EmptySet, "refusing to write an empty set to " + path.string());
    }
    if (labels.size() != features.rows()) {
        throw Error(ErrorKind::DimMismatch, "one label per feature row required");
    }
    ByteWriter w;
    w.magic(kEmbeddingMagic);
    w.u32(static_cast<std::uint32_t>(features.rows()));
    w.u32(static_cast<std::uint32_t>(features.cols()));
    w.u32(k);
    for (const float v : features.data()) w.f32(v);
    for (const auto l : labels) {
        if (l >= k) throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(l) + " >= K");
        w.u32(l);
    }
    w.save(path);
}

void log_deviations(const fs::path& path, const std::vector<std::pair<std::size_t, double>>& devs) {
    if (devs.empty()) return;
    std::clog << "biadapt: " << path.string() << ": re-normalized " << devs.size() << " row(s); first row "
              << devs.front().first << " had norm " << devs.front().second << '\n';
}

} // namespace

fs::path sidecar_path(const fs::path& path) {
    return fs::path(path.string() + ".meta.json");
}

std::vector<std::pair<std::size_t, double>> normalize_rows(Matrix& features) {
    std::vector<std::pair<std::size_t, double>> deviating;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto row = features.row(r);
        const double norm = l2_norm(row);
        if (norm == 0.0 || !std::isfinite(norm)) {
            throw Error(ErrorKind::ZeroVector, "row " + std::to_string(r) + " cannot be normalized");
        }
        if (std::abs(norm - 1.0) > 1e-3) deviating.emplace_back(r, norm);
        if (std::abs(norm - 1.0) > 1e-6) {
            for (float& v : row) v = static_cast<float>(static_cast<double>(v) / norm);
        }
    }
    return deviating;
}

LoadedEmbeddings read_embedding_set(const fs::path& path) {
    RawContainer c = read_container(path);
    SidecarMeta meta = read_sidecar(path);
    if (meta.class_names.size() != c.k) {
        throw Error(ErrorKind::BadSidecar, sidecar_path(path).string() + ": " +
                                               std::to_string(meta.class_names.size()) +
                                               " class names for K=" + std::to_string(c.k));
    }
    LoadedEmbeddings out{EmbeddingSet{std::move(c.features), std::move(c.labels), c.k}, std::move(meta), {}};
    out.deviating_norms = normalize_rows(out.set.features);
    log_deviations(path, out.deviating_norms);
    return out;
}

void write_embedding_set(const EmbeddingSet& set, const SidecarMeta& meta, const fs::path& path) {
    write_container(set.features, set.labels, set.num_classes, path);
    write_sidecar(meta, path);
}

LoadedPrompts read_prompt_set(const fs::path& path) {
    RawContainer c = read_container(path);
    if (c.features.rows() != c.k) {
        throw Error(ErrorKind::DimMismatch, path.string() + ": prompt file needs one row per class");
    }
    for (std::uint32_t i = 0; i < c.k; ++i) {
        if (c.labels[i] != i) {
            throw Error(ErrorKind::LabelOutOfRange, path.string() + ": prompt row " + std::to_string(i) +
                                                        " is labeled " + std::to_string(c.labels[i]));
        }
    }
    SidecarMeta meta = read_sidecar(path);
    if (meta.class_names.size() != c.k) {
        throw Error(ErrorKind::BadSidecar, sidecar_path(path).string() + ": class_names length != K");
    }
    LoadedPrompts out{PromptSet{std::move(c.features), meta.class_names}, std::move(meta), {}};
    out.deviating_norms = normalize_rows(out.prompts.features);
    log_deviations(path, out.deviating_norms);
    return out;
}

void write_prompt_set(const PromptSet& prompts, const SidecarMeta& meta, const fs::path& path) {
    std::vector<std::uint32_t> labels(prompts.k());
    for (std::uint32_t i = 0; i < labels.size(); ++i) labels[i] = i;
    write_container(prompts.features, labels, static_cast<std::uint32_t>(prompts.k()), path);
    write_sidecar(meta, path);
}

namespace {

struct HeadFields {
    std::uint32_t d;
    Mode mode;
    float logit_scale;
    float bias;
};

HeadFields read_head(ByteReader& r) {
    HeadFields h{};
    h.d = r.u32();
    const std::uint32_t mode = r.u32();
    if (mode > 1) throw Error(ErrorKind::BadMagic, r.path() + ": unknown mode tag " + std::to_string(mode));
    h.mode = static_cast<Mode>(mode);
    h.logit_scale = r.f32();
    h.bias = r.f32();
    return h;
}

void write_head(ByteWriter& w, std::size_t d, Mode mode, float logit_scale, float bias) {
    w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(mode));
    w.f32(logit_scale);
    w.f32(bias);
}

} // namespace

BilinearAdapter read_checkpoint(const fs::path& path) {
    ByteReader r(path);
    r.expect_magic(kCheckpointMagic);
    const HeadFields h = read_head(r);
    const std::size_t expected = packed_size(h.d);
    if (r.remaining() != expected * 4) {
        throw Error(ErrorKind::SizeMismatch, r.path() + ": payload has " + std::to_string(r.remaining() / 4) +
                                                 " scalars, d=" + std::to_string(h.d) + " needs " +
                                                 std::to_string(expected));
    }
    BilinearAdapter a{PackedUpperTriangular(h.d, read_f32_block(r, expected)), h.logit_scale, h.bias, h.mode};
    a.validate();
    return a;
}

void write_checkpoint(const BilinearAdapter& adapter, const fs::path& path) {
    ByteWriter w;
    w.magic(kCheckpointMagic);
    write_head(w, adapter.dim(), adapter.mode, adapter.logit_scale, adapter.bias);
    for (const float v : adapter.w.data()) w.f32(v);
    w.save(path);
}

DenseAdapter read_dense_checkpoint(const fs::path& path) {
    ByteReader r(path);
    r.expect_magic(kDenseCheckpointMagic);
    const HeadFields h = read_head(r);
    const std::size_t expected = std::size_t{h.d} * h.d;
    if (r.remaining() != expected * 4) {
        throw Error(ErrorKind::SizeMismatch, r.path() + ": dense payload size does not match d");
    }
    DenseAdapter a{Matrix(h.d, h.d, read_f32_block(r, expected)), h.logit_scale, h.bias, h.mode};
    a.validate();
    return a;
}

void write_dense_checkpoint(const DenseAdapter& adapter, const fs::path& path) {
    ByteWriter w;
    w.magic(kDenseCheckpointMagic);
    write_head(w, adapter.dim(), adapter.mode, adapter.logit_scale, adapter.bias);
    for (const float v : adapter.w.data()) w.f32(v);
    w.save(path);
}

std::string peek_magic(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    std::string magic(kMagicLen, '\0');
    in.read(magic.data(), kMagicLen);
    if (in.gcount() != static_cast<std::streamsize>(kMagicLen)) return {};
    return magic;
}

void require_compatible(const EmbeddingSet& set, const PromptSet& prompts) {
    if (set.d() != prompts.d()) {
        throw Error(ErrorKind::DimMismatch, "embedding set d=" + std::to_string(set.d()) +
                                                " but prompts d=" + std::to_string(prompts.d()));
    }
    if (set.num_classes > prompts.k()) {
        throw Error(ErrorKind::LabelOutOfRange, "embedding set declares K=" + std::to_string(set.num_classes) +
                                                    " but only " + std::to_string(prompts.k()) + " prompts");
    }
}

} // namespace biadapt
