#pragma once

#include "biadapt/adapter.hpp"
#include "biadapt/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biadapt {

inline constexpr std::string_view kEmbeddingMagic = "VLME0001";
inline constexpr std::string_view kCheckpointMagic = "BIWT0001";
inline constexpr std::string_view kDenseCheckpointMagic = "BIWD0001";

/// Image features (rows, unit L2 norm after load) with class labels in [0, K).
struct EmbeddingSet {
    Matrix features;
    std::vector<std::uint32_t> labels;
    std::uint32_t num_classes = 0;

    std::size_t n() const noexcept { return features.rows(); }
    std::size_t d() const noexcept { return features.cols(); }
};

/// One unit-norm text feature row per class, row k describing class k.
struct PromptSet {
    Matrix features;
    std::vector<std::string> class_names;

    std::size_t k() const noexcept { return features.rows(); }
    std::size_t d() const noexcept { return features.cols(); }
};

/// Contents of `<path>.meta.json`.
struct SidecarMeta {
    std::string model_name;
    float logit_scale = 1.0f; // e^s, not s
    float bias = 0.0f;
    std::string dataset_name;
    std::string split; // train | test | prompts
    std::vector<std::string> class_names;
};

struct LoadedEmbeddings {
    EmbeddingSet set;
    SidecarMeta meta;
    // (row, original norm) for rows whose norm deviated from 1 by more than 1e-3.
    std::vector<std::pair<std::size_t, double>> deviating_norms;
};

struct LoadedPrompts {
    PromptSet prompts;
    SidecarMeta meta;
    std::vector<std::pair<std::size_t, double>> deviating_norms;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

LoadedEmbeddings read_embedding_set(const std::filesystem::path& path);
void write_embedding_set(const EmbeddingSet& set, const SidecarMeta& meta, const std::filesystem::path& path);

/// Prompt files use the same container with N == K and labels 0..K-1.
LoadedPrompts read_prompt_set(const std::filesystem::path& path);
void write_prompt_set(const PromptSet& prompts, const SidecarMeta& meta, const std::filesystem::path& path);

BilinearAdapter read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const BilinearAdapter& adapter, const std::filesystem::path& path);

DenseAdapter read_dense_checkpoint(const std::filesystem::path& path);
void write_dense_checkpoint(const DenseAdapter& adapter, const std::filesystem::path& path);

/// First 8 bytes of a file; empty string if it is shorter.
std::string peek_magic(const std::filesystem::path& path);

/// Throws DimMismatch / LabelOutOfRange unless the set and prompts can be scored together.
void require_compatible(const EmbeddingSet& set, const PromptSet& prompts);

/// Rescale rows to unit norm, skipping rows already within 1e-6 of unit norm
/// so that normalized data round-trips bit-exactly. Returns rows whose
/// original norm deviated by more than 1e-3.
std::vector<std::pair<std::size_t, double>> normalize_rows(Matrix& features);

} // namespace biadapt
