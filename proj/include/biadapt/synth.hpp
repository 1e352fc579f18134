#pragma once

#include "biadapt/embedding_store.hpp"
#include "biadapt/matrix.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace biadapt {

enum class PlantedTransform { None, UpperTriangular, Orthogonal };

std::string_view transform_name(PlantedTransform t) noexcept;
PlantedTransform parse_transform(std::string_view name);

struct SynthSpec {
    std::size_t d = 64;
    std::size_t k = 8;
    std::size_t train_per_class = 32;
    std::size_t test_per_class = 64;
    double noise_sigma = 0.05;
    PlantedTransform transform = PlantedTransform::UpperTriangular;
    std::uint64_t seed = 0;
    float logit_scale = 100.0f;
    float bias = 0.0f;
};

struct SynthData {
    EmbeddingSet train;
    EmbeddingSet test;
    PromptSet prompts;
    SidecarMeta train_meta;
    SidecarMeta test_meta;
    SidecarMeta prompts_meta;
    // Row-vector convention: images = normalize(clean * planted).
    std::optional<MatrixD> planted;
};

/// Class anchors are orthonormal: anchor c spreads over the coordinate block
/// [c*m, (c+1)*m), m = d / k, with random signs. Images are their anchor plus
/// Gaussian noise, normalized, then (optionally) multiplied by the planted
/// transform and normalized again.
///
/// The upper-triangular transform has a unit-determinant diagonal in
/// [1/1.5, 1.5], background off-diagonals within +/-0.05, and couplings of
/// magnitude 0.3 * U(0.5, 1) from block c into every later block, aligned with
/// the anchor signs. The zero-shot head then prefers a later class for most
/// images, while the inverse (also upper triangular) undoes the mixing.
SynthData generate(const SynthSpec& spec);

} // namespace biadapt
