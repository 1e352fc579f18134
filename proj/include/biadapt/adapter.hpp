#pragma once

#include "biadapt/matrix.hpp"
#include "biadapt/tri_linalg.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace biadapt {

enum class Mode : std::uint32_t { Clip = 0, Siglip = 1 };

std::string_view mode_name(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

/// Bilinear scoring head S = e^s * (i W t^T) + b with W upper-triangular.
/// The logit scale (stored as e^s) and the bias are frozen; only W trains.
struct BilinearAdapter {
    PackedUpperTriangular w;
    float logit_scale = 1.0f;
    float bias = 0.0f;
    Mode mode = Mode::Clip;

    /// Identity W, which reproduces the zero-shot scores exactly.
    static BilinearAdapter zero_shot(std::size_t d, float logit_scale, float bias, Mode mode);

    std::size_t dim() const noexcept { return w.dim(); }

    /// Throws InvalidConfig if logit_scale <= 0 or a clip adapter has nonzero bias.
    void validate() const;

    friend bool operator==(const BilinearAdapter&, const BilinearAdapter&) = default;
};

/// Unconstrained D x D variant, used only by the init/structure ablation.
struct DenseAdapter {
    Matrix w;
    float logit_scale = 1.0f;
    float bias = 0.0f;
    Mode mode = Mode::Clip;

    std::size_t dim() const noexcept { return w.rows(); }
    void validate() const;

    friend bool operator==(const DenseAdapter&, const DenseAdapter&) = default;
};

/// scale * transformed * prompts^T + bias, where transformed = images * W.
/// Transformed features are deliberately not re-normalized.
MatrixD logits_from_transformed(const MatrixD& transformed, const Matrix& prompts, double logit_scale,
                                double bias);

MatrixD score(const BilinearAdapter& adapter, const Matrix& images, const Matrix& prompts);
MatrixD score(const DenseAdapter& adapter, const Matrix& images, const Matrix& prompts);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<std::uint32_t> argmax_rows(const MatrixD& logits);

template <typename Adapter>
std::vector<std::uint32_t> predict(const Adapter& adapter, const Matrix& images, const Matrix& prompts) {
    return argmax_rows(score(adapter, images, prompts));
}

/// Row-wise softmax with max subtraction.
MatrixD softmax_rows(const MatrixD& logits);

template <typename Adapter>
MatrixD posterior(const Adapter& adapter, const Matrix& images, const Matrix& prompts) {
    return softmax_rows(score(adapter, images, prompts));
}

} // namespace biadapt
