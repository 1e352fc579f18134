#pragma once

#include "biadapt/adapter.hpp"
#include "biadapt/matrix.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace biadapt {

/// Loss value plus its gradient with respect to the packed upper triangle
/// of W (same layout as PackedUpperTriangular::data()).
struct LossValueAndGrad {
    double value = 0.0;
    std::vector<double> grad;
};

/// Loss value plus dLoss/dLogits, before projection onto W.
struct LogitLoss {
    double value = 0.0;
    MatrixD dlogits;
};

/// Symmetric cross-entropy over a square logit matrix whose diagonal holds
/// the positive pairs. Both log-softmaxes are max-stabilized.
LogitLoss symmetric_cross_entropy(const MatrixD& logits);

/// Mean over all B*K pairs of -log sigmoid(y * logit), y = +1 iff labels[j] == k.
LogitLoss pairwise_sigmoid(const MatrixD& logits, std::span<const std::uint32_t> labels);

/// logit_scale * X^T (G T), restricted to i <= j and packed row-major.
/// Rows of the result are independent, and each entry sums over the batch
/// in increasing row order, so the reduction is deterministic.
std::vector<double> packed_weight_gradient(const Matrix& images, const MatrixD& dlogits,
                                           const Matrix& prompts, double logit_scale);

/// Full D x D counterpart of packed_weight_gradient for the dense ablation.
MatrixD dense_weight_gradient(const Matrix& images, const MatrixD& dlogits, const Matrix& prompts,
                              double logit_scale);

/// Contrastive loss over a batch of (image, class prompt) pairs. If
/// batch_classes is given, it must list B distinct class indices, one per
/// pair; duplicates raise DuplicateClassInBatch.
LossValueAndGrad biclip_loss(const BilinearAdapter& adapter, const Matrix& images,
                             const Matrix& prompts_for_batch,
                             std::span<const std::uint32_t> batch_classes = {});

/// Pairwise sigmoid loss of each batch image against all K prompts.
LossValueAndGrad bisiglip_loss(const BilinearAdapter& adapter, const Matrix& images,
                               std::span<const std::uint32_t> labels, const Matrix& prompts);

/// Throws DuplicateClassInBatch when a class index repeats.
void require_distinct_classes(std::span<const std::uint32_t> classes);

} // namespace biadapt
