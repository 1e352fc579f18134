#include "biadapt/losses.hpp"

#include "biadapt/error.hpp"
#include "biadapt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace biadapt {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

void require_distinct_classes(std::span<const std::uint32_t> classes) {
    std::unordered_set<std::uint32_t> seen;
    for (const auto c : classes) {
        if (!seen.insert(c).second) {
            throw Error(ErrorKind::DuplicateClassInBatch, "class " + std::to_string(c) + " repeats in batch");
        }
    }
}

LogitLoss symmetric_cross_entropy(const MatrixD& logits) {
    const std::size_t b = logits.rows();
    if (logits.cols() != b) {
        throw Error(ErrorKind::DimMismatch, "symmetric cross-entropy needs a square logit matrix");
    }
    LogitLoss out{0.0, MatrixD(b, b)};
    if (b == 0) return out;

    std::vector<double> row_max(b, -INFINITY), col_max(b, -INFINITY);
    for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t c = 0; c < b; ++c) {
            row_max[r] = std::max(row_max[r], logits(r, c));
            col_max[c] = std::max(col_max[c], logits(r, c));
        }
    }
    std::vector<double> row_sum(b, 0.0), col_sum(b, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t c = 0; c < b; ++c) {
            row_sum[r] += std::exp(logits(r, c) - row_max[r]);
            col_sum[c] += std::exp(logits(r, c) - col_max[c]);
        }
    }
    std::vector<double> row_lse(b), col_lse(b);
    for (std::size_t i = 0; i < b; ++i) {
        row_lse[i] = row_max[i] + std::log(row_sum[i]);
        col_lse[i] = col_max[i] + std::log(col_sum[i]);
    }

    const double norm = 1.0 / (2.0 * static_cast<double>(b));
    double total = 0.0;
    for (std::size_t n = 0; n < b; ++n) {
        total += (row_lse[n] - logits(n, n)) + (col_lse[n] - logits(n, n));
    }
    out.value = norm * total;

    for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t c = 0; c < b; ++c) {
            const double p_row = std::exp(logits(r, c) - row_lse[r]);
            const double p_col = std::exp(logits(r, c) - col_lse[c]);
            out.dlogits(r, c) = norm * (p_row + p_col - (r == c ? 2.0 : 0.0));
        }
    }
    return out;
}

LogitLoss pairwise_sigmoid(const MatrixD& logits, std::span<const std::uint32_t> labels) {
    const std::size_t b = logits.rows();
    const std::size_t k = logits.cols();
    if (labels.size() != b) {
        throw Error(ErrorKind::DimMismatch, "pairwise sigmoid: " + std::to_string(labels.size()) +
                                                " labels for " + std::to_string(b) + " rows");
    }
    LogitLoss out{0.0, MatrixD(b, k)};
    if (b == 0 || k == 0) return out;

    const double norm = 1.0 / static_cast<double>(b * k);
    double total = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
        if (labels[j] >= k) {
            throw Error(ErrorKind::LabelOutOfRange,
                        "label " + std::to_string(labels[j]) + " with K=" + std::to_string(k));
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double y = labels[j] == c ? 1.0 : -1.0;
            const double z = y * logits(j, c);
            total += softplus(-z);
            // d/dS of softplus(-y S) = -y * sigmoid(-y S)
            out.dlogits(j, c) = -norm * y * sigmoid(-z);
        }
    }
    out.value = norm * total;
    return out;
}

namespace {

// A = G * T, B x D.
MatrixD logit_grad_times_prompts(const MatrixD& dlogits, const Matrix& prompts) {
    const std::size_t d = prompts.cols();
    MatrixD a(dlogits.rows(), d);
    for (std::size_t r = 0; r < dlogits.rows(); ++r) {
        auto ar = a.row(r);
        for (std::size_t c = 0; c < dlogits.cols(); ++c) {
            const double g = dlogits(r, c);
            const auto t = prompts.row(c);
            for (std::size_t j = 0; j < d; ++j) ar[j] += g * static_cast<double>(t[j]);
        }
    }
    return a;
}

void check_gradient_shapes(const Matrix& images, const MatrixD& dlogits, const Matrix& prompts) {
    if (images.rows() != dlogits.rows() || prompts.rows() != dlogits.cols() ||
        images.cols() != prompts.cols()) {
        throw Error(ErrorKind::DimMismatch, "weight gradient: shapes do not conform");
    }
}

} // namespace

std::vector<double> packed_weight_gradient(const Matrix& images, const MatrixD& dlogits,
                                           const Matrix& prompts, double logit_scale) {
    check_gradient_shapes(images, dlogits, prompts);
    const std::size_t d = images.cols();
    const MatrixD a = logit_grad_times_prompts(dlogits, prompts);
    std::vector<double> grad(packed_size(d), 0.0);
    parallel_for(d, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* gi = grad.data() + i * (2 * d - i + 1) / 2;
            for (std::size_t r = 0; r < images.rows(); ++r) {
                const double x = static_cast<double>(images(r, i));
                const auto ar = a.row(r);
                for (std::size_t j = i; j < d; ++j) gi[j - i] += x * ar[j];
            }
            for (std::size_t j = i; j < d; ++j) gi[j - i] *= logit_scale;
        }
    }, 8);
    return grad;
}

MatrixD dense_weight_gradient(const Matrix& images, const MatrixD& dlogits, const Matrix& prompts,
                              double logit_scale) {
    check_gradient_shapes(images, dlogits, prompts);
    const std::size_t d = images.cols();
    const MatrixD a = logit_grad_times_prompts(dlogits, prompts);
    MatrixD grad(d, d);
    parallel_for(d, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto gi = grad.row(i);
            for (std::size_t r = 0; r < images.rows(); ++r) {
                const double x = static_cast<double>(images(r, i));
                const auto ar = a.row(r);
                for (std::size_t j = 0; j < d; ++j) gi[j] += x * ar[j];
            }
            for (double& g : gi) g *= logit_scale;
        }
    }, 8);
    return grad;
}

LossValueAndGrad biclip_loss(const BilinearAdapter& adapter, const Matrix& images,
                             const Matrix& prompts_for_batch,
                             std::span<const std::uint32_t> batch_classes) {
    if (images.rows() != prompts_for_batch.rows()) {
        throw Error(ErrorKind::DimMismatch, "biclip_loss: images and prompts must pair index-wise");
    }
    if (!batch_classes.empty()) {
        if (batch_classes.size() != images.rows()) {
            throw Error(ErrorKind::DimMismatch, "biclip_loss: one class index per pair required");
        }
        require_distinct_classes(batch_classes);
    }
    const MatrixD logits = score(adapter, images, prompts_for_batch);
    LogitLoss l = symmetric_cross_entropy(logits);
    return {l.value, packed_weight_gradient(images, l.dlogits, prompts_for_batch, adapter.logit_scale)};
}

LossValueAndGrad bisiglip_loss(const BilinearAdapter& adapter, const Matrix& images,
                               std::span<const std::uint32_t> labels, const Matrix& prompts) {
    if (adapter.mode != Mode::Siglip) {
        throw Error(ErrorKind::InvalidConfig, "bisiglip_loss requires a siglip-mode adapter");
    }
    const MatrixD logits = score(adapter, images, prompts);
    LogitLoss l = pairwise_sigmoid(logits, labels);
    return {l.value, packed_weight_gradient(images, l.dlogits, prompts, adapter.logit_scale)};
}

} // namespace biadapt
