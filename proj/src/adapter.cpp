#include "biadapt/adapter.hpp"

#include "biadapt/error.hpp"
#include "biadapt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace biadapt {

std::string_view mode_name(Mode mode) noexcept {
    return mode == Mode::Clip ? "clip" : "siglip";
}

Mode parse_mode(std::string_view name) {
    if (name == "clip") return Mode::Clip;
    if (name == "siglip") return Mode::Siglip;
    throw Error(ErrorKind::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

namespace {

void validate_head(float logit_scale, float bias, Mode mode) {
    if (!(logit_scale > 0.0f) || !std::isfinite(logit_scale)) {
        throw Error(ErrorKind::InvalidConfig, "logit_scale must be positive and finite");
    }
    if (mode == Mode::Clip && bias != 0.0f) {
        throw Error(ErrorKind::InvalidConfig, "clip mode requires bias == 0");
    }
}

void check_dims(std::size_t d, const Matrix& images, const Matrix& prompts) {
    if (images.cols() != d || prompts.cols() != d) {
        throw Error(ErrorKind::DimMismatch,
                    "adapter d=" + std::to_string(d) + ", images d=" + std::to_string(images.cols()) +
                        ", prompts d=" + std::to_string(prompts.cols()));
    }
}

} // namespace

BilinearAdapter BilinearAdapter::zero_shot(std::size_t d, float logit_scale, float bias, Mode mode) {
    BilinearAdapter a{PackedUpperTriangular::identity(d), logit_scale, mode == Mode::Clip ? 0.0f : bias, mode};
    a.validate();
    return a;
}

void BilinearAdapter::validate() const { validate_head(logit_scale, bias, mode); }
void DenseAdapter::validate() const {
    if (w.rows() != w.cols()) throw Error(ErrorKind::DimMismatch, "dense W must be square");
    validate_head(logit_scale, bias, mode);
}

MatrixD logits_from_transformed(const MatrixD& transformed, const Matrix& prompts, double logit_scale,
                                double bias) {
    if (transformed.cols() != prompts.cols()) {
        throw Error(ErrorKind::DimMismatch, "transformed features and prompts differ in d");
    }
    MatrixD logits(transformed.rows(), prompts.rows());
    parallel_for(transformed.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto x = transformed.row(r);
            for (std::size_t k = 0; k < prompts.rows(); ++k) {
                logits(r, k) = logit_scale * dot(x, prompts.row(k)) + bias;
            }
        }
    }, 16);
    return logits;
}

MatrixD score(const BilinearAdapter& adapter, const Matrix& images, const Matrix& prompts) {
    check_dims(adapter.dim(), images, prompts);
    return logits_from_transformed(right_multiply(images, adapter.w), prompts, adapter.logit_scale,
                                   adapter.bias);
}

MatrixD score(const DenseAdapter& adapter, const Matrix& images, const Matrix& prompts) {
    check_dims(adapter.dim(), images, prompts);
    return logits_from_transformed(dense_right_multiply(images, adapter.w), prompts,
                                   adapter.logit_scale, adapter.bias);
}

std::vector<std::uint32_t> argmax_rows(const MatrixD& logits) {
    std::vector<std::uint32_t> out(logits.rows(), 0);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        // max_element returns the first maximum.
        out[r] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

MatrixD softmax_rows(const MatrixD& logits) {
    MatrixD out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto in = logits.row(r);
        auto p = out.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t k = 0; k < in.size(); ++k) {
            p[k] = std::exp(in[k] - mx);
            z += p[k];
        }
        for (double& v : p) v /= z;
    }
    return out;
}

} // namespace biadapt
