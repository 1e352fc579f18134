#include "biadapt/tri_linalg.hpp"

#include "biadapt/error.hpp"
#include "biadapt/parallel.hpp"

#include <cmath>
#include <string>

namespace biadapt {

PackedUpperTriangular::PackedUpperTriangular(std::size_t d, std::vector<float> data)
    : m_d(d), m_data(std::move(data)) {
    if (m_data.size() != packed_size(d)) {
        throw Error(ErrorKind::SizeMismatch, "packed upper triangle for d=" + std::to_string(d) +
                                                 " needs " + std::to_string(packed_size(d)) +
                                                 " scalars, got " + std::to_string(m_data.size()));
    }
}

PackedUpperTriangular PackedUpperTriangular::identity(std::size_t d) {
    PackedUpperTriangular w(d);
    for (std::size_t i = 0; i < d; ++i) w.ref(i, i) = 1.0f;
    return w;
}

MatrixD right_multiply(const Matrix& x, const PackedUpperTriangular& w) {
    const std::size_t d = w.dim();
    if (x.cols() != d) {
        throw Error(ErrorKind::DimMismatch, "right_multiply: x has " + std::to_string(x.cols()) +
                                                " columns, w is " + std::to_string(d) + "x" +
                                                std::to_string(d));
    }
    MatrixD out(x.rows(), d);
    const float* packed = w.data().data();
    parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto xr = x.row(r);
            auto acc = out.row(r);
            std::size_t k = 0;
            for (std::size_t i = 0; i < d; ++i) {
                const double xi = xr[i];
                for (std::size_t j = i; j < d; ++j) acc[j] += xi * static_cast<double>(packed[k++]);
            }
        }
    }, 16);
    return out;
}

MatrixD dense_right_multiply(const Matrix& x, const Matrix& w) {
    if (w.rows() != w.cols() || x.cols() != w.rows()) {
        throw Error(ErrorKind::DimMismatch, "dense_right_multiply: shapes do not conform");
    }
    const std::size_t d = w.cols();
    MatrixD out(x.rows(), d);
    parallel_for(x.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto xr = x.row(r);
            auto acc = out.row(r);
            for (std::size_t i = 0; i < d; ++i) {
                const double xi = xr[i];
                const auto wi = w.row(i);
                for (std::size_t j = 0; j < d; ++j) acc[j] += xi * static_cast<double>(wi[j]);
            }
        }
    }, 16);
    return out;
}

Matrix expand(const PackedUpperTriangular& w) {
    const std::size_t d = w.dim();
    Matrix m(d, d);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) m(i, j) = w.data()[k++];
    }
    return m;
}

PackedUpperTriangular pack(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::DimMismatch, "pack: matrix is not square");
    }
    const std::size_t d = m.rows();
    PackedUpperTriangular w(d);
    std::size_t k = 0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(static_cast<double>(m(i, j))) > 1e-12) {
                throw Error(ErrorKind::NotUpperTriangular,
                            "entry (" + std::to_string(i) + "," + std::to_string(j) + ") is nonzero");
            }
        }
        for (std::size_t j = i; j < d; ++j) w.data()[k++] = m(i, j);
    }
    return w;
}

template <typename Scalar>
double frobenius_norm(const BasicMatrix<Scalar>& m) noexcept {
    double acc = 0.0;
    for (const Scalar v : m.data()) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

template double frobenius_norm(const BasicMatrix<float>&) noexcept;
template double frobenius_norm(const BasicMatrix<double>&) noexcept;

namespace {

// Frobenius norm of G - I for the Gram matrix G = W^T W, where gram(a, b)
// yields entry (a, b). Only a <= b is visited; off-diagonal terms count twice.
template <typename GramEntry>
double gram_deviation(std::size_t d, GramEntry gram) {
    std::vector<double> row_sums(d, 0.0);
    parallel_for(d, [&](std::size_t begin, std::size_t end) {
        for (std::size_t a = begin; a < end; ++a) {
            double s = 0.0;
            for (std::size_t b = a; b < d; ++b) {
                const double g = gram(a, b) - (a == b ? 1.0 : 0.0);
                s += (a == b ? 1.0 : 2.0) * g * g;
            }
            row_sums[a] = s;
        }
    }, 8);
    double total = 0.0;
    for (const double s : row_sums) total += s;
    return std::sqrt(total) / static_cast<double>(d);
}

} // namespace

double orthogonality_error(const PackedUpperTriangular& w) {
    const std::size_t d = w.dim();
    if (d == 0) return 0.0;
    const Matrix dense = expand(w);
    return gram_deviation(d, [&](std::size_t a, std::size_t b) {
        // Column a of an upper-triangular matrix is zero below row a.
        double g = 0.0;
        for (std::size_t i = 0; i <= a; ++i) {
            g += static_cast<double>(dense(i, a)) * static_cast<double>(dense(i, b));
        }
        return g;
    });
}

double orthogonality_error(const Matrix& dense_w) {
    if (dense_w.rows() != dense_w.cols()) {
        throw Error(ErrorKind::DimMismatch, "orthogonality_error: matrix is not square");
    }
    const std::size_t d = dense_w.rows();
    if (d == 0) return 0.0;
    return gram_deviation(d, [&](std::size_t a, std::size_t b) {
        double g = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            g += static_cast<double>(dense_w(i, a)) * static_cast<double>(dense_w(i, b));
        }
        return g;
    });
}

} // namespace biadapt
