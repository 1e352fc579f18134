#include "biadapt/matrix.hpp"

#include "biadapt/error.hpp"

#include <cmath>
#include <string>

namespace biadapt {

template <typename Scalar>
BasicMatrix<Scalar>::BasicMatrix(std::size_t rows, std::size_t cols, std::vector<Scalar> data)
    : m_rows(rows), m_cols(cols), m_data(std::move(data)) {
    if (m_data.size() != rows * cols) {
        throw Error(ErrorKind::DimMismatch, "matrix buffer has " + std::to_string(m_data.size()) +
                                                " entries, expected " + std::to_string(rows * cols));
    }
}

template class BasicMatrix<float>;
template class BasicMatrix<double>;

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), m.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = m.row(indices[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double dot(std::span<const double> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * static_cast<double>(b[i]);
    }
    return acc;
}

double l2_norm(std::span<const float> v) noexcept {
    return std::sqrt(dot(v, v));
}

} // namespace biadapt
