#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace biadapt {

/// Dense row-major matrix. Scalar is float for stored features and double
/// for intermediate results (logits, gradients).
template <typename Scalar>
class BasicMatrix {
public:
    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, Scalar fill = Scalar{0})
        : m_rows(rows), m_cols(cols), m_data(rows * cols, fill) {}
    BasicMatrix(std::size_t rows, std::size_t cols, std::vector<Scalar> data);

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t cols() const noexcept { return m_cols; }
    bool empty() const noexcept { return m_data.empty(); }

    Scalar& operator()(std::size_t r, std::size_t c) noexcept { return m_data[r * m_cols + c]; }
    Scalar operator()(std::size_t r, std::size_t c) const noexcept { return m_data[r * m_cols + c]; }

    std::span<Scalar> row(std::size_t r) noexcept { return {m_data.data() + r * m_cols, m_cols}; }
    std::span<const Scalar> row(std::size_t r) const noexcept {
        return {m_data.data() + r * m_cols, m_cols};
    }

    std::vector<Scalar>& data() noexcept { return m_data; }
    const std::vector<Scalar>& data() const noexcept { return m_data; }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<Scalar> m_data;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

extern template class BasicMatrix<float>;
extern template class BasicMatrix<double>;

/// Copy a sub-selection of rows, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

double dot(std::span<const float> a, std::span<const float> b) noexcept;
double dot(std::span<const double> a, std::span<const float> b) noexcept;
double l2_norm(std::span<const float> v) noexcept;

} // namespace biadapt
