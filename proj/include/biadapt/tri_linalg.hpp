#pragma once

#include "biadapt/matrix.hpp"

#include <cstddef>
#include <vector>

namespace biadapt {

constexpr std::size_t packed_size(std::size_t d) noexcept { return d * (d + 1) / 2; }

/// Upper-triangular D x D matrix holding only entries (i, j) with i <= j,
/// packed row by row: row i occupies [offset(i), offset(i) + d - i).
class PackedUpperTriangular {
public:
    PackedUpperTriangular() = default;
    explicit PackedUpperTriangular(std::size_t d) : m_d(d), m_data(packed_size(d), 0.0f) {}
    PackedUpperTriangular(std::size_t d, std::vector<float> data);

    static PackedUpperTriangular identity(std::size_t d);

    std::size_t dim() const noexcept { return m_d; }
    std::size_t size() const noexcept { return m_data.size(); }

    std::size_t index(std::size_t i, std::size_t j) const noexcept {
        return i * (2 * m_d - i + 1) / 2 + (j - i);
    }
    float at(std::size_t i, std::size_t j) const noexcept { return i > j ? 0.0f : m_data[index(i, j)]; }
    float& ref(std::size_t i, std::size_t j) noexcept { return m_data[index(i, j)]; }

    std::vector<float>& data() noexcept { return m_data; }
    const std::vector<float>& data() const noexcept { return m_data; }

    friend bool operator==(const PackedUpperTriangular&, const PackedUpperTriangular&) = default;

private:
    std::size_t m_d = 0;
    std::vector<float> m_data;
};

/// x * expand(w), accumulated in double. Only i <= j terms are visited.
MatrixD right_multiply(const Matrix& x, const PackedUpperTriangular& w);

/// x * w for a full D x D matrix (dense ablation path).
MatrixD dense_right_multiply(const Matrix& x, const Matrix& w);

Matrix expand(const PackedUpperTriangular& w);

/// Throws NotUpperTriangular if any strictly-lower entry exceeds 1e-12 in magnitude.
PackedUpperTriangular pack(const Matrix& m);

template <typename Scalar>
double frobenius_norm(const BasicMatrix<Scalar>& m) noexcept;

/// ||W^T W - I||_F / D.
double orthogonality_error(const PackedUpperTriangular& w);
double orthogonality_error(const Matrix& dense_w);

} // namespace biadapt
