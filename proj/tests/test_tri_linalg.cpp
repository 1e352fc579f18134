#include "biadapt/tri_linalg.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace biadapt;

TEST_CASE("packed parameter counts") {
    CHECK(packed_size(1) == 1);
    CHECK(packed_size(3) == 6);
    CHECK(packed_size(512) == 131328);
    CHECK(packed_size(768) == 295296);
}

TEST_CASE("identity layout for d=3") {
    const auto w = PackedUpperTriangular::identity(3);
    CHECK(w.data() == std::vector<float>{1, 0, 0, 1, 0, 1});
}

TEST_CASE("packed index visits row-major upper entries in order") {
    for (std::size_t d : {1u, 2u, 5u, 9u}) {
        PackedUpperTriangular w(d);
        std::size_t expected = 0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) CHECK(w.index(i, j) == expected++);
        CHECK(expected == w.size());
    }
}

TEST_CASE("lower entries read as zero") {
    std::mt19937_64 rng(5);
    const auto w = oracle::random_near_identity(6, 1.0, rng);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < i; ++j) CHECK(w.at(i, j) == 0.0f);
    const Matrix dense = expand(w);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < i; ++j) CHECK(dense(i, j) == 0.0f);
}

TEST_CASE("hand example at d=2") {
    const PackedUpperTriangular w(2, {1, 3, 1});
    const Matrix x(1, 2, {1, 2});
    const MatrixD y = right_multiply(x, w);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == 5.0);
}

TEST_CASE("packed product agrees with a naive dense product") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 1 + trial % 11, n = 1 + trial % 7;
        const auto w = oracle::random_near_identity(d, 0.5, rng);
        const Matrix x = oracle::random_unit_rows(n, d, rng);
        const MatrixD got = right_multiply(x, w);
        const auto want = oracle::matmul(oracle::to_dense(x), oracle::dense_w(w));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) CHECK(got(r, c) == doctest::Approx(want[r][c]).epsilon(1e-12));
        const MatrixD via_dense = dense_right_multiply(x, expand(w));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) CHECK(via_dense(r, c) == doctest::Approx(got(r, c)).epsilon(1e-12));
    }
}

TEST_CASE("pack and expand are inverse on upper-triangular matrices") {
    std::mt19937_64 rng(8);
    const auto w = oracle::random_near_identity(7, 0.7, rng);
    CHECK(pack(expand(w)) == w);
}

TEST_CASE("packing rejects lower entries and non-square input") {
    Matrix m(2, 2, {1, 0, 0.5f, 1});
    CHECK_THROWS_KIND(pack(m), ErrorKind::NotUpperTriangular);
    CHECK_THROWS_KIND(pack(Matrix(2, 3)), ErrorKind::DimMismatch);
}

TEST_CASE("shape errors") {
    CHECK_THROWS_KIND(PackedUpperTriangular(3, std::vector<float>(5)), ErrorKind::SizeMismatch);
    CHECK_THROWS_KIND(right_multiply(Matrix(1, 3), PackedUpperTriangular::identity(2)), ErrorKind::DimMismatch);
}

TEST_CASE("orthogonality error and Frobenius norm examples") {
    CHECK(orthogonality_error(PackedUpperTriangular::identity(5)) == 0.0);
    auto w = PackedUpperTriangular::identity(4);
    for (float& v : w.data())
        if (v != 0.0f) v = static_cast<float>(std::sqrt(2.0));
    CHECK(orthogonality_error(w) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(orthogonality_error(expand(w)) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(frobenius_norm(expand(PackedUpperTriangular::identity(4))) == doctest::Approx(2.0));
}

TEST_CASE("orthogonality error of a diagonal matrix matches the closed form") {
    // diag(a): W^T W - I = diag(a^2 - 1)
    const PackedUpperTriangular w(3, {2, 0, 0, 1, 0, 0.5f});
    const double expect = std::sqrt(9.0 + 0.0 + 0.5625) / 3.0;
    CHECK(orthogonality_error(w) == doctest::Approx(expect).epsilon(1e-9));
}
