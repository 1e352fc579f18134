#include "biadapt/adapter.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace biadapt;

TEST_CASE("identity adapter reproduces the zero-shot logits") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + trial % 13, n = 1 + trial % 5, k = 1 + trial % 6;
        const Matrix x = oracle::random_unit_rows(n, d, rng);
        const Matrix t = oracle::random_unit_rows(k, d, rng);
        const auto a = BilinearAdapter::zero_shot(d, 100.0f, 0.0f, Mode::Clip);
        const MatrixD s = score(a, x, t);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < k; ++c) {
                const double want = 100.0 * dot(x.row(i), t.row(c));
                CHECK(std::abs(s(i, c) - want) <= 1e-5 * std::max(1.0, std::abs(want)));
            }
    }
}

TEST_CASE("scores match the dense oracle for general W and bias") {
    std::mt19937_64 rng(2);
    const auto w = oracle::random_near_identity(6, 0.4, rng);
    const Matrix x = oracle::random_unit_rows(4, 6, rng);
    const Matrix t = oracle::random_unit_rows(3, 6, rng);
    const BilinearAdapter a{w, 10.0f, -2.5f, Mode::Siglip};
    const MatrixD s = score(a, x, t);
    const auto want = oracle::logits(oracle::to_dense(x), oracle::dense_w(w), oracle::to_dense(t), 10.0, -2.5);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(s(i, c) == doctest::Approx(want[i][c]).epsilon(1e-12));

    const DenseAdapter dense{expand(w), 10.0f, -2.5f, Mode::Siglip};
    CHECK(score(dense, x, t) == s);
}

TEST_CASE("transformed features are not re-normalized") {
    const PackedUpperTriangular w(2, {2, 0, 2});
    const BilinearAdapter a{w, 1.0f, 0.0f, Mode::Clip};
    const Matrix x(1, 2, {1, 0});
    const Matrix t(1, 2, {1, 0});
    CHECK(score(a, x, t)(0, 0) == 2.0);
}

TEST_CASE("softmax example") {
    const MatrixD logits(1, 2, {std::log(2.0), 0.0});
    const MatrixD p = softmax_rows(logits);
    CHECK(p(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and survive large logits") {
    const MatrixD logits(2, 3, {1000, 999, -1000, -5, 0, 5});
    const MatrixD p = softmax_rows(logits);
    for (std::size_t r = 0; r < 2; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(std::isfinite(p(r, c)));
            s += p(r, c);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("ties resolve to the lowest class index") {
    const MatrixD logits(2, 3, {1, 3, 3, 0, 0, 0});
    CHECK(argmax_rows(logits) == std::vector<std::uint32_t>{1, 0});
}

TEST_CASE("posterior over a single class is exactly one") {
    const auto a = BilinearAdapter::zero_shot(3, 100.0f, 0.0f, Mode::Clip);
    const Matrix x(2, 3, {1, 0, 0, 0, 1, 0});
    const Matrix t(1, 3, {0, 0, 1});
    const MatrixD p = posterior(a, x, t);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(1, 0) == 1.0);
}

TEST_CASE("zero_shot forces a zero bias in clip mode") {
    CHECK(BilinearAdapter::zero_shot(2, 50.0f, -10.0f, Mode::Clip).bias == 0.0f);
    CHECK(BilinearAdapter::zero_shot(2, 50.0f, -10.0f, Mode::Siglip).bias == -10.0f);
}

TEST_CASE("adapter validation") {
    auto a = BilinearAdapter::zero_shot(2, 1.0f, 0.0f, Mode::Clip);
    a.logit_scale = 0.0f;
    CHECK_THROWS_KIND(a.validate(), ErrorKind::InvalidConfig);
    a.logit_scale = 1.0f;
    a.bias = 1.0f;
    CHECK_THROWS_KIND(a.validate(), ErrorKind::InvalidConfig);
    CHECK(parse_mode("siglip") == Mode::Siglip);
    CHECK(mode_name(Mode::Clip) == "clip");
    CHECK_THROWS_KIND(parse_mode("blip"), ErrorKind::InvalidConfig);
}
