#include "biadapt/losses.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>

using namespace biadapt;

namespace {

struct Instance {
    BilinearAdapter adapter;
    Matrix images;
    Matrix prompts;
    std::vector<std::uint32_t> labels;
};

Instance random_instance(std::mt19937_64& rng, std::size_t d, std::size_t b, std::size_t k, Mode mode) {
    std::uniform_real_distribution<double> scale(1.0, 10.0);
    Instance inst;
    inst.adapter = {oracle::random_near_identity(d, 0.3, rng), static_cast<float>(scale(rng)),
                    mode == Mode::Siglip ? -1.5f : 0.0f, mode};
    inst.images = oracle::random_unit_rows(b, d, rng);
    inst.prompts = oracle::random_unit_rows(k, d, rng);
    std::uniform_int_distribution<std::uint32_t> lab(0, static_cast<std::uint32_t>(k - 1));
    for (std::size_t i = 0; i < b; ++i) inst.labels.push_back(lab(rng));
    return inst;
}

} // namespace

TEST_CASE("symmetric cross-entropy hand example") {
    // B = 2, scale 2, unit diagonal and zero off-diagonal similarity.
    const MatrixD logits(2, 2, {2, 0, 0, 2});
    const auto loss = symmetric_cross_entropy(logits);
    CHECK(loss.value == doctest::Approx(0.1269280110429725).epsilon(1e-12));
}

TEST_CASE("pairwise sigmoid hand example") {
    const MatrixD logits(1, 1, {10.0});
    const std::vector<std::uint32_t> labels{0};
    CHECK(pairwise_sigmoid(logits, labels).value == doctest::Approx(4.539889921686465e-05).epsilon(1e-10));
}

TEST_CASE("pairwise sigmoid is finite for extreme logits") {
    const MatrixD logits(1, 2, {-800.0, 800.0});
    const std::vector<std::uint32_t> labels{0};
    const auto loss = pairwise_sigmoid(logits, labels);
    CHECK(loss.value == doctest::Approx(800.0).epsilon(1e-12));
    CHECK(std::isfinite(loss.dlogits(0, 0)));
}

TEST_CASE("loss values match the dense oracle") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + trial % 6, b = 1 + trial % 4;
        auto clip = random_instance(rng, d, b, b, Mode::Clip);
        const auto x = oracle::to_dense(clip.images);
        const auto t = oracle::to_dense(clip.prompts);
        const auto w = oracle::dense_w(clip.adapter.w);
        const double want = oracle::symmetric_ce(oracle::logits(x, w, t, clip.adapter.logit_scale, 0.0));
        CHECK(biclip_loss(clip.adapter, clip.images, clip.prompts).value == doctest::Approx(want).epsilon(1e-10));

        auto sig = random_instance(rng, d, b, 3, Mode::Siglip);
        const double want_sig = oracle::pairwise_sigmoid(
            oracle::logits(oracle::to_dense(sig.images), oracle::dense_w(sig.adapter.w),
                           oracle::to_dense(sig.prompts), sig.adapter.logit_scale, sig.adapter.bias),
            sig.labels);
        CHECK(bisiglip_loss(sig.adapter, sig.images, sig.labels, sig.prompts).value ==
              doctest::Approx(want_sig).epsilon(1e-10));
    }
}

TEST_CASE("analytic gradients match central differences of the oracle") {
    std::mt19937_64 rng(1234);
    const std::size_t dims[] = {2, 4, 8};
    const std::size_t batches[] = {1, 2, 4};
    int instances = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = dims[trial % 3], b = batches[(trial / 3) % 3];
        auto clip = random_instance(rng, d, b, b, Mode::Clip);
        const auto x = oracle::to_dense(clip.images);
        const auto t = oracle::to_dense(clip.prompts);
        const double s = clip.adapter.logit_scale;
        const auto fd = oracle::finite_difference_grad(oracle::dense_w(clip.adapter.w), [&](const oracle::Dense& w) {
            return oracle::symmetric_ce(oracle::logits(x, w, t, s, 0.0));
        });
        const auto got = biclip_loss(clip.adapter, clip.images, clip.prompts).grad;
        CHECK(oracle::max_relative_error(got, fd) <= 1e-4);

        auto sig = random_instance(rng, d, b, 3, Mode::Siglip);
        const auto xs = oracle::to_dense(sig.images);
        const auto ts = oracle::to_dense(sig.prompts);
        const auto fds = oracle::finite_difference_grad(oracle::dense_w(sig.adapter.w), [&](const oracle::Dense& w) {
            return oracle::pairwise_sigmoid(oracle::logits(xs, w, ts, sig.adapter.logit_scale, sig.adapter.bias),
                                            sig.labels);
        });
        const auto gots = bisiglip_loss(sig.adapter, sig.images, sig.labels, sig.prompts).grad;
        CHECK(oracle::max_relative_error(gots, fds) <= 1e-4);
        ++instances;
    }
    CHECK(instances == 50);
}

TEST_CASE("dense gradient restricted to the upper triangle equals the packed gradient") {
    std::mt19937_64 rng(99);
    auto inst = random_instance(rng, 5, 3, 3, Mode::Clip);
    const MatrixD logits = score(inst.adapter, inst.images, inst.prompts);
    const auto ce = symmetric_cross_entropy(logits);
    const auto packed = packed_weight_gradient(inst.images, ce.dlogits, inst.prompts, inst.adapter.logit_scale);
    const MatrixD dense = dense_weight_gradient(inst.images, ce.dlogits, inst.prompts, inst.adapter.logit_scale);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i; j < 5; ++j) CHECK(packed[idx++] == doctest::Approx(dense(i, j)).epsilon(1e-12));
}

TEST_CASE("lower-triangle perturbations cannot reach the loss") {
    // A dense W that differs only below the diagonal is not representable,
    // and the packed view of it gives the same loss as the clean W.
    std::mt19937_64 rng(17);
    auto inst = random_instance(rng, 4, 3, 3, Mode::Clip);
    Matrix dense = expand(inst.adapter.w);
    const double base = biclip_loss(inst.adapter, inst.images, inst.prompts).value;
    dense(3, 0) = 5.0f;
    dense(2, 1) = -5.0f;
    const BilinearAdapter masked{PackedUpperTriangular(4, inst.adapter.w.data()), inst.adapter.logit_scale, 0.0f,
                                 Mode::Clip};
    CHECK(biclip_loss(masked, inst.images, inst.prompts).value == base);
    CHECK_THROWS_KIND(pack(dense), ErrorKind::NotUpperTriangular);
}

TEST_CASE("loss error paths") {
    const auto a = BilinearAdapter::zero_shot(2, 10.0f, 0.0f, Mode::Clip);
    const Matrix x(2, 2, {1, 0, 0, 1});
    const std::vector<std::uint32_t> dup{1, 1};
    CHECK_THROWS_KIND(biclip_loss(a, x, x, dup), ErrorKind::DuplicateClassInBatch);
    CHECK_THROWS_KIND(bisiglip_loss(a, x, std::vector<std::uint32_t>{0, 1}, x), ErrorKind::InvalidConfig);
    const auto s = BilinearAdapter::zero_shot(2, 10.0f, 0.0f, Mode::Siglip);
    CHECK_THROWS_KIND(bisiglip_loss(s, x, std::vector<std::uint32_t>{0, 2}, x), ErrorKind::LabelOutOfRange);
    CHECK_THROWS_KIND(symmetric_cross_entropy(MatrixD(2, 3)), ErrorKind::DimMismatch);
}

TEST_CASE("gradient reduction is deterministic") {
    std::mt19937_64 rng(31);
    auto inst = random_instance(rng, 8, 4, 4, Mode::Clip);
    const auto g1 = biclip_loss(inst.adapter, inst.images, inst.prompts).grad;
    const auto g2 = biclip_loss(inst.adapter, inst.images, inst.prompts).grad;
    CHECK(g1 == g2);
}
