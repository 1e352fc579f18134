#include "biadapt/synth.hpp"

#include "biadapt/geometry_analysis.hpp"
#include "biadapt/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <cmath>

using namespace biadapt;

namespace {

double zero_shot_accuracy(const SynthData& data) {
    const auto a = BilinearAdapter::zero_shot(data.prompts.d(), 100.0f, 0.0f, Mode::Clip);
    return evaluate(a, data.test, data.prompts);
}

} // namespace

TEST_CASE("shapes, labels and metadata") {
    SynthSpec spec;
    spec.d = 24;
    spec.k = 6;
    spec.train_per_class = 5;
    spec.test_per_class = 7;
    const auto data = generate(spec);
    CHECK(data.train.n() == 30);
    CHECK(data.test.n() == 42);
    CHECK(data.prompts.k() == 6);
    CHECK(data.train.d() == 24);
    CHECK(data.train.num_classes == 6);
    CHECK(data.prompts.class_names.size() == 6);
    CHECK(data.train_meta.split == "train");
    CHECK(data.test_meta.split == "test");
    CHECK(data.prompts_meta.split == "prompts");
    CHECK(data.prompts_meta.logit_scale == 100.0f);
    std::vector<std::size_t> per_class(6, 0);
    for (auto l : data.test.labels) ++per_class[l];
    for (auto c : per_class) CHECK(c == 7);
}

TEST_CASE("all rows have unit norm and anchors are orthonormal") {
    const auto data = generate(SynthSpec{});
    for (std::size_t r = 0; r < data.train.n(); ++r) CHECK(std::abs(l2_norm(data.train.features.row(r)) - 1.0) < 1e-6);
    for (std::size_t a = 0; a < data.prompts.k(); ++a)
        for (std::size_t b = 0; b < data.prompts.k(); ++b) {
            const double g = dot(data.prompts.features.row(a), data.prompts.features.row(b));
            CHECK(g == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-6));
        }
}

TEST_CASE("planted upper-triangular transform") {
    const auto data = generate(SynthSpec{});
    REQUIRE(data.planted.has_value());
    const MatrixD& t = *data.planted;
    double log_det = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < i; ++j) CHECK(t(i, j) == 0.0);
        CHECK(t(i, i) >= 1.0 / 1.5 - 1e-12);
        CHECK(t(i, i) <= 1.5 + 1e-12);
        log_det += std::log(t(i, i));
    }
    CHECK(std::abs(log_det) < 1e-9);
}

TEST_CASE("orthogonal transform is orthogonal") {
    SynthSpec spec;
    spec.transform = PlantedTransform::Orthogonal;
    spec.d = 16;
    spec.k = 4;
    const auto data = generate(spec);
    REQUIRE(data.planted.has_value());
    const MatrixD& q = *data.planted;
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = 0; b < 16; ++b) {
            double s = 0;
            for (std::size_t r = 0; r < 16; ++r) s += q(r, a) * q(r, b);
            CHECK(s == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10));
        }
}

TEST_CASE("no transform leaves the planted matrix empty") {
    SynthSpec spec;
    spec.transform = PlantedTransform::None;
    CHECK(!generate(spec).planted.has_value());
    CHECK(parse_transform("planted-upper-tri") == PlantedTransform::UpperTriangular);
    CHECK(transform_name(PlantedTransform::Orthogonal) == "planted-orthogonal");
    CHECK_THROWS_KIND(parse_transform("rotate"), ErrorKind::InvalidConfig);
}

TEST_CASE("generation is deterministic per seed") {
    SynthSpec spec;
    spec.seed = 42;
    const auto a = generate(spec), b = generate(spec);
    CHECK(a.train.features == b.train.features);
    CHECK(a.test.features == b.test.features);
    CHECK(a.prompts.features == b.prompts.features);
    CHECK(*a.planted == *b.planted);
    spec.seed = 43;
    CHECK(!(generate(spec).train.features == a.train.features));
}

TEST_CASE("infeasible specs are rejected") {
    SynthSpec spec;
    spec.d = 4;
    spec.k = 5;
    CHECK_THROWS_KIND(generate(spec), ErrorKind::InfeasibleSpec);
    spec.k = 1;
    CHECK_THROWS_KIND(generate(spec), ErrorKind::InfeasibleSpec);
    spec.k = 2;
    spec.noise_sigma = -1.0;
    CHECK_THROWS_KIND(generate(spec), ErrorKind::InfeasibleSpec);
}

TEST_CASE("noise-free untransformed data is solved exactly by the identity head") {
    SynthSpec spec;
    spec.transform = PlantedTransform::None;
    spec.noise_sigma = 0.0;
    spec.test_per_class = 4;
    const auto data = generate(spec);
    CHECK(zero_shot_accuracy(data) == 1.0);
    const auto a = BilinearAdapter::zero_shot(spec.d, 100.0f, 0.0f, Mode::Clip);
    const auto angles = collect_angles(a, data.test, data.prompts, 5, 0);
    for (double x : angles.positive) CHECK(x == 0.0);
}

TEST_CASE("noise-free planted transform is recovered within 200 epochs") {
    SynthSpec spec;
    spec.noise_sigma = 0.0;
    spec.train_per_class = 16;
    const auto data = generate(spec);
    TrainConfig c;
    c.shots = 16;
    c.epochs = 200;
    const auto r = train(data.train, data.prompts, c);
    CHECK(evaluate(r.adapter, data.test, data.prompts) >= 0.99);
}

TEST_CASE("more noise does not raise trained accuracy") {
    const double sigmas[] = {0.0, 0.1, 0.4};
    double prev = 2.0;
    for (double sigma : sigmas) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            SynthSpec spec;
            spec.d = 32;
            spec.k = 8;
            spec.train_per_class = 16;
            spec.test_per_class = 32;
            spec.noise_sigma = sigma;
            spec.seed = seed;
            const auto data = generate(spec);
            TrainConfig c;
            c.shots = 16;
            c.epochs = 200;
            c.seed = seed;
            mean += evaluate(train(data.train, data.prompts, c).adapter, data.test, data.prompts) / 5.0;
        }
        MESSAGE("sigma " << sigma << " mean trained accuracy " << mean);
        CHECK(mean <= prev + 1e-12);
        prev = mean;
    }
}

TEST_CASE("training improves accuracy under an orthogonal transform") {
    SynthSpec spec;
    spec.transform = PlantedTransform::Orthogonal;
    spec.train_per_class = 16;
    const auto data = generate(spec);
    TrainConfig c;
    c.shots = 16;
    c.epochs = 100;
    const double before = zero_shot_accuracy(data);
    const double after = evaluate(train(data.train, data.prompts, c).adapter, data.test, data.prompts);
    CHECK(after > before);
}

TEST_CASE("planted off-diagonals stay within 0.3") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        const MatrixD& t = *generate(spec).planted;
        for (std::size_t i = 0; i < t.rows(); ++i)
            for (std::size_t j = i + 1; j < t.cols(); ++j) CHECK(std::abs(t(i, j)) <= 0.3);
    }
}

TEST_CASE("the planted transform defeats the zero-shot head") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        CHECK(zero_shot_accuracy(generate(spec)) <= 0.5);
    }
}
