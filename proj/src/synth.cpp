#include "biadapt/synth.hpp"

#include "biadapt/error.hpp"
#include "biadapt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace biadapt {

std::string_view transform_name(PlantedTransform t) noexcept {
    switch (t) {
    case PlantedTransform::None: return "none";
    case PlantedTransform::UpperTriangular: return "planted-upper-tri";
    case PlantedTransform::Orthogonal: return "planted-orthogonal";
    }
    return "none";
}

PlantedTransform parse_transform(std::string_view name) {
    if (name == "none") return PlantedTransform::None;
    if (name == "planted-upper-tri" || name == "planted_upper_tri") return PlantedTransform::UpperTriangular;
    if (name == "planted-orthogonal" || name == "planted_orthogonal") return PlantedTransform::Orthogonal;
    throw Error(ErrorKind::InvalidConfig, "unknown transform '" + std::string(name) + "'");
}

namespace {

constexpr double kCoupling = 0.3;
constexpr double kBackground = 0.05;

MatrixD planted_upper_triangular(std::size_t d, std::size_t k, const std::vector<double>& signs, Rng& rng) {
    MatrixD p(d, d);

    // Log-diagonal drawn in +/- pairs so the determinant is exactly 1.
    std::uniform_real_distribution<double> log_diag(0.0, std::log(1.5));
    std::vector<double> logs(d, 0.0);
    for (std::size_t i = 0; i + 1 < d; i += 2) {
        const double u = log_diag(rng);
        logs[i] = u;
        logs[i + 1] = -u;
    }
    std::shuffle(logs.begin(), logs.end(), rng);
    for (std::size_t i = 0; i < d; ++i) p(i, i) = std::exp(logs[i]);

    std::uniform_real_distribution<double> background(-kBackground, kBackground);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) p(i, j) = background(rng);
    }

    // Block c leaks into every later block with a sign-aligned coupling, so
    // an image of class c scores higher on later anchors than on its own.
    const std::size_t m = d / k;
    std::uniform_real_distribution<double> strength(0.5, 1.0);
    for (std::size_t c = 0; c + 1 < k; ++c) {
        for (std::size_t c2 = c + 1; c2 < k; ++c2) {
            const double s = kCoupling * strength(rng);
            for (std::size_t i = c * m; i < (c + 1) * m; ++i) {
                for (std::size_t j = c2 * m; j < (c2 + 1) * m; ++j) p(i, j) = s * signs[i] * signs[j];
            }
        }
    }
    return p;
}

MatrixD random_orthogonal(std::size_t d, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixD q(d, d);
    for (double& v : q.data()) v = gauss(rng);
    // Modified Gram-Schmidt over rows, twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t r = 0; r < d; ++r) {
            auto row = q.row(r);
            for (std::size_t p = 0; p < r; ++p) {
                const auto prev = q.row(p);
                double proj = 0.0;
                for (std::size_t j = 0; j < d; ++j) proj += row[j] * prev[j];
                for (std::size_t j = 0; j < d; ++j) row[j] -= proj * prev[j];
            }
            double norm = 0.0;
            for (const double v : row) norm += v * v;
            norm = std::sqrt(norm);
            for (double& v : row) v /= norm;
        }
    }
    return q;
}

void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
}

EmbeddingSet sample_split(const SynthSpec& spec, const MatrixD& anchors, const std::optional<MatrixD>& planted,
                          std::size_t per_class, Rng& rng) {
    const std::size_t d = spec.d;
    EmbeddingSet set{Matrix(spec.k * per_class, d), std::vector<std::uint32_t>(spec.k * per_class),
                     static_cast<std::uint32_t>(spec.k)};
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> clean(d), moved(d);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.k; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            for (std::size_t j = 0; j < d; ++j) clean[j] = anchors(c, j) + spec.noise_sigma * noise(rng);
            // Anchors are already unit norm; leave noise-free rows bit-identical to them.
            if (spec.noise_sigma > 0.0) normalize(clean);
            if (planted) {
                std::fill(moved.begin(), moved.end(), 0.0);
                for (std::size_t i = 0; i < d; ++i) {
                    const auto pi = planted->row(i);
                    for (std::size_t j = 0; j < d; ++j) moved[j] += clean[i] * pi[j];
                }
                normalize(moved);
            } else {
                moved = clean;
            }
            auto out = set.features.row(row);
            for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(moved[j]);
            set.labels[row] = static_cast<std::uint32_t>(c);
        }
    }
    return set;
}

} // namespace

SynthData generate(const SynthSpec& spec) {
    if (spec.d == 0 || spec.k < 2 || spec.k > spec.d) {
        throw Error(ErrorKind::InfeasibleSpec, "need 2 <= k <= d for orthonormal anchors (d=" +
                                                   std::to_string(spec.d) + ", k=" + std::to_string(spec.k) + ")");
    }
    if (!(spec.noise_sigma >= 0.0)) throw Error(ErrorKind::InfeasibleSpec, "noise_sigma must be >= 0");
    if (spec.train_per_class == 0 || spec.test_per_class == 0) {
        throw Error(ErrorKind::InfeasibleSpec, "per-class sample counts must be positive");
    }

    Rng anchor_rng = make_rng(spec.seed, "synth.anchors");
    std::bernoulli_distribution coin(0.5);
    std::vector<double> signs(spec.d);
    for (double& s : signs) s = coin(anchor_rng) ? 1.0 : -1.0;

    const std::size_t m = spec.d / spec.k;
    MatrixD anchors(spec.k, spec.d);
    const double amp = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t c = 0; c < spec.k; ++c) {
        for (std::size_t j = c * m; j < (c + 1) * m; ++j) anchors(c, j) = amp * signs[j];
    }

    std::optional<MatrixD> planted;
    Rng transform_rng = make_rng(spec.seed, "synth.transform");
    if (spec.transform == PlantedTransform::UpperTriangular) {
        planted = planted_upper_triangular(spec.d, spec.k, signs, transform_rng);
    } else if (spec.transform == PlantedTransform::Orthogonal) {
        planted = random_orthogonal(spec.d, transform_rng);
    }

    Rng train_rng = make_rng(spec.seed, "synth.train");
    Rng test_rng = make_rng(spec.seed, "synth.test");

    SynthData out;
    out.train = sample_split(spec, anchors, planted, spec.train_per_class, train_rng);
    out.test = sample_split(spec, anchors, planted, spec.test_per_class, test_rng);

    out.prompts.features = Matrix(spec.k, spec.d);
    for (std::size_t c = 0; c < spec.k; ++c) {
        for (std::size_t j = 0; j < spec.d; ++j) out.prompts.features(c, j) = static_cast<float>(anchors(c, j));
        out.prompts.class_names.push_back("class_" + std::to_string(c));
    }

    const std::string dataset = "synth-" + std::string(transform_name(spec.transform));
    const float bias = spec.bias;
    out.train_meta = {"synthetic", spec.logit_scale, bias, dataset, "train", out.prompts.class_names};
    out.test_meta = {"synthetic", spec.logit_scale, bias, dataset, "test", out.prompts.class_names};
    out.prompts_meta = {"synthetic", spec.logit_scale, bias, dataset, "prompts", out.prompts.class_names};
    out.planted = std::move(planted);
    return out;
}

} // namespace biadapt
