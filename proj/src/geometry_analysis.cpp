#include "biadapt/geometry_analysis.hpp"

#include "biadapt/error.hpp"
#include "biadapt/parallel.hpp"
#include "biadapt/rng.hpp"
#include "biadapt/tri_linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace biadapt {

namespace {

template <typename A, typename B>
double angle_impl(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimMismatch, "angular_distance: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if (aa == 0.0 || bb == 0.0) throw Error(ErrorKind::ZeroVector, "angular_distance of a zero vector");
    const double cosine = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / std::numbers::pi;
}

double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

double angular_distance(std::span<const double> a, std::span<const double> b) { return angle_impl(a, b); }
double angular_distance(std::span<const float> a, std::span<const float> b) { return angle_impl(a, b); }

AngleSamples collect_angles(const BilinearAdapter& adapter, const EmbeddingSet& test_set, const PromptSet& prompts,
                            std::size_t n_negatives, std::uint64_t seed) {
    require_compatible(test_set, prompts);
    const std::size_t k = prompts.k();
    if (k <= n_negatives) {
        throw Error(ErrorKind::TooFewClasses, "need more than " + std::to_string(n_negatives) +
                                                  " classes to draw distinct negatives, have " + std::to_string(k));
    }
    const MatrixD transformed = right_multiply(test_set.features, adapter.w);
    const std::size_t n = test_set.n();

    AngleSamples out;
    out.negatives_per_image = n_negatives;
    out.positive.resize(n);
    out.negative.resize(n * n_negatives);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> wrong;
        std::vector<std::uint32_t> picked(n_negatives);
        for (std::size_t j = begin; j < end; ++j) {
            const auto image = transformed.row(j);
            const std::uint32_t label = test_set.labels[j];
            out.positive[j] = angle_impl(image, prompts.features.row(label));

            wrong.clear();
            for (std::uint32_t c = 0; c < k; ++c) {
                if (c != label) wrong.push_back(c);
            }
            Rng rng = make_rng(seed, "negatives", j);
            std::sample(wrong.begin(), wrong.end(), picked.begin(), n_negatives, rng);
            for (std::size_t s = 0; s < n_negatives; ++s) {
                out.negative[j * n_negatives + s] = angle_impl(image, prompts.features.row(picked[s]));
            }
        }
    }, 32);
    return out;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    if (n < 2) throw Error(ErrorKind::BadGrid, "grid needs at least 2 points");
    std::vector<double> g(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

double simpson(std::span<const double> values, std::span<const double> grid) {
    const std::size_t n = grid.size();
    if (values.size() != n) throw Error(ErrorKind::BadGrid, "values and grid differ in length");
    if (n < 3 || n % 2 == 0) throw Error(ErrorKind::BadGrid, "Simpson needs an odd point count >= 3");
    const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
    if (!(h > 0.0)) throw Error(ErrorKind::BadGrid, "grid must be increasing");
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs((grid[i] - grid[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            throw Error(ErrorKind::BadGrid, "grid spacing is not uniform");
        }
    }
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) (i % 2 == 1 ? odd : even) += values[i];
    return h / 3.0 * (values.front() + 4.0 * odd + 2.0 * even + values.back());
}

KdeResult kde_density(std::span<const double> samples, std::span<const double> grid) {
    const std::size_t m = samples.size();
    if (m < 2) throw Error(ErrorKind::DegenerateSamples, "KDE needs at least 2 samples");
    const double mu = mean(samples);
    double ss = 0.0;
    for (const double s : samples) ss += (s - mu) * (s - mu);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateSamples, "all samples are equal");

    KdeResult out;
    out.bandwidth = sd * std::pow(static_cast<double>(m), -0.2);
    out.density.assign(grid.size(), 0.0);
    const double inv_h = 1.0 / out.bandwidth;
    const double norm = inv_h / (static_cast<double>(m) * std::sqrt(2.0 * std::numbers::pi));
    parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            double acc = 0.0;
            for (const double s : samples) {
                const double z = (grid[g] - s) * inv_h;
                acc += std::exp(-0.5 * z * z);
            }
            out.density[g] = acc * norm;
        }
    }, 64);

    const double mass = simpson(out.density, grid);
    if (!(mass > 0.0)) throw Error(ErrorKind::DegenerateSamples, "density has no mass on the grid");
    for (double& v : out.density) v /= mass;
    return out;
}

double overlap_area(std::span<const double> p_pos, std::span<const double> p_neg, std::span<const double> grid) {
    if (p_pos.size() != grid.size() || p_neg.size() != grid.size()) {
        throw Error(ErrorKind::BadGrid, "densities and grid differ in length");
    }
    std::vector<double> lower(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (p_pos[i] < 0.0 || p_neg[i] < 0.0) throw Error(ErrorKind::BadGrid, "densities must be nonnegative");
        lower[i] = std::min(p_pos[i], p_neg[i]);
    }
    return simpson(lower, grid);
}

OverlapReport analyze(const BilinearAdapter& adapter, const EmbeddingSet& test_set, const PromptSet& prompts,
                      const AnalysisConfig& config) {
    OverlapReport r;
    r.config = config;
    r.angles = collect_angles(adapter, test_set, prompts, config.negatives, config.seed);
    r.grid = uniform_grid(0.0, 180.0, config.grid_points);
    KdeResult pos = kde_density(r.angles.positive, r.grid);
    KdeResult neg = kde_density(r.angles.negative, r.grid);
    r.p_pos = std::move(pos.density);
    r.p_neg = std::move(neg.density);
    r.bandwidth_pos = pos.bandwidth;
    r.bandwidth_neg = neg.bandwidth;
    r.overlap_area = overlap_area(r.p_pos, r.p_neg, r.grid);
    r.orthogonality_error = orthogonality_error(adapter.w);
    r.mean_positive_angle = mean(r.angles.positive);
    r.mean_negative_angle = mean(r.angles.negative);
    return r;
}

std::string report_json(const OverlapReport& report) {
    const nlohmann::json j{
        {"overlap_area", report.overlap_area},
        {"orthogonality_error", report.orthogonality_error},
        {"mean_positive_angle_deg", report.mean_positive_angle},
        {"mean_negative_angle_deg", report.mean_negative_angle},
        {"positive_count", report.angles.positive.size()},
        {"negative_count", report.angles.negative.size()},
        {"negatives_per_image", report.angles.negatives_per_image},
        {"kde", {{"kernel", "gaussian"},
                 {"bandwidth_rule", "scott"},
                 {"bandwidth_pos", report.bandwidth_pos},
                 {"bandwidth_neg", report.bandwidth_neg}}},
        {"grid", {{"lo_deg", report.grid.front()}, {"hi_deg", report.grid.back()}, {"points", report.grid.size()}}},
        {"seed", report.config.seed},
    };
    return j.dump(2) + "\n";
}

std::string report_csv(const OverlapReport& report) {
    std::ostringstream out;
    out << std::setprecision(17) << "angle,p_pos,p_neg\n";
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
        out << report.grid[i] << ',' << report.p_pos[i] << ',' << report.p_neg[i] << '\n';
    }
    return out.str();
}

} // namespace biadapt
