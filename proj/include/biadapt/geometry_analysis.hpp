#pragma once

#include "biadapt/adapter.hpp"
#include "biadapt/embedding_store.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace biadapt {

/// Angle in degrees between two nonzero vectors; the cosine is clamped to
/// [-1, 1] before arccos. Throws ZeroVector.
double angular_distance(std::span<const double> a, std::span<const double> b);
double angular_distance(std::span<const float> a, std::span<const float> b);

struct AngleSamples {
    std::vector<double> positive;
    std::vector<double> negative; // negatives_per_image entries per image, image-major
    std::size_t negatives_per_image = 0;
};

/// Positive angle between each transformed image i W and its class prompt,
/// plus angles to n distinct wrong-class prompts drawn without replacement
/// from a per-image stream (seed, image index).
AngleSamples collect_angles(const BilinearAdapter& adapter, const EmbeddingSet& test_set, const PromptSet& prompts,
                            std::size_t n_negatives, std::uint64_t seed);

/// n evenly spaced points on [lo, hi].
std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

/// Composite Simpson rule. Grid must have an odd count >= 3 and uniform spacing.
double simpson(std::span<const double> values, std::span<const double> grid);

struct KdeResult {
    std::vector<double> density;
    double bandwidth = 0.0;
};

/// Gaussian KDE with Scott's bandwidth h = sd * m^(-1/5) (sample sd, m - 1
/// denominator), rescaled so its Simpson integral over the grid is 1.
KdeResult kde_density(std::span<const double> samples, std::span<const double> grid);

/// Simpson integral of min(p_pos, p_neg) over the grid.
double overlap_area(std::span<const double> p_pos, std::span<const double> p_neg, std::span<const double> grid);

struct AnalysisConfig {
    std::size_t negatives = 5;
    std::uint64_t seed = 0;
    std::size_t grid_points = 1001;
};

struct OverlapReport {
    double overlap_area = 0.0;
    std::vector<double> grid;
    std::vector<double> p_pos;
    std::vector<double> p_neg;
    double bandwidth_pos = 0.0;
    double bandwidth_neg = 0.0;
    double orthogonality_error = 0.0;
    double mean_positive_angle = 0.0;
    double mean_negative_angle = 0.0;
    AngleSamples angles;
    AnalysisConfig config;
};

OverlapReport analyze(const BilinearAdapter& adapter, const EmbeddingSet& test_set, const PromptSet& prompts,
                      const AnalysisConfig& config);

/// Summary JSON (no per-grid curves or raw angles).
std::string report_json(const OverlapReport& report);
/// "angle,p_pos,p_neg" rows for plotting.
std::string report_csv(const OverlapReport& report);

} // namespace biadapt
