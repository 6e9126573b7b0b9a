#pragma once

// Gaze-prediction metrics: NSS, CC, SIM, AUC-Judd and shuffled AUC.

#include "bias/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bias {

struct FixationPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const FixationPoint&, const FixationPoint&) = default;
};

struct FixationGroundTruth {
  std::vector<FixationPoint> points;
  /// Continuous density summing to 1, when the dataset provides one.
  std::optional<GrayMap> density;
};

/// Mean of the z-scored prediction (population std) at the fixations.
/// Zero-variance predictions score 0.
double nss(const GrayMap& pred, std::span<const FixationPoint> fixations);

/// Pearson correlation over pixels; 0 when either map has zero variance.
double cc(const GrayMap& pred, const GrayMap& gt_density);

/// Histogram intersection of the two maps after each is scaled to sum 1.
double sim(const GrayMap& pred, const GrayMap& gt_density);

/// ROC area with fixated pixels as positives and every other pixel as a
/// negative, thresholds at the distinct prediction values of the positives.
double auc_judd(const GrayMap& pred, std::span<const FixationPoint> fixations);

/// Exact ROC area (ties count one half) between two score samples.
double auc_from_scores(std::span<const double> positives, std::span<const double> negatives);

/// Mean over `permutations` rounds of the ROC area between the fixated
/// pixels and an equally sized random draw from `pool` (fixations taken from
/// other videos, repeats kept). Deterministic for a given seed.
double shuffled_auc(const GrayMap& pred, std::span<const FixationPoint> fixations,
                    std::span<const FixationPoint> pool, int permutations, std::uint64_t seed);

/// Sum-to-one density: a Gaussian of `sigma` pixels at every fixation.
GrayMap density_from_fixations(std::span<const FixationPoint> fixations, Extent extent, double sigma);

/// Default blob width for synthesized densities, about one degree of visual angle.
inline double default_density_sigma(int width) { return width / 32.0; }

struct FrameMetrics {
  double nss = 0, cc = 0, sim = 0, auc_j = 0, s_auc = 0;
};

struct FrameEvaluation {
  std::string video;
  int frame = 0;
  FrameMetrics metrics;
};

struct MetricReport {
  std::vector<FrameEvaluation> frames;
  /// Per-video means of the per-frame values, in first-seen order.
  std::vector<std::pair<std::string, FrameMetrics>> videos;
  /// Mean of the per-video means.
  FrameMetrics overall;
  std::uint64_t seed = 0;
  int permutations = 0;
};

struct EvalOptions {
  int permutations = 100;
  std::uint64_t seed = 0;
  /// Blob width for synthesized densities; <= 0 picks width / 32.
  double density_sigma = 0.0;
};

/// Scores one frame. s-AUC draws from `pool` with seed ^ frame_index.
FrameMetrics evaluate_frame(const GrayMap& pred, const FixationGroundTruth& gt, std::span<const FixationPoint> pool,
                            const EvalOptions& opts, std::uint64_t frame_index);

/// Fills the per-video and overall means from report.frames.
void aggregate(MetricReport& report);

}  // namespace bias
