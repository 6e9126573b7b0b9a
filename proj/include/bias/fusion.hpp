#pragma once

#include "bias/core.hpp"
#include "bias/pyramid.hpp"
#include "bias/static_channels.hpp"

#include <algorithm>
#include <vector>

namespace bias {

class ThreadPool;

namespace detail {

// Mean of the strict 3x3 local maxima of `m`, leaving out the one that is
// the global maximum. Zero when nothing is left.
template <typename Scalar>
double mean_local_maxima(const Map<Scalar>& m) {
  const int h = static_cast<int>(m.rows()), w = static_cast<int>(m.cols());
  double sum = 0.0, top = -1.0;
  long count = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Scalar v = m(y, x);
      bool strict = true;
      for (int dy = -1; dy <= 1 && strict; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dy && !dx) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (m(yy, xx) >= v) {
            strict = false;
            break;
          }
        }
      if (!strict) continue;
      sum += v;
      ++count;
      top = std::max(top, static_cast<double>(v));
    }
  if (count > 0 && top == static_cast<double>(m.maxCoeff())) {
    sum -= top;
    --count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace detail

/// Width at or below which local maxima are searched on the map itself;
/// wider maps are halved (blur + decimate) until they fit.
inline constexpr int kLocalMaximaWidth = 96;

/// Peak-promotion operator N(X) = (M - mbar)^2 X / M, with M the global
/// maximum and mbar the mean of the other local maxima. X must be
/// non-negative. Constant and all-zero maps map to zero.
template <typename Scalar>
Map<Scalar> normalize(const Map<Scalar>& x) {
  if (x.size() == 0) return x;
  const Scalar peak = x.maxCoeff();
  if (!(peak > Scalar(0)) || x.minCoeff() == peak) return Map<Scalar>::Zero(x.rows(), x.cols());
  double mbar;
  if (x.cols() > kLocalMaximaWidth) {
    Map<Scalar> small = reduce(x);
    while (small.cols() > kLocalMaximaWidth) small = reduce(small);
    mbar = detail::mean_local_maxima(small);
  } else {
    mbar = detail::mean_local_maxima(x);
  }
  const double gap = static_cast<double>(peak) - mbar;
  return x * static_cast<Scalar>(gap * gap / static_cast<double>(peak));
}

struct ConspicuitySet {
  GrayMap intensity;
  GrayMap color;
  GrayMap orientation;
  /// One map per temporal offset actually available.
  std::vector<GrayMap> motion;
};

/// N applied to every feature map, on `pool` when given.
std::vector<GrayMap> normalize_all(const std::vector<FeatureMap>& features, ThreadPool* pool = nullptr);

/// Sum over (c, s) of N(I+) + N(I-), accumulated at `target`.
GrayMap conspicuity_intensity(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool = nullptr);
/// Sum over (c, s) of N(RG+) + N(RG-) + N(BY+) + N(BY-), accumulated at `target`.
GrayMap conspicuity_color(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool = nullptr);
/// Sum over theta of N(sum over (c, s) of N(O(c, s, theta))).
GrayMap conspicuity_orientation(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool = nullptr);

/// Variants taking maps already passed through N (parallel to `features`).
GrayMap conspicuity_intensity(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                              Extent target);
GrayMap conspicuity_color(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                          Extent target);
GrayMap conspicuity_orientation(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                                Extent target);

/// (N(I) + N(C) + N(O)) / 3.
GrayMap static_saliency(const ConspicuitySet& cons);

/// a N(SS * DS) + b N(SS) + c N(DS), rescaled so its maximum is 1 (a zero map
/// stays zero).
GrayMap master_saliency(const GrayMap& ss, const GrayMap& ds, const FusionWeights& weights);

}  // namespace bias
