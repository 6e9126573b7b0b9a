#pragma once

// Gaussian pyramids and the across-scale operators. Everything here is a pure
// function templated on the scalar type; borders replicate the edge sample.

#include "bias/core.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace bias {

namespace detail {

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

struct LinearTap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

// Sample positions src = dst * (n_src / n_dst): sample 0 maps onto sample 0,
// which keeps upsampled coarse levels aligned with even-index decimation.
inline std::vector<LinearTap> linear_taps(int n_src, int n_dst) {
  std::vector<LinearTap> taps(n_dst);
  const double ratio = static_cast<double>(n_src) / n_dst;
  for (int d = 0; d < n_dst; ++d) {
    double pos = std::min(d * ratio, static_cast<double>(n_src - 1));
    int i0 = static_cast<int>(pos);
    int i1 = std::min(i0 + 1, n_src - 1);
    taps[d] = {i0, i1, pos - i0};
  }
  return taps;
}

}  // namespace detail

/// 5-tap binomial blur followed by 2x decimation keeping even indices.
/// Output is ceil(w/2) x ceil(h/2).
template <typename Scalar>
Map<Scalar> reduce(const Map<Scalar>& in) {
  const Scalar w0 = Scalar(1) / 16, w1 = Scalar(4) / 16, w2 = Scalar(6) / 16;
  const int h = static_cast<int>(in.rows()), wd = static_cast<int>(in.cols());
  const int oh = (h + 1) / 2, ow = (wd + 1) / 2;
  // Vertical pass on the kept rows, whole rows at a time.
  Map<Scalar> tmp(oh, wd);
  for (int i = 0; i < oh; ++i) {
    const int y = 2 * i;
    tmp.row(i) = w0 * in.row(detail::clamp_index(y - 2, h)) + w1 * in.row(detail::clamp_index(y - 1, h)) +
                 w2 * in.row(y) + w1 * in.row(detail::clamp_index(y + 1, h)) +
                 w0 * in.row(detail::clamp_index(y + 2, h));
  }
  // Horizontal pass on the kept columns; only the borders need clamped taps.
  Map<Scalar> out(oh, ow);
  auto edge = [&](const Scalar* row, int x) {
    return w0 * row[detail::clamp_index(x - 2, wd)] + w1 * row[detail::clamp_index(x - 1, wd)] + w2 * row[x] +
           w1 * row[detail::clamp_index(x + 1, wd)] + w0 * row[detail::clamp_index(x + 2, wd)];
  };
  for (int i = 0; i < oh; ++i) {
    const Scalar* row = tmp.data() + static_cast<std::ptrdiff_t>(i) * wd;
    Scalar* dst = out.data() + static_cast<std::ptrdiff_t>(i) * ow;
    int j = 0;
    for (; j < ow && j < 1; ++j) dst[j] = edge(row, 2 * j);
    for (; j < ow && 2 * j + 2 < wd; ++j) {
      const Scalar* p = row + 2 * j;
      dst[j] = w0 * p[-2] + w1 * p[-1] + w2 * p[0] + w1 * p[1] + w0 * p[2];
    }
    for (; j < ow; ++j) dst[j] = edge(row, 2 * j);
  }
  return out;
}

/// Level 0 is `base`; level k + 1 is reduce(level k).
template <typename Scalar>
PyramidT<Scalar> build_pyramid(const Map<Scalar>& base, int levels) {
  if (levels < 0) throw DimensionError("negative pyramid depth");
  const long need = 1L << levels;
  if (base.cols() < need || base.rows() < need)
    throw DimensionError("map " + std::to_string(base.cols()) + "x" + std::to_string(base.rows()) +
                         " too small for " + std::to_string(levels) + " pyramid levels");
  PyramidT<Scalar> pyr;
  pyr.reserve(levels + 1);
  pyr.push_back(base);
  for (int l = 1; l <= levels; ++l) pyr.push_back(reduce(pyr.back()));
  return pyr;
}

/// Bilinear resize with edge clamping; identity when the extent is unchanged.
template <typename Scalar>
Map<Scalar> resize_to(const Map<Scalar>& in, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw DimensionError("resize target must be at least 1x1");
  if (in.size() == 0) throw DimensionError("cannot resize an empty map");
  if (in.cols() == target_w && in.rows() == target_h) return in;
  const auto xt = detail::linear_taps(static_cast<int>(in.cols()), target_w);
  const auto yt = detail::linear_taps(static_cast<int>(in.rows()), target_h);
  // Horizontal pass on every source row, then blend rows.
  Map<Scalar> tmp(in.rows(), target_w);
  for (Eigen::Index y = 0; y < in.rows(); ++y)
    for (int x = 0; x < target_w; ++x) {
      const auto& t = xt[x];
      tmp(y, x) = in(y, t.i0) + static_cast<Scalar>(t.w1) * (in(y, t.i1) - in(y, t.i0));
    }
  Map<Scalar> out(target_h, target_w);
  for (int y = 0; y < target_h; ++y) {
    const auto& t = yt[y];
    if (t.w1 == 0.0)
      out.row(y) = tmp.row(t.i0);
    else
      out.row(y) = tmp.row(t.i0) + static_cast<Scalar>(t.w1) * (tmp.row(t.i1) - tmp.row(t.i0));
  }
  return out;
}

template <typename Scalar>
Map<Scalar> resize_to(const Map<Scalar>& in, Extent target) {
  return resize_to(in, target.width, target.height);
}

/// Center-surround difference: `center` minus `surround` upsampled to the
/// center grid. The result may be negative.
template <typename Scalar>
Map<Scalar> across_scale_diff(const Map<Scalar>& center, int c, const Map<Scalar>& surround, int s) {
  if (s <= c) throw DimensionError("surround scale must be coarser than center scale");
  return center - resize_to(surround, extent_of(center));
}

/// Resize every map to `target` and add them up in list order.
template <typename Scalar>
Map<Scalar> across_scale_sum(std::span<const Map<Scalar>* const> maps, Extent target) {
  if (maps.empty()) throw DimensionError("across-scale sum of an empty list");
  Map<Scalar> acc = resize_to(*maps[0], target);
  for (std::size_t i = 1; i < maps.size(); ++i) acc += resize_to(*maps[i], target);
  return acc;
}

template <typename Scalar>
Map<Scalar> across_scale_sum(const std::vector<const Map<Scalar>*>& maps, Extent target) {
  return across_scale_sum(std::span<const Map<Scalar>* const>(maps.data(), maps.size()), target);
}

}  // namespace bias
