#include "bias/fusion.hpp"

#include "bias/thread_pool.hpp"

#include <array>

namespace bias {

std::vector<GrayMap> normalize_all(const std::vector<FeatureMap>& features, ThreadPool* pool) {
  std::vector<GrayMap> out(features.size());
  auto run = [&](std::size_t i) { out[i] = normalize(features[i].map); };
  if (pool)
    pool->parallel_for(features.size(), run);
  else
    for (std::size_t i = 0; i < features.size(); ++i) run(i);
  return out;
}

namespace {

// Sums normalized maps per (c, s) in feature order, then accumulates each
// group at the target grid.
GrayMap accumulate(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized, Extent target,
                   std::initializer_list<Channel> channels, int tag_filter = -100) {
  GrayMap acc = GrayMap::Zero(target.height, target.width);
  std::vector<std::array<int, 2>> seen;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeatureMap& f = features[i];
    bool wanted = false;
    for (Channel ch : channels) wanted |= f.channel == ch;
    if (!wanted || (tag_filter != -100 && f.tag != tag_filter)) continue;
    const std::array<int, 2> key{f.center, f.surround};
    bool done = false;
    for (const auto& k : seen) done |= k == key;
    if (done) continue;
    seen.push_back(key);
    GrayMap group = normalized[i];
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      const FeatureMap& g = features[j];
      bool same = false;
      for (Channel ch : channels) same |= g.channel == ch;
      if (same && g.center == f.center && g.surround == f.surround &&
          (tag_filter == -100 || g.tag == tag_filter))
        group += normalized[j];
    }
    acc += resize_to(group, target);
  }
  return acc;
}

}  // namespace

GrayMap conspicuity_intensity(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                              Extent target) {
  return accumulate(features, normalized, target, {Channel::Intensity});
}

GrayMap conspicuity_color(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                          Extent target) {
  return accumulate(features, normalized, target, {Channel::RedGreen, Channel::BlueYellow});
}

GrayMap conspicuity_orientation(const std::vector<FeatureMap>& features, const std::vector<GrayMap>& normalized,
                                Extent target) {
  GrayMap acc = GrayMap::Zero(target.height, target.width);
  for (int t = 0; t < 4; ++t) acc += normalize(accumulate(features, normalized, target, {Channel::Orientation}, t));
  return acc;
}

GrayMap conspicuity_intensity(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool) {
  return conspicuity_intensity(features, normalize_all(features, pool), target);
}

GrayMap conspicuity_color(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool) {
  return conspicuity_color(features, normalize_all(features, pool), target);
}

GrayMap conspicuity_orientation(const std::vector<FeatureMap>& features, Extent target, ThreadPool* pool) {
  return conspicuity_orientation(features, normalize_all(features, pool), target);
}

GrayMap static_saliency(const ConspicuitySet& cons) {
  const Extent e = extent_of(cons.intensity);
  if (extent_of(cons.color) != e || extent_of(cons.orientation) != e)
    throw DimensionError("conspicuity maps differ in size");
  return (normalize(cons.intensity) + normalize(cons.color) + normalize(cons.orientation)) / 3.0;
}

GrayMap master_saliency(const GrayMap& ss, const GrayMap& ds, const FusionWeights& w) {
  if (extent_of(ss) != extent_of(ds)) throw DimensionError("static and dynamic maps differ in size");
  GrayMap s = GrayMap::Zero(ss.rows(), ss.cols());
  if (w.joint != 0.0) s += w.joint * normalize<double>(ss * ds);
  if (w.stat != 0.0) s += w.stat * normalize(ss);
  if (w.dynamic != 0.0) s += w.dynamic * normalize(ds);
  const double peak = s.size() ? s.maxCoeff() : 0.0;
  if (peak > 0.0) s /= peak;
  return s;
}

}  // namespace bias
