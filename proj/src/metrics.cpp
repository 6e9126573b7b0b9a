#include "bias/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <tuple>

namespace bias {

namespace {

void check_points(const GrayMap& m, std::span<const FixationPoint> pts) {
  for (const auto& p : pts)
    if (p.x < 0 || p.y < 0 || p.x >= m.cols() || p.y >= m.rows())
      throw DimensionError("fixation (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") outside " +
                           std::to_string(m.cols()) + "x" + std::to_string(m.rows()) + " map");
}

// Fixated pixels, each counted once, in raster order.
std::vector<FixationPoint> unique_pixels(std::span<const FixationPoint> pts) {
  std::vector<FixationPoint> v(pts.begin(), pts.end());
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Bounded draw without modulo bias.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do r = rng();
  while (r >= limit);
  return r % n;
}

}  // namespace

double nss(const GrayMap& pred, std::span<const FixationPoint> fixations) {
  if (fixations.empty()) throw Error("NSS needs at least one fixation");
  check_points(pred, fixations);
  const double mean = pred.mean();
  const double sd = std::sqrt((pred - mean).square().mean());
  if (!(sd > 0.0)) return 0.0;
  double acc = 0.0;
  for (const auto& p : fixations) acc += (pred(p.y, p.x) - mean) / sd;
  return acc / static_cast<double>(fixations.size());
}

double cc(const GrayMap& pred, const GrayMap& gt) {
  if (extent_of(pred) != extent_of(gt)) throw DimensionError("CC maps differ in size");
  const GrayMap a = pred - pred.mean();
  const GrayMap b = gt - gt.mean();
  const double saa = a.square().sum(), sbb = b.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return (a * b).sum() / std::sqrt(saa * sbb);
}

double sim(const GrayMap& pred, const GrayMap& gt) {
  if (extent_of(pred) != extent_of(gt)) throw DimensionError("SIM maps differ in size");
  const double sp = pred.sum(), sg = gt.sum();
  if (!(sp > 0.0) || !(sg > 0.0)) throw Error("SIM needs maps with positive sum");
  return (pred / sp).min(gt / sg).sum();
}

double auc_judd(const GrayMap& pred, std::span<const FixationPoint> fixations) {
  if (fixations.empty()) throw Error("AUC-J needs at least one fixation");
  check_points(pred, fixations);
  const auto fixated = unique_pixels(fixations);
  GrayMap mask = GrayMap::Zero(pred.rows(), pred.cols());
  std::vector<double> pos;
  for (const auto& p : fixated) {
    mask(p.y, p.x) = 1.0;
    pos.push_back(pred(p.y, p.x));
  }
  std::vector<double> neg;
  neg.reserve(pred.size() - pos.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i)
    if (mask.data()[i] == 0.0) neg.push_back(pred.data()[i]);
  if (neg.empty()) return 1.0;

  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  double area = 0.0, prev_tp = 0.0, prev_fp = 0.0;
  std::size_t i = 0;
  while (i < pos.size()) {
    const double t = pos[i];
    while (i < pos.size() && pos[i] == t) ++i;
    // Negatives at or above t.
    const auto above = std::upper_bound(neg.begin(), neg.end(), t, std::greater<>()) - neg.begin();
    const double tp = i / np, fp = above / nn;
    area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
    prev_tp = tp;
    prev_fp = fp;
  }
  area += (1.0 - prev_fp) * (1.0 + prev_tp) / 2.0;
  return area;
}

double auc_from_scores(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error("ROC area needs positives and negatives");
  std::vector<double> pos(positives.begin(), positives.end()), neg(negatives.begin(), negatives.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  // For each positive: negatives strictly below count 1, equal ones count 1/2.
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p) - neg.begin();
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p) - neg.begin();
    wins += static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double shuffled_auc(const GrayMap& pred, std::span<const FixationPoint> fixations,
                    std::span<const FixationPoint> pool, int permutations, std::uint64_t seed) {
  if (fixations.empty()) throw Error("s-AUC needs at least one fixation");
  if (permutations < 1) throw Error("s-AUC needs at least one permutation");
  check_points(pred, fixations);
  // Pool entries keep their multiplicity: a pixel fixated often elsewhere is
  // drawn more often, which is what cancels a shared center bias.
  std::vector<FixationPoint> candidates;
  for (const auto& p : pool)
    if (p.x >= 0 && p.y >= 0 && p.x < pred.cols() && p.y < pred.rows()) candidates.push_back(p);
  if (candidates.empty()) throw Error("s-AUC negative pool is empty");

  std::vector<double> pos;
  for (const auto& p : unique_pixels(fixations)) pos.push_back(pred(p.y, p.x));
  const std::size_t count = pos.size();

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(candidates.size());
  std::vector<double> neg(count);
  double total = 0.0;
  for (int round = 0; round < permutations; ++round) {
    if (candidates.size() >= count) {
      // Partial Fisher-Yates: the first `count` entries are a uniform draw.
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + draw_below(rng, order.size() - i);
        std::swap(order[i], order[j]);
        neg[i] = pred(candidates[order[i]].y, candidates[order[i]].x);
      }
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        const auto& p = candidates[draw_below(rng, candidates.size())];
        neg[i] = pred(p.y, p.x);
      }
    }
    total += auc_from_scores(pos, neg);
  }
  return total / permutations;
}

GrayMap density_from_fixations(std::span<const FixationPoint> fixations, Extent e, double sigma) {
  if (fixations.empty()) throw Error("cannot build a density without fixations");
  if (!(sigma > 0.0)) throw Error("density sigma must be positive");
  GrayMap impulses = GrayMap::Zero(e.height, e.width);
  for (const auto& p : fixations) {
    if (p.x < 0 || p.y < 0 || p.x >= e.width || p.y >= e.height) throw DimensionError("fixation outside frame");
    impulses(p.y, p.x) += 1.0;
  }
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::ArrayXd k(2 * r + 1);
  for (int i = -r; i <= r; ++i) k(i + r) = std::exp(-0.5 * i * i / (sigma * sigma));
  // Zero-padded separable blur.
  GrayMap tmp = GrayMap::Zero(e.height, e.width);
  for (int y = 0; y < e.height; ++y)
    for (int x = 0; x < e.width; ++x) {
      const double v = impulses(y, x);
      if (v == 0.0) continue;
      for (int i = std::max(-r, -x); i <= std::min(r, e.width - 1 - x); ++i) tmp(y, x + i) += v * k(i + r);
    }
  GrayMap out = GrayMap::Zero(e.height, e.width);
  for (int y = 0; y < e.height; ++y)
    for (int i = std::max(-r, -y); i <= std::min(r, e.height - 1 - y); ++i) out.row(y + i) += k(i + r) * tmp.row(y);
  return out / out.sum();
}

FrameMetrics evaluate_frame(const GrayMap& pred, const FixationGroundTruth& gt, std::span<const FixationPoint> pool,
                            const EvalOptions& opts, std::uint64_t frame_index) {
  const Extent e = extent_of(pred);
  GrayMap density;
  if (gt.density) {
    if (extent_of(*gt.density) != e) throw DimensionError("ground-truth density differs in size from prediction");
    density = *gt.density;
  } else {
    density = density_from_fixations(gt.points, e, opts.density_sigma > 0 ? opts.density_sigma
                                                                            : default_density_sigma(e.width));
  }
  FrameMetrics m;
  m.nss = nss(pred, gt.points);
  m.cc = cc(pred, density);
  m.sim = pred.sum() > 0.0 ? sim(pred, density) : 0.0;
  m.auc_j = auc_judd(pred, gt.points);
  m.s_auc = shuffled_auc(pred, gt.points, pool, opts.permutations, opts.seed ^ frame_index);
  return m;
}

void aggregate(MetricReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<FrameMetrics, int>> sums;
  for (const auto& f : report.frames) {
    auto [it, inserted] = sums.try_emplace(f.video);
    if (inserted) order.push_back(f.video);
    auto& [s, n] = it->second;
    s.nss += f.metrics.nss;
    s.cc += f.metrics.cc;
    s.sim += f.metrics.sim;
    s.auc_j += f.metrics.auc_j;
    s.s_auc += f.metrics.s_auc;
    ++n;
  }
  report.videos.clear();
  report.overall = {};
  for (const auto& v : order) {
    auto [s, n] = sums[v];
    FrameMetrics mean{s.nss / n, s.cc / n, s.sim / n, s.auc_j / n, s.s_auc / n};
    report.videos.emplace_back(v, mean);
    report.overall.nss += mean.nss;
    report.overall.cc += mean.cc;
    report.overall.sim += mean.sim;
    report.overall.auc_j += mean.auc_j;
    report.overall.s_auc += mean.s_auc;
  }
  if (!order.empty()) {
    const double k = static_cast<double>(order.size());
    report.overall = {report.overall.nss / k, report.overall.cc / k, report.overall.sim / k, report.overall.auc_j / k,
                      report.overall.s_auc / k};
  }
}

}  // namespace bias
