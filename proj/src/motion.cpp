#include "bias/motion.hpp"

#include "bias/fusion.hpp"
#include "bias/pyramid.hpp"
#include "bias/static_channels.hpp"
#include "bias/thread_pool.hpp"

#include <cmath>

namespace bias {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Up: return "up";
    case Direction::Down: return "down";
  }
  return "?";
}

FrameHistory::FrameHistory(int capacity) {
  if (capacity < 1) throw ConfigError("frame history capacity must be positive");
  slots_.resize(capacity);
}

void FrameHistory::push(Pyramid pyramid) {
  std::vector<Extent> schema;
  schema.reserve(pyramid.size());
  for (const auto& level : pyramid) schema.push_back(extent_of(level));
  if (pushed_ == 0)
    schema_ = std::move(schema);
  else if (schema != schema_)
    throw DimensionError("pyramid dimensions differ from earlier frames");
  head_ = (head_ + 1) % capacity();
  slots_[head_] = std::move(pyramid);
  ++pushed_;
}

bool FrameHistory::available(int tau) const { return tau >= 0 && tau < capacity() && tau < pushed_; }

const Pyramid& FrameHistory::at(int tau) const {
  if (!available(tau))
    throw Error("frame offset " + std::to_string(tau) + " unavailable (" + std::to_string(pushed_) +
                " frames pushed, capacity " + std::to_string(capacity()) + ")");
  return slots_[(head_ - tau + capacity()) % capacity()];
}

GrayMap shift_one(const GrayMap& m, Direction d) {
  const Eigen::Index h = m.rows(), w = m.cols();
  GrayMap out(h, w);
  if (h == 0 || w == 0) return out;
  switch (d) {
    case Direction::Right:
      out.rightCols(w - 1) = m.leftCols(w - 1);
      out.col(0) = m.col(0);
      break;
    case Direction::Left:
      out.leftCols(w - 1) = m.rightCols(w - 1);
      out.col(w - 1) = m.col(w - 1);
      break;
    case Direction::Down:
      out.bottomRows(h - 1) = m.topRows(h - 1);
      out.row(0) = m.row(0);
      break;
    case Direction::Up:
      out.topRows(h - 1) = m.bottomRows(h - 1);
      out.row(h - 1) = m.row(h - 1);
      break;
  }
  return out;
}

namespace {

// exp(-|now - shift(delayed, d)|) for d and for -d.
std::pair<GrayMap, GrayMap> correlations(const GrayMap& now, const GrayMap& delayed, Direction d) {
  if (extent_of(now) != extent_of(delayed)) throw DimensionError("motion operands differ in size");
  GrayMap fwd = (-(now - shift_one(delayed, d)).abs()).exp();
  GrayMap back = (-(now - shift_one(delayed, opposite(d))).abs()).exp();
  return {std::move(fwd), std::move(back)};
}

}  // namespace

GrayMap hr_response(const GrayMap& now, const GrayMap& delayed, Direction d) {
  auto [fwd, back] = correlations(now, delayed, d);
  return (fwd - back).max(0.0);
}

const GrayMap& MotionStack::get(int scale, Direction d, int tau) const {
  auto it = maps_.find({scale, d, tau});
  if (it == maps_.end())
    throw Error("motion map missing: scale " + std::to_string(scale) + ", " + to_string(d) + ", tau " +
                std::to_string(tau));
  return it->second;
}

MotionStack compute_motion_stack(const FrameHistory& history, const std::vector<int>& scales,
                                 const std::vector<int>& taus, ThreadPool* pool) {
  struct Job {
    int scale, tau;
    Direction d;  // Right or Down; the opposite falls out of the same exponentials.
  };
  std::vector<Job> jobs;
  for (int tau : taus) {
    if (!history.available(tau)) continue;
    for (int s : scales)
      for (Direction d : {Direction::Right, Direction::Down}) jobs.push_back({s, tau, d});
  }
  std::vector<std::pair<GrayMap, GrayMap>> out(jobs.size());
  auto run = [&](std::size_t i) {
    const Job& j = jobs[i];
    const Pyramid& now = history.at(0);
    const Pyramid& then = history.at(j.tau);
    if (j.scale < 0 || j.scale >= static_cast<int>(now.size())) throw DimensionError("motion scale beyond pyramid");
    auto [fwd, back] = correlations(now[j.scale], then[j.scale], j.d);
    out[i] = {(fwd - back).max(0.0), (back - fwd).max(0.0)};
  };
  if (pool)
    pool->parallel_for(jobs.size(), run);
  else
    for (std::size_t i = 0; i < jobs.size(); ++i) run(i);
  MotionStack stack;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    stack.set(jobs[i].scale, jobs[i].d, jobs[i].tau, std::move(out[i].first));
    stack.set(jobs[i].scale, opposite(jobs[i].d), jobs[i].tau, std::move(out[i].second));
  }
  return stack;
}

std::pair<GrayMap, GrayMap> motion_feature_maps(const MotionStack& stack, int c, int s, Direction d, int tau) {
  if (s <= c) throw DimensionError("invalid center-surround scale pair");
  OpponentPair pair;
  pair.pos.resize(s + 1);
  pair.neg.resize(s + 1);
  pair.pos[c] = stack.get(c, d, tau);
  pair.neg[c] = stack.get(c, opposite(d), tau);
  pair.pos[s] = stack.get(s, d, tau);
  pair.neg[s] = stack.get(s, opposite(d), tau);
  return opponent_feature_maps(pair, c, s);
}

GrayMap dynamic_conspicuity(const MotionStack& stack, const PipelineConfig& cfg, int tau, Extent target,
                            ThreadPool* pool) {
  struct Job {
    int c, s;
    Direction d;
  };
  std::vector<Job> jobs;
  for (int c : cfg.center_scales)
    for (int delta : cfg.deltas)
      for (Direction d : kDirections) jobs.push_back({c, c + delta, d});
  // Each slot holds N(M+) + N(M-) at scale c.
  std::vector<GrayMap> slots(jobs.size());
  auto run = [&](std::size_t i) {
    auto [on, off] = motion_feature_maps(stack, jobs[i].c, jobs[i].s, jobs[i].d, tau);
    slots[i] = normalize(on) + normalize(off);
  };
  if (pool)
    pool->parallel_for(jobs.size(), run);
  else
    for (std::size_t i = 0; i < jobs.size(); ++i) run(i);
  GrayMap acc = GrayMap::Zero(target.height, target.width);
  for (const auto& m : slots) acc += resize_to(m, target);
  return 0.5 * acc;
}

DynamicSaliency combine_dynamic(const std::vector<std::pair<int, GrayMap>>& conspicuity_by_tau, double gamma,
                                Extent target) {
  DynamicSaliency out;
  out.map = GrayMap::Zero(target.height, target.width);
  for (const auto& [tau, m] : conspicuity_by_tau) {
    if (extent_of(m) != target) throw DimensionError("motion conspicuity not at the accumulation grid");
    out.map += std::pow(gamma, tau - 1) * normalize(m);
    out.taus_used.push_back(tau);
  }
  out.warm_up = out.taus_used.empty();
  return out;
}

DynamicSaliency dynamic_saliency(const FrameHistory& history, const PipelineConfig& cfg, Extent target,
                                 ThreadPool* pool) {
  std::vector<int> taus;
  for (int tau : cfg.tau_set)
    if (history.available(tau)) taus.push_back(tau);
  const MotionStack stack = compute_motion_stack(history, cfg.used_scales(), taus, pool);
  std::vector<std::pair<int, GrayMap>> per_tau;
  for (int tau : taus) per_tau.emplace_back(tau, dynamic_conspicuity(stack, cfg, tau, target, pool));
  return combine_dynamic(per_tau, cfg.gamma, target);
}

}  // namespace bias
