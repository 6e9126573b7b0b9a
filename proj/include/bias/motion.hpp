#pragma once

// Direction-selective motion detection (correlation-type, one-pixel shifts
// against temporally delayed frames) and the dynamic saliency map.

#include "bias/core.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>
#include <vector>

namespace bias {

class ThreadPool;

enum class Direction { Left, Right, Up, Down };

inline constexpr std::array<Direction, 4> kDirections{Direction::Left, Direction::Right, Direction::Up,
                                                      Direction::Down};

constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
  }
  return d;
}

const char* to_string(Direction d);

/// Ring buffer of past intensity pyramids. at(0) is the newest frame,
/// at(tau) the one pushed tau frames earlier.
class FrameHistory {
 public:
  explicit FrameHistory(int capacity = 16);

  /// The first push fixes the per-level dimensions; later pushes must match.
  void push(Pyramid pyramid);

  bool available(int tau) const;
  /// Throws Error while fewer than tau + 1 frames have been pushed.
  const Pyramid& at(int tau) const;

  int capacity() const { return static_cast<int>(slots_.size()); }
  int size() const { return static_cast<int>(std::min<long>(pushed_, capacity())); }
  long pushed() const { return pushed_; }

 private:
  std::vector<Pyramid> slots_;
  std::vector<Extent> schema_;
  int head_ = -1;
  long pushed_ = 0;
};

/// Content moved one pixel along `d`; the vacated border repeats the edge.
GrayMap shift_one(const GrayMap& map, Direction d);

/// max(0, exp(-|now - shift(delayed, d)|) - exp(-|now - shift(delayed, -d)|)).
/// Inputs are expected in [0, 1].
GrayMap hr_response(const GrayMap& now, const GrayMap& delayed, Direction d);

/// Detector outputs M(scale, direction, tau).
class MotionStack {
 public:
  using Key = std::tuple<int, Direction, int>;

  void set(int scale, Direction d, int tau, GrayMap m) { maps_[{scale, d, tau}] = std::move(m); }
  bool has(int scale, Direction d, int tau) const { return maps_.count({scale, d, tau}) > 0; }
  /// Throws Error for a missing entry.
  const GrayMap& get(int scale, Direction d, int tau) const;
  std::size_t size() const { return maps_.size(); }

 private:
  std::map<Key, GrayMap> maps_;
};

/// Runs the detector for every scale in `scales`, every direction and every
/// tau in `taus` the history can serve, comparing at(0) with at(tau).
MotionStack compute_motion_stack(const FrameHistory& history, const std::vector<int>& scales,
                                 const std::vector<int>& taus, ThreadPool* pool = nullptr);

/// Rectified center-surround opponency of the pair (M(d), M(-d)).
std::pair<GrayMap, GrayMap> motion_feature_maps(const MotionStack& stack, int c, int s, Direction d, int tau);

/// Half the sum over (c, s, direction) of N(M+) + N(M-), accumulated at `target`.
GrayMap dynamic_conspicuity(const MotionStack& stack, const PipelineConfig& cfg, int tau, Extent target,
                            ThreadPool* pool = nullptr);

struct DynamicSaliency {
  GrayMap map;
  std::vector<int> taus_used;
  /// True when no temporal offset could be served yet; the map is then zero.
  bool warm_up = false;
};

/// sum over tau of gamma^(tau - 1) N(conspicuity(tau)), over the taus given.
DynamicSaliency combine_dynamic(const std::vector<std::pair<int, GrayMap>>& conspicuity_by_tau, double gamma,
                                Extent target);

/// Dynamic saliency from the history. Offsets the history cannot serve yet
/// are left out of the sum.
DynamicSaliency dynamic_saliency(const FrameHistory& history, const PipelineConfig& cfg, Extent target,
                                 ThreadPool* pool = nullptr);

}  // namespace bias
