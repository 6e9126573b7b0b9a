#pragma once

#include "bias/core.hpp"
#include "bias/fixation.hpp"
#include "bias/motion.hpp"
#include "bias/static_channels.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace bias {

class ThreadPool;

/// Wall-clock seconds spent per stage of one frame.
struct StageTimings {
  double channels = 0;  // color transforms, pyramids, Gabor
  double features = 0;  // center-surround maps and static conspicuity
  double motion = 0;    // detector, motion conspicuity, dynamic map
  double fusion = 0;    // static and master saliency
  double fixation = 0;  // upsampling, GWTA, prior, EWMA
  double total = 0;
};

struct FrameResult {
  long frame_index = 0;
  // All maps at frame resolution and within [0, 1]. The static and dynamic
  // maps are rescaled by their maximum for display; the master map already is.
  GrayMap static_map;
  GrayMap dynamic_map;
  GrayMap master_map;
  /// Smoothed fixation map (prior and EWMA applied as configured).
  GrayMap fixation_map;
  std::vector<GaussianFocus> foci;
  /// True while no temporal offset was available for the dynamic map.
  bool motion_warm_up = true;
  StageTimings timings;
};

/// Everything one video stream carries from frame to frame.
class StreamState {
 public:
  explicit StreamState(const PipelineConfig& cfg);
  ~StreamState();
  StreamState(StreamState&&) noexcept;
  StreamState& operator=(StreamState&&) noexcept;

  const PipelineConfig& config() const { return cfg_; }
  /// Frames processed so far.
  long frame_index() const { return frame_index_; }
  const FrameHistory& history() const { return history_; }

 private:
  friend FrameResult process_frame(StreamState& state, const FrameRGB& frame);

  PipelineConfig cfg_;
  GaborBank bank_;
  FrameHistory history_;
  EwmaState ewma_;
  long frame_index_ = 0;
  std::optional<Extent> extent_;
  GrayMap prior_;
  std::unique_ptr<ThreadPool> pool_;
};

/// Runs the whole per-frame computation and advances the stream.
FrameResult process_frame(StreamState& state, const FrameRGB& frame);

/// Yields the next frame or nullopt at the end of the stream.
using FrameSource = std::function<std::optional<FrameRGB>()>;
using ResultSink = std::function<void(FrameResult&&)>;

/// Processes frames strictly in order. The source is drained on a reader
/// thread through a queue of `queue_depth` frames; results reach the sink in
/// order on the calling thread. Source failures are rethrown as Error naming
/// the frame index.
void process_stream(const FrameSource& source, const PipelineConfig& cfg, const ResultSink& sink,
                    int queue_depth = 4);

std::vector<FrameResult> process_stream(const FrameSource& source, const PipelineConfig& cfg);

/// Source over an in-memory clip.
FrameSource frames_from(const std::vector<FrameRGB>& frames);

}  // namespace bias
