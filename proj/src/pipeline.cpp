#include "bias/pipeline.hpp"

#include "bias/fusion.hpp"
#include "bias/pyramid.hpp"
#include "bias/thread_pool.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

namespace bias {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point& t) {
  const auto now = Clock::now();
  const double s = std::chrono::duration<double>(now - t).count();
  t = now;
  return s;
}

GrayMap unit_max(GrayMap m) {
  const double peak = m.size() ? m.maxCoeff() : 0.0;
  if (peak > 0.0) m /= peak;
  return m;
}

}  // namespace

StreamState::StreamState(const PipelineConfig& cfg)
    : cfg_(validate_config(cfg)), history_(cfg_.max_tau() + 1) {
  if (cfg_.threads > 1) pool_ = std::make_unique<ThreadPool>(cfg_.threads);
}

StreamState::~StreamState() = default;
StreamState::StreamState(StreamState&&) noexcept = default;
StreamState& StreamState::operator=(StreamState&&) noexcept = default;

FrameResult process_frame(StreamState& state, const FrameRGB& frame) {
  const PipelineConfig& cfg = state.cfg_;
  ThreadPool* pool = state.pool_.get();
  const auto start = Clock::now();
  auto t = start;

  const int depth = required_depth(cfg, state.bank_);
  validate_frame(frame, depth);
  const Extent full = frame.extent();
  if (state.extent_ && *state.extent_ != full)
    throw DimensionError("frame " + std::to_string(state.frame_index_) + " is " + std::to_string(full.width) + "x" +
                         std::to_string(full.height) + ", stream is " + std::to_string(state.extent_->width) + "x" +
                         std::to_string(state.extent_->height));

  FrameResult r;
  r.frame_index = state.frame_index_;
  const auto levels = cfg.used_scales();
  const ChannelPyramids pyr = build_channel_pyramids(frame, depth, state.bank_, levels, pool);
  r.timings.channels = seconds_since(t);

  const int acc = cfg.accumulation_scale();
  const Extent grid = extent_of(pyr.intensity.pos[acc]);
  const std::vector<FeatureMap> features = static_feature_maps(pyr, cfg, pool);
  const std::vector<GrayMap> normalized = normalize_all(features, pool);
  ConspicuitySet cons;
  cons.intensity = conspicuity_intensity(features, normalized, grid);
  cons.color = conspicuity_color(features, normalized, grid);
  cons.orientation = conspicuity_orientation(features, normalized, grid);
  r.timings.features = seconds_since(t);

  // Motion runs on intensity scaled to [0, 1], kept only at the scales read.
  Pyramid now(pyr.intensity.pos.size());
  for (int l : levels) now[l] = pyr.intensity.pos[l] / 255.0;
  state.history_.push(std::move(now));
  const DynamicSaliency ds = dynamic_saliency(state.history_, cfg, grid, pool);
  r.motion_warm_up = ds.warm_up;
  r.timings.motion = seconds_since(t);

  const GrayMap ss = static_saliency(cons);
  const GrayMap s = master_saliency(ss, ds.map, cfg.fusion_weights);
  r.timings.fusion = seconds_since(t);

  r.static_map = unit_max(resize_to(ss, full));
  r.dynamic_map = unit_max(resize_to(ds.map, full));
  // Bilinear upsampling stays within the input range, so S keeps max <= 1.
  r.master_map = resize_to(s, full);
  GrayMap f;
  if (cfg.enable_gwta) {
    GwtaResult g = gwta(r.master_map, cfg.gwta);
    r.foci = std::move(g.foci);
    f = std::move(g.map);
  } else {
    f = r.master_map;
  }
  if (cfg.enable_center_prior) {
    if (extent_of(state.prior_) != full) state.prior_ = center_prior(full.width, full.height);
    f = apply_prior(f, state.prior_);
  }
  if (cfg.enable_ewma)
    r.fixation_map = ewma_step(state.ewma_, f, cfg.ewma_alpha);
  else
    r.fixation_map = std::move(f);
  r.timings.fixation = seconds_since(t);
  r.timings.total = std::chrono::duration<double>(Clock::now() - start).count();

  state.extent_ = full;
  ++state.frame_index_;
  return r;
}

void process_stream(const FrameSource& source, const PipelineConfig& cfg, const ResultSink& sink, int queue_depth) {
  if (queue_depth < 1) throw ConfigError("queue depth must be positive");
  StreamState state(cfg);

  std::mutex mu;
  std::condition_variable changed;
  std::deque<FrameRGB> queue;
  bool done = false, cancel = false;
  std::exception_ptr read_error;
  long read_index = 0;

  std::thread reader([&] {
    for (;;) {
      std::optional<FrameRGB> next;
      try {
        next = source();
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        read_error = std::make_exception_ptr(Error("reading frame " + std::to_string(read_index) + ": " + e.what()));
        done = true;
        changed.notify_all();
        return;
      }
      std::unique_lock lock(mu);
      if (!next) {
        done = true;
        changed.notify_all();
        return;
      }
      changed.wait(lock, [&] { return cancel || static_cast<int>(queue.size()) < queue_depth; });
      if (cancel) return;
      queue.push_back(std::move(*next));
      ++read_index;
      changed.notify_all();
    }
  });

  auto stop_reader = [&] {
    {
      std::lock_guard lock(mu);
      cancel = true;
    }
    changed.notify_all();
    reader.join();
  };

  try {
    for (;;) {
      FrameRGB frame;
      {
        std::unique_lock lock(mu);
        changed.wait(lock, [&] { return done || !queue.empty(); });
        if (queue.empty()) {
          if (read_error) std::rethrow_exception(read_error);
          break;
        }
        frame = std::move(queue.front());
        queue.pop_front();
      }
      changed.notify_all();
      sink(process_frame(state, frame));
    }
  } catch (...) {
    stop_reader();
    throw;
  }
  reader.join();
}

std::vector<FrameResult> process_stream(const FrameSource& source, const PipelineConfig& cfg) {
  std::vector<FrameResult> out;
  process_stream(source, cfg, [&](FrameResult&& r) { out.push_back(std::move(r)); });
  return out;
}

FrameSource frames_from(const std::vector<FrameRGB>& frames) {
  auto next = std::make_shared<std::size_t>(0);
  return [&frames, next]() -> std::optional<FrameRGB> {
    if (*next >= frames.size()) return std::nullopt;
    return frames[(*next)++];
  };
}

}  // namespace bias
