// bias: run the saliency engine over a clip, score predictions, or time it.

#include "bias/fixation.hpp"
#include "bias/io.hpp"
#include "bias/metrics.hpp"
#include "bias/pipeline.hpp"
#include "bias/thread_pool.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace {

using namespace bias;
using json = nlohmann::ordered_json;

struct Common {
  std::string config;
  int threads = 0;
  std::vector<std::string> sets;
};

void add_common(CLI::App& app, Common& c) {
  app.add_option("--config", c.config, "Config file (key = value)");
  app.add_option("--threads", c.threads, "Worker threads (default: BIAS_THREADS, then the config)");
  app.add_option("--set", c.sets, "Override one config key, e.g. --set gwta.max_foci=5");
}

int env_threads() {
  const char* v = std::getenv("BIAS_THREADS");
  if (!v || !*v) return 0;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string("BIAS_THREADS is not an integer: ") + v);
  }
}

PipelineConfig resolve_config(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.threads > 0)
    cfg.threads = c.threads;
  else if (int t = env_threads(); t > 0)
    cfg.threads = t;
  return validate_config(cfg);
}

std::optional<RawDims> raw_dims(int w, int h) {
  if (w > 0 && h > 0) return RawDims{w, h};
  return std::nullopt;
}

// ---- run

struct RunArgs {
  Common common;
  std::string input, out, emit = "saliency";
  bool float_out = false;
  int width = 0, height = 0;
};

int cmd_run(const RunArgs& a) {
  const PipelineConfig cfg = resolve_config(a.common);
  const EmitFlags flags = parse_emit(a.emit);
  const FrameSource src = open_frames(a.input, raw_dims(a.width, a.height));
  OutputWriter writer(a.out, flags, a.float_out);
  long n = 0;
  process_stream(src, cfg, [&](FrameResult&& r) {
    writer.write(r);
    ++n;
  });
  writer.close();
  std::cout << "frames=" << n << " out=" << a.out << '\n';
  return 0;
}

// ---- eval

struct EvalArgs {
  std::string input, gt, report;
  int threads = 0;
  std::uint64_t seed = 0;
  int permutations = 100;
  double density_sigma = 0.0;
};

bool has_ground_truth(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / "fixations.txt", ec) || fs::is_directory(dir / "fixation", ec);
}

fs::path prediction_dir(const fs::path& video) {
  std::error_code ec;
  return fs::is_directory(video / "saliency", ec) ? video / "saliency" : video;
}

json metrics_json(const FrameMetrics& m) {
  return {{"nss", m.nss}, {"cc", m.cc}, {"sim", m.sim}, {"auc_j", m.auc_j}, {"s_auc", m.s_auc}};
}

int cmd_eval(const EvalArgs& a) {
  std::vector<fs::path> videos;
  {
    std::error_code ec;
    if (fs::is_directory(fs::path(a.input) / "saliency", ec))
      videos = {a.input};
    else
      videos = list_videos(a.input);
  }
  if (videos.empty()) throw IoError(a.input + ": no prediction videos found");
  const bool single_gt = has_ground_truth(a.gt);
  if (single_gt && videos.size() != 1)
    throw IoError(a.gt + ": holds one video's ground truth but " + std::to_string(videos.size()) +
                  " prediction videos were given");

  std::vector<VideoGroundTruth> truths;
  for (const auto& v : videos) {
    const fs::path gdir = single_gt ? fs::path(a.gt) : fs::path(a.gt) / v.filename();
    truths.push_back(load_video_ground_truth(gdir));
    truths.back().name = v.filename().string();
  }

  struct Job {
    std::size_t video;
    int frame;
    fs::path pred;
  };
  std::vector<Job> jobs;
  for (std::size_t vi = 0; vi < videos.size(); ++vi) {
    const auto files = list_images(prediction_dir(videos[vi]));
    for (const auto& [frame, pts] : truths[vi].fixations) {
      if (frame >= static_cast<int>(files.size()))
        throw IoError(videos[vi].string() + ": ground truth names frame " + std::to_string(frame + 1) + " but only " +
                      std::to_string(files.size()) + " predictions exist");
      jobs.push_back({vi, frame, files[frame]});
    }
  }

  // Negative pools: fixations of every other video, or of the other frames
  // when only one video is evaluated.
  std::vector<std::vector<FixationPoint>> all(videos.size());
  for (std::size_t vi = 0; vi < videos.size(); ++vi)
    for (const auto& [frame, pts] : truths[vi].fixations) all[vi].insert(all[vi].end(), pts.begin(), pts.end());
  auto pool_for = [&](std::size_t vi, int frame) {
    std::vector<FixationPoint> pool;
    if (videos.size() > 1) {
      for (std::size_t o = 0; o < videos.size(); ++o)
        if (o != vi) pool.insert(pool.end(), all[o].begin(), all[o].end());
    } else {
      for (const auto& [f, pts] : truths[vi].fixations)
        if (f != frame) pool.insert(pool.end(), pts.begin(), pts.end());
    }
    return pool;
  };
  std::vector<std::vector<FixationPoint>> video_pools;
  if (videos.size() > 1)
    for (std::size_t vi = 0; vi < videos.size(); ++vi) video_pools.push_back(pool_for(vi, -1));

  EvalOptions opts;
  opts.permutations = a.permutations;
  opts.seed = a.seed;
  opts.density_sigma = a.density_sigma;

  std::vector<FrameMetrics> results(jobs.size());
  auto run = [&](std::size_t i) {
    const Job& j = jobs[i];
    const GrayMap pred = read_gray_image(j.pred);
    FixationGroundTruth gt;
    gt.points = truths[j.video].fixations.at(j.frame);
    if (auto it = truths[j.video].density_maps.find(j.frame); it != truths[j.video].density_maps.end()) {
      GrayMap d = read_gray_image(it->second);
      if (d.sum() > 0.0) gt.density = GrayMap(d / d.sum());
    }
    const auto pool = videos.size() > 1 ? video_pools[j.video] : pool_for(j.video, j.frame);
    results[i] = evaluate_frame(pred, gt, pool, opts, i);
  };
  int threads = a.threads > 0 ? a.threads : std::max(1, env_threads());
  if (threads > 1) {
    ThreadPool pool(threads);
    pool.parallel_for(jobs.size(), run);
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) run(i);
  }

  MetricReport report;
  report.seed = a.seed;
  report.permutations = a.permutations;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    report.frames.push_back({truths[jobs[i].video].name, jobs[i].frame + 1, results[i]});
  aggregate(report);

  json out;
  out["seed"] = report.seed;
  out["permutations"] = report.permutations;
  out["overall"] = metrics_json(report.overall);
  out["videos"] = json::array();
  for (const auto& [name, m] : report.videos) {
    json v = metrics_json(m);
    v["video"] = name;
    out["videos"].push_back(v);
  }
  out["frames"] = json::array();
  for (const auto& f : report.frames) {
    json v = metrics_json(f.metrics);
    v["video"] = f.video;
    v["frame"] = f.frame;
    out["frames"].push_back(v);
  }
  const std::string text = out.dump(2);
  if (a.report.empty() || a.report == "-") {
    std::cout << text << '\n';
  } else {
    std::ofstream f(a.report);
    if (!(f << text << '\n')) throw IoError(a.report + ": write failed");
  }
  return 0;
}

// ---- bench

struct BenchArgs {
  Common common;
  std::string input, json_out;
  int frames = 100, repeat = 1, width = 640, height = 480;
};

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  // Nearest rank.
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * v.size()));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

int cmd_bench(const BenchArgs& a) {
  if (a.frames < 1 || a.repeat < 1) throw ConfigError("--frames and --repeat must be positive");
  const PipelineConfig cfg = resolve_config(a.common);
  std::vector<FrameRGB> clip;
  if (a.input.empty()) {
    for (int i = 0; i < a.frames; ++i) clip.push_back(synthetic_frame(a.width, a.height, i));
  } else {
    clip = read_frames(a.input, raw_dims(a.width, a.height));
    if (static_cast<int>(clip.size()) > a.frames) clip.resize(a.frames);
  }
  if (clip.empty()) throw IoError(a.input + ": no frames");

  const char* names[] = {"channels", "features", "motion", "fusion", "fixation", "total"};
  std::vector<std::vector<double>> stage(6);
  const auto start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < a.repeat; ++rep) {
    StreamState state(cfg);
    for (const auto& f : clip) {
      const FrameResult r = process_frame(state, f);
      const auto& t = r.timings;
      const double vals[] = {t.channels, t.features, t.motion, t.fusion, t.fixation, t.total};
      for (int k = 0; k < 6; ++k) stage[k].push_back(vals[k]);
    }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::size_t processed = stage[5].size();

  json out;
  out["frames"] = processed;
  out["width"] = clip.front().width();
  out["height"] = clip.front().height();
  out["threads"] = cfg.threads;
  out["throughput_fps"] = processed / wall;
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "frames=" << processed << " size=" << clip.front().width() << "x" << clip.front().height()
            << " threads=" << cfg.threads << '\n';
  for (int k = 0; k < 6; ++k) {
    const double p50 = percentile(stage[k], 50) * 1e3, p95 = percentile(stage[k], 95) * 1e3;
    out["stages"][names[k]] = {{"p50_ms", p50}, {"p95_ms", p95}};
    std::cout << std::left << std::setw(9) << names[k] << " p50_ms=" << p50 << " p95_ms=" << p95 << '\n';
  }
  std::cout << "throughput_fps=" << processed / wall << '\n';
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out);
    if (!(f << out.dump(2) << '\n')) throw IoError(a.json_out + ": write failed");
  }
  return 0;
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const Error*>(&e)) return "engine";
  return "internal";
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Frame-sized buffers are freed and reallocated every frame; keep them on
  // the heap instead of paying for fresh zeroed pages each time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Bottom-up video saliency engine"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Compute saliency and fixation maps for a clip");
  run_cmd->add_option("--input", run.input, "Frame directory, raw RGB24 file, or - for stdin")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--emit", run.emit, "saliency,static,dynamic,fixation,foci,timing or all");
  run_cmd->add_flag("--float-out", run.float_out, "Write maps as 32-bit PFM instead of 8-bit PNG");
  run_cmd->add_option("--width", run.width, "Frame width of raw input");
  run_cmd->add_option("--height", run.height, "Frame height of raw input");
  add_common(*run_cmd, run.common);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score prediction maps against fixations");
  eval_cmd->add_option("--input", ev.input, "Prediction root: one directory of maps per video")->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth root: one directory per video")->required();
  eval_cmd->add_option("--out", ev.report, "Report file (JSON); stdout when omitted");
  eval_cmd->add_option("--seed", ev.seed, "s-AUC sampling seed");
  eval_cmd->add_option("--permutations", ev.permutations, "s-AUC rounds");
  eval_cmd->add_option("--density-sigma", ev.density_sigma, "Blob sigma for synthesized densities (default W/32)");
  eval_cmd->add_option("--threads", ev.threads, "Worker threads (default: BIAS_THREADS, then 1)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the engine on a synthetic or given clip");
  bench_cmd->add_option("--input", bench.input, "Clip to time; a synthetic clip when omitted");
  bench_cmd->add_option("--frames", bench.frames, "Frames per pass");
  bench_cmd->add_option("--repeat", bench.repeat, "Passes over the clip");
  bench_cmd->add_option("--width", bench.width, "Synthetic or raw frame width");
  bench_cmd->add_option("--height", bench.height, "Synthetic or raw frame height");
  bench_cmd->add_option("--json", bench.json_out, "Also write the report as JSON");
  add_common(*bench_cmd, bench.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*eval_cmd) return cmd_eval(ev);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
