#pragma once

// Frame ingestion, map serialization and the on-disk dataset layout.
//
// Formats:
//   PPM P6 / PGM P5   8-bit binary netpbm, maxval 255
//   PNG               8-bit gray, gray+alpha, RGB or RGBA (alpha ignored)
//   PFM               little-endian 32-bit float gray ("Pf", negative scale),
//                     rows stored bottom to top
//   raw RGB24         interleaved R, G, B bytes, row-major, frames back to back

#include "bias/core.hpp"
#include "bias/metrics.hpp"
#include "bias/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bias {

namespace fs = std::filesystem;

/// Any failure to read or write a file; the message starts with the path.
class IoError : public Error {
 public:
  using Error::Error;
};

FrameRGB read_rgb_image(const fs::path& path);
/// Gray image scaled to [0, 1] (PGM, PNG) or taken verbatim (PFM). Color PNGs
/// are reduced to their luma.
GrayMap read_gray_image(const fs::path& path);

/// Writes round(255 * clamp(map, 0, 1)) as PGM or PNG, chosen by extension.
void write_gray8(const fs::path& path, const GrayMap& map);
void write_pfm(const fs::path& path, const GrayMap& map);
void write_ppm(const fs::path& path, const FrameRGB& frame);

/// Image files (.png, .ppm, .pgm, .pfm) directly inside `dir`, sorted by name.
std::vector<fs::path> list_images(const fs::path& dir);

struct RawDims {
  int width = 0;
  int height = 0;
};

/// Lazily decoding source over a directory of images, a raw RGB24 file, or
/// "-" for raw RGB24 on standard input. Raw input needs `dims`. Images of a
/// size different from the first one fail with the offending path.
FrameSource open_frames(const std::string& path, std::optional<RawDims> dims = std::nullopt);

/// Frame `index` of a deterministic 8-bit test clip: a shaded, lightly
/// textured background with colored discs and a bar moving across it.
FrameRGB synthetic_frame(int width, int height, int index);

/// Reads everything open_frames would yield.
std::vector<FrameRGB> read_frames(const std::string& path, std::optional<RawDims> dims = std::nullopt);

struct EmitFlags {
  bool saliency = false;  // master map S
  bool stat = false;      // SS
  bool dynamic = false;   // DS
  bool fixation = false;  // smoothed fixation map
  bool foci = false;
  bool timing = false;
};

/// Comma-separated list of saliency, static, dynamic, fixation, foci, timing
/// (or "all"). Unknown names throw ConfigError.
EmitFlags parse_emit(const std::string& list);

/// Streams results into `out_dir`:
///   <kind>/NNNNNN.png (or .pfm with float_out), frames numbered from 1;
///     8-bit maps are rescaled so a nonzero map peaks at 255
///   foci.csv    frame,mu_x,mu_y,sigma_x,sigma_y,amplitude (frame from 1)
///   timing.csv  frame,channels,features,motion,fusion,fixation,total (seconds)
class OutputWriter {
 public:
  OutputWriter(const fs::path& out_dir, EmitFlags flags, bool float_out = false);
  ~OutputWriter();
  OutputWriter(const OutputWriter&) = delete;
  OutputWriter& operator=(const OutputWriter&) = delete;

  void write(const FrameResult& r);
  /// Flushes and closes the CSV files; throws on a failed write.
  void close();

 private:
  void write_map(const std::string& kind, long frame, const GrayMap& m);

  fs::path dir_;
  EmitFlags flags_;
  bool float_out_;
  std::ofstream foci_, timing_;
};

void write_outputs(const std::vector<FrameResult>& results, const fs::path& out_dir, EmitFlags flags,
                   bool float_out = false);

/// Fixations keyed by 0-based frame index.
using FixationTable = std::map<int, std::vector<FixationPoint>>;

/// Text list, one "frame x y" per line with 1-based frames and 0-based pixel
/// coordinates; '#' starts a comment.
FixationTable read_fixation_list(const fs::path& path);

/// Nonzero pixels of a binary fixation-map image.
std::vector<FixationPoint> fixations_from_mask(const fs::path& path);

/// Ground truth of one video:
///   <video>/fixations.txt     coordinate list, or
///   <video>/fixation/*.png    binary maps, one per frame in sorted order
///   <video>/maps/*.png        optional continuous densities (rescaled to sum 1)
struct VideoGroundTruth {
  std::string name;
  FixationTable fixations;
  std::map<int, fs::path> density_maps;
};

VideoGroundTruth load_video_ground_truth(const fs::path& video_dir);

/// Video directories under `root` (sorted). A root holding images directly is
/// a single video.
std::vector<fs::path> list_videos(const fs::path& root);

}  // namespace bias
