#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace bias {

/// Row-major dense 2D field. rows() is the height, cols() the width.
template <typename Scalar>
using Map = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-channel map used throughout the engine.
using GrayMap = Map<double>;

/// Pyramid of maps indexed by scale; level 0 is the finest.
template <typename Scalar>
using PyramidT = std::vector<Map<Scalar>>;
using Pyramid = PyramidT<double>;

struct Extent {
  int width = 0;
  int height = 0;
  friend bool operator==(const Extent&, const Extent&) = default;
};

template <typename Derived>
Extent extent_of(const Eigen::ArrayBase<Derived>& m) {
  return {static_cast<int>(m.cols()), static_cast<int>(m.rows())};
}

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// RGB frame with planes in [0, 255].
struct FrameRGB {
  GrayMap r, g, b;

  FrameRGB() = default;
  FrameRGB(int width, int height)
      : r(GrayMap::Zero(height, width)), g(GrayMap::Zero(height, width)), b(GrayMap::Zero(height, width)) {}

  int width() const { return static_cast<int>(r.cols()); }
  int height() const { return static_cast<int>(r.rows()); }
  Extent extent() const { return {width(), height()}; }

  /// Builds a frame from interleaved 8-bit RGB (row-major, 3 bytes per pixel).
  static FrameRGB from_rgb24(const std::uint8_t* data, int width, int height);

  /// Fills every pixel with one color.
  static FrameRGB uniform(int width, int height, double r, double g, double b);
};

/// Throws DimensionError unless the frame is consistent, finite, in [0, 255],
/// and at least 2^levels pixels along each axis.
void validate_frame(const FrameRGB& frame, int levels);

struct GwtaConfig {
  double step_mu = 0.1;
  double step_sigma = 4.0;
  /// Regularizer coefficient; the effective value is lambda_coeff * sqrt(width).
  double lambda_coeff = 0.03;
  int max_steps = 15;
  double residual_stop = 0.2;
  int max_foci = 12;
  /// Initial focus sigma as a fraction of the map width.
  double sigma_init_frac = 0.05;
  /// Lower sigma bound in pixels.
  double sigma_min = 2.0;
  /// Upper sigma bound as a fraction of the map width.
  double sigma_max_frac = 0.5;

  friend bool operator==(const GwtaConfig&, const GwtaConfig&) = default;
};

struct FusionWeights {
  double joint = 1.0;    // weight of N(SS * DS)
  double stat = 0.3;     // weight of N(SS)
  double dynamic = 0.3;  // weight of N(DS)
  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

struct PipelineConfig {
  std::vector<int> center_scales{2};
  std::vector<int> deltas{4};
  std::vector<int> tau_set{1, 3, 7, 15};
  double gamma = 0.8;
  FusionWeights fusion_weights{};
  double ewma_alpha = 0.9;
  GwtaConfig gwta{};
  bool enable_gwta = true;
  bool enable_ewma = true;
  bool enable_center_prior = true;
  int threads = 4;
  int pyramid_levels = 8;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

  /// Smallest center scale; all conspicuity maps are accumulated there.
  int accumulation_scale() const;
  /// Deepest pyramid level any (c, c + delta) pair touches.
  int deepest_scale() const;
  /// Largest temporal offset.
  int max_tau() const;
  /// Every scale some feature or motion map is read at, ascending.
  std::vector<int> used_scales() const;
};

/// Checks every invariant; returns the config unchanged or throws ConfigError
/// naming the first violation.
PipelineConfig validate_config(PipelineConfig cfg);

/// Flat `key = value` text; '#' starts a comment. Keys absent from the text
/// keep their defaults. The result is validated.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::string& path);

/// Applies one `key = value` assignment; unknown keys throw ConfigError.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Writes every field; parse_config(write_config(cfg)) == cfg.
void write_config(std::ostream& out, const PipelineConfig& cfg);
std::string to_string(const PipelineConfig& cfg);

}  // namespace bias
