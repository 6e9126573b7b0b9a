#pragma once

#include "bias/core.hpp"
#include "bias/pyramid.hpp"

#include <array>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace bias {

class ThreadPool;

/// Two pyramids carrying opposite polarities of one feature.
struct OpponentPair {
  Pyramid pos;
  Pyramid neg;
};

struct IntensityMaps {
  GrayMap on;   // 0.299 R + 0.587 G + 0.114 B
  GrayMap off;  // 255 - on
};

/// Opponent color maps. Values may be negative.
struct ColorMaps {
  GrayMap red, green, blue, yellow;
};

IntensityMaps intensity_channels(const FrameRGB& frame);
ColorMaps color_channels(const FrameRGB& frame);

/// Real and imaginary planes of a complex-valued map.
template <typename Scalar>
struct ComplexMap {
  Map<Scalar> re, im;
  Map<Scalar> magnitude() const { return (re.square() + im.square()).sqrt(); }
};

using ComplexKernel = std::vector<std::complex<double>>;

/// Convolves `in` with row kernel `row` along x and then with `col` along y.
/// Kernels have odd length and are centered; borders replicate the edge.
template <typename Scalar>
ComplexMap<Scalar> separable_complex_conv(const Map<Scalar>& in, std::span<const std::complex<double>> row,
                                          std::span<const std::complex<double>> col);

/// Complex Gabor filters at four orientations, factored into 1D row and
/// column kernels. theta is the direction of the carrier wave vector, so
/// theta = 0 modulates along x and responds to vertical structure.
///
/// Levels below `reuse_level` share one filter with envelope sigma
/// 2*pi^2/omega. Coarser levels are computed from the reuse level with the
/// whole filter (envelope and wavelength) dilated by 2 per extra octave and
/// the response decimated back down to its own level.
class GaborBank {
 public:
  static constexpr std::array<double, 4> kOrientations{0.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                                       3 * std::numbers::pi / 4};
  static constexpr double kDefaultOmega = 2 * std::numbers::pi * std::numbers::pi / 2.7;
  /// Wavelength paired with omega in the carrier exp(2 pi i omega x / lambda).
  /// pi^3 puts the carrier at 4 radians per envelope sigma.
  static constexpr double kDefaultWavelength = std::numbers::pi * std::numbers::pi * std::numbers::pi;

  explicit GaborBank(double omega = kDefaultOmega, double wavelength = kDefaultWavelength, int reuse_level = 5,
                     int max_level = 12);

  double omega() const { return omega_; }
  double wavelength() const { return wavelength_; }
  int reuse_level() const { return reuse_level_; }

  /// Envelope sigma of the filter applied for `level`, in pixels of the map it runs on.
  double envelope_sigma(int level) const;
  /// Carrier wave number in radians per pixel of the map it runs on.
  double carrier(int level) const;

  const ComplexKernel& row_kernel(int level, int theta_index) const;
  const ComplexKernel& col_kernel(int level, int theta_index) const;

 private:
  int dilation(int level) const;

  double omega_, wavelength_;
  int reuse_level_, max_level_;
  // Indexed [dilation][theta].
  std::vector<std::array<ComplexKernel, 4>> rows_, cols_;
};

/// Orientation magnitude pyramid for one theta. Only `levels` are computed
/// (all levels when empty); other entries are left as empty maps.
Pyramid gabor_orient(const Pyramid& intensity, const GaborBank& bank, int theta_index,
                     std::span<const int> levels = {});

/// Rectified opponent center-surround pair at scale c:
///   first  = max(0, (pos(c) - neg(c)) (-) (neg(s) - pos(s)))
///   second = max(0, (neg(c) - pos(c)) (-) (pos(s) - neg(s)))
std::pair<GrayMap, GrayMap> opponent_feature_maps(const OpponentPair& pair, int c, int s);

/// |O(c) (-) O(s)| for one orientation pyramid.
GrayMap orientation_feature_maps(const Pyramid& orientation, int c, int s);

enum class Channel { Intensity, RedGreen, BlueYellow, Orientation };

struct FeatureMap {
  Channel channel;
  int center;
  int surround;
  /// +1 / -1 polarity for opponent channels, orientation index otherwise.
  int tag;
  GrayMap map;
};

/// Pyramids of every static channel for one frame.
struct ChannelPyramids {
  OpponentPair intensity;    // (I+, I-)
  OpponentPair red_green;    // (R, G)
  OpponentPair blue_yellow;  // (B, Y)
  std::array<Pyramid, 4> orientation;
};

/// Builds the channel pyramids down to `depth`. Only `levels` (all when
/// empty) are filled, plus the levels the Gabor filters read; the others are
/// left as empty maps. Orientation responses exist at `levels` only.
ChannelPyramids build_channel_pyramids(const FrameRGB& frame, int depth, const GaborBank& bank,
                                       std::span<const int> levels, ThreadPool* pool = nullptr);

/// All rectified feature maps for the configured (c, s) pairs, in a fixed order:
/// intensity, red-green, blue-yellow (each +, -), then orientation by theta.
std::vector<FeatureMap> static_feature_maps(const ChannelPyramids& pyr, const PipelineConfig& cfg,
                                            ThreadPool* pool = nullptr);

/// Convenience: pyramids plus feature maps for one frame.
std::vector<FeatureMap> static_feature_set(const FrameRGB& frame, const PipelineConfig& cfg,
                                           ThreadPool* pool = nullptr);

/// Pyramid depth the configuration needs (deepest scale, and the Gabor reuse
/// level whenever a scale at or beyond it is used).
int required_depth(const PipelineConfig& cfg, const GaborBank& bank);

}  // namespace bias
