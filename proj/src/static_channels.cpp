#include "bias/static_channels.hpp"

#include "bias/thread_pool.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace bias {

IntensityMaps intensity_channels(const FrameRGB& frame) {
  IntensityMaps out;
  out.on = 0.299 * frame.r + 0.587 * frame.g + 0.114 * frame.b;
  out.off = 255.0 - out.on;
  return out;
}

ColorMaps color_channels(const FrameRGB& frame) {
  const auto& r = frame.r;
  const auto& g = frame.g;
  const auto& b = frame.b;
  ColorMaps out;
  out.red = r - (g + b) / 2.0;
  out.green = g - (r + b) / 2.0;
  out.blue = b - (r + g) / 2.0;
  out.yellow = (r + g) / 2.0 - (r - g).abs() / 2.0 - b;
  return out;
}

template <typename Scalar>
ComplexMap<Scalar> separable_complex_conv(const Map<Scalar>& in, std::span<const std::complex<double>> row,
                                          std::span<const std::complex<double>> col) {
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols());
  const int rr = static_cast<int>(row.size()) / 2, rc = static_cast<int>(col.size()) / 2;

  // Row pass: real input, complex kernel. out(x) = sum_j in(x - j) k(j).
  Map<Scalar> tre(h, w), tim(h, w);
  std::vector<Scalar> kr(row.size()), ki(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    kr[j] = static_cast<Scalar>(row[j].real());
    ki[j] = static_cast<Scalar>(row[j].imag());
  }
  using Row = Eigen::Array<Scalar, 1, Eigen::Dynamic>;
  Row padded(w + 2 * rr);
  for (int y = 0; y < h; ++y) {
    const Scalar* src = in.data() + static_cast<std::ptrdiff_t>(y) * w;
    for (int i = 0; i < w + 2 * rr; ++i) padded[i] = src[detail::clamp_index(i - rr, w)];
    // Tap t reads in(x - (t - rr)) == padded[x + 2 rr - t].
    auto ore = tre.row(y);
    auto oim = tim.row(y);
    ore.setZero();
    oim.setZero();
    for (int t = 0; t <= 2 * rr; ++t) {
      const auto seg = padded.segment(2 * rr - t, w);
      ore += kr[t] * seg;
      oim += ki[t] * seg;
    }
  }

  // Column pass: complex by complex, whole rows at a time.
  ComplexMap<Scalar> out{Map<Scalar>::Zero(h, w), Map<Scalar>::Zero(h, w)};
  for (int y = 0; y < h; ++y) {
    auto ore = out.re.row(y);
    auto oim = out.im.row(y);
    for (int t = 0; t <= 2 * rc; ++t) {
      const int sy = detail::clamp_index(y - (t - rc), h);
      const auto vr = static_cast<Scalar>(col[t].real());
      const auto vi = static_cast<Scalar>(col[t].imag());
      if (vi == Scalar(0)) {
        ore += vr * tre.row(sy);
        oim += vr * tim.row(sy);
      } else {
        ore += vr * tre.row(sy) - vi * tim.row(sy);
        oim += vi * tre.row(sy) + vr * tim.row(sy);
      }
    }
  }
  return out;
}

template ComplexMap<double> separable_complex_conv<double>(const Map<double>&, std::span<const std::complex<double>>,
                                                           std::span<const std::complex<double>>);
template ComplexMap<float> separable_complex_conv<float>(const Map<float>&, std::span<const std::complex<double>>,
                                                         std::span<const std::complex<double>>);

namespace {

// Unit-sum Gaussian envelope times carrier exp(i k x), truncated at
// +-ceil(3 sigma).
ComplexKernel gabor_1d(double sigma, double k) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  ComplexKernel out(2 * radius + 1);
  double sum = 0.0;
  for (int x = -radius; x <= radius; ++x) sum += std::exp(-0.5 * x * x / (sigma * sigma));
  for (int x = -radius; x <= radius; ++x) {
    const double g = std::exp(-0.5 * x * x / (sigma * sigma)) / sum;
    out[x + radius] = g * std::complex<double>(std::cos(k * x), std::sin(k * x));
  }
  return out;
}

}  // namespace

GaborBank::GaborBank(double omega, double wavelength, int reuse_level, int max_level)
    : omega_(omega), wavelength_(wavelength), reuse_level_(reuse_level), max_level_(max_level) {
  if (!(omega > 0.0) || !(wavelength > 0.0) || reuse_level < 0 || max_level < reuse_level)
    throw ConfigError("invalid Gabor bank parameters");
  const int dilations = max_level - reuse_level + 1;
  rows_.resize(dilations);
  cols_.resize(dilations);
  for (int d = 0; d < dilations; ++d) {
    const double scale = std::ldexp(1.0, d);
    const double sigma = 2.0 * std::numbers::pi * std::numbers::pi / omega * scale;
    const double k = 2.0 * std::numbers::pi * omega / (wavelength * scale);
    for (int t = 0; t < 4; ++t) {
      rows_[d][t] = gabor_1d(sigma, k * std::cos(kOrientations[t]));
      cols_[d][t] = gabor_1d(sigma, k * std::sin(kOrientations[t]));
    }
  }
}

int GaborBank::dilation(int level) const {
  if (level < 0 || level > max_level_) throw DimensionError("Gabor level out of range");
  return std::max(0, level - reuse_level_);
}

double GaborBank::envelope_sigma(int level) const {
  return 2.0 * std::numbers::pi * std::numbers::pi / omega_ * std::ldexp(1.0, dilation(level));
}

double GaborBank::carrier(int level) const {
  return 2.0 * std::numbers::pi * omega_ / (wavelength_ * std::ldexp(1.0, dilation(level)));
}

const ComplexKernel& GaborBank::row_kernel(int level, int theta_index) const {
  return rows_.at(dilation(level)).at(theta_index);
}

const ComplexKernel& GaborBank::col_kernel(int level, int theta_index) const {
  return cols_.at(dilation(level)).at(theta_index);
}

Pyramid gabor_orient(const Pyramid& intensity, const GaborBank& bank, int theta_index, std::span<const int> levels) {
  const int depth = static_cast<int>(intensity.size()) - 1;
  std::vector<int> todo(levels.begin(), levels.end());
  if (todo.empty())
    for (int l = 0; l <= depth; ++l) todo.push_back(l);
  Pyramid out(intensity.size());
  for (int level : todo) {
    if (level < 0 || level > depth) throw DimensionError("orientation level beyond pyramid depth");
    const int src_level = std::min(level, bank.reuse_level());
    const auto& row = bank.row_kernel(level, theta_index);
    const auto& col = bank.col_kernel(level, theta_index);
    GrayMap resp = separable_complex_conv<double>(intensity[src_level], row, col).magnitude();
    for (int l = src_level; l < level; ++l) resp = reduce(resp);
    out[level] = std::move(resp);
  }
  return out;
}

std::pair<GrayMap, GrayMap> opponent_feature_maps(const OpponentPair& pair, int c, int s) {
  const int depth = static_cast<int>(std::min(pair.pos.size(), pair.neg.size())) - 1;
  if (c < 0 || s <= c || s > depth) throw DimensionError("invalid center-surround scale pair");
  const GrayMap on = across_scale_diff<double>(pair.pos[c] - pair.neg[c], c, pair.neg[s] - pair.pos[s], s);
  const GrayMap off = across_scale_diff<double>(pair.neg[c] - pair.pos[c], c, pair.pos[s] - pair.neg[s], s);
  return {on.max(0.0), off.max(0.0)};
}

GrayMap orientation_feature_maps(const Pyramid& orientation, int c, int s) {
  const int depth = static_cast<int>(orientation.size()) - 1;
  if (c < 0 || s <= c || s > depth) throw DimensionError("invalid center-surround scale pair");
  if (orientation[c].size() == 0 || orientation[s].size() == 0)
    throw DimensionError("orientation level not computed");
  return across_scale_diff(orientation[c], c, orientation[s], s).abs();
}

int required_depth(const PipelineConfig& cfg, const GaborBank&) {
  // Levels past the reuse level are derived from the reuse level, which then
  // lies inside the pyramid anyway.
  return cfg.deepest_scale();
}

ChannelPyramids build_channel_pyramids(const FrameRGB& frame, int depth, const GaborBank& bank,
                                       std::span<const int> levels, ThreadPool* pool) {
  // Blur and decimation are linear, so every channel except yellow (which
  // has |R - G|) is combined from the R, G, B pyramids at the levels read.
  std::vector<int> wanted(levels.begin(), levels.end());
  if (wanted.empty())
    for (int l = 0; l <= depth; ++l) wanted.push_back(l);
  for (int l : std::vector<int>(wanted)) wanted.push_back(std::min(l, bank.reuse_level()));
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  for (int l : wanted)
    if (l < 0 || l > depth) throw DimensionError("requested level beyond pyramid depth");

  const GrayMap yellow = (frame.r + frame.g) / 2.0 - (frame.r - frame.g).abs() / 2.0 - frame.b;
  std::array<Pyramid, 4> base;
  const std::array<const GrayMap*, 4> planes{&frame.r, &frame.g, &frame.b, &yellow};
  auto build = [&](std::size_t i) { base[i] = build_pyramid(*planes[i], depth); };
  if (pool)
    pool->parallel_for(4, build);
  else
    for (std::size_t i = 0; i < 4; ++i) build(i);

  ChannelPyramids out;
  for (Pyramid* p : {&out.intensity.pos, &out.intensity.neg, &out.red_green.pos, &out.red_green.neg,
                     &out.blue_yellow.pos, &out.blue_yellow.neg})
    p->resize(depth + 1);
  for (int l : wanted) {
    const GrayMap& r = base[0][l];
    const GrayMap& g = base[1][l];
    const GrayMap& b = base[2][l];
    out.intensity.pos[l] = 0.299 * r + 0.587 * g + 0.114 * b;
    out.intensity.neg[l] = 255.0 - out.intensity.pos[l];
    out.red_green.pos[l] = r - (g + b) / 2.0;
    out.red_green.neg[l] = g - (r + b) / 2.0;
    out.blue_yellow.pos[l] = b - (r + g) / 2.0;
    out.blue_yellow.neg[l] = std::move(base[3][l]);
  }

  auto orient = [&](std::size_t t) {
    out.orientation[t] = gabor_orient(out.intensity.pos, bank, static_cast<int>(t), levels);
  };
  if (pool)
    pool->parallel_for(4, orient);
  else
    for (std::size_t t = 0; t < 4; ++t) orient(t);
  return out;
}

std::vector<FeatureMap> static_feature_maps(const ChannelPyramids& pyr, const PipelineConfig& cfg, ThreadPool* pool) {
  struct Job {
    Channel channel;
    int c, s, tag;
  };
  std::vector<Job> jobs;
  for (Channel ch : {Channel::Intensity, Channel::RedGreen, Channel::BlueYellow})
    for (int c : cfg.center_scales)
      for (int d : cfg.deltas) jobs.push_back({ch, c, c + d, +1});
  for (int t = 0; t < 4; ++t)
    for (int c : cfg.center_scales)
      for (int d : cfg.deltas) jobs.push_back({Channel::Orientation, c, c + d, t});

  // Opponent jobs produce two maps each; orientation jobs produce one.
  std::vector<std::vector<FeatureMap>> slots(jobs.size());
  auto run = [&](std::size_t i) {
    const Job& j = jobs[i];
    if (j.channel == Channel::Orientation) {
      slots[i].push_back({j.channel, j.c, j.s, j.tag, orientation_feature_maps(pyr.orientation[j.tag], j.c, j.s)});
      return;
    }
    const OpponentPair& pair = j.channel == Channel::Intensity  ? pyr.intensity
                               : j.channel == Channel::RedGreen ? pyr.red_green
                                                                : pyr.blue_yellow;
    auto [on, off] = opponent_feature_maps(pair, j.c, j.s);
    slots[i].push_back({j.channel, j.c, j.s, +1, std::move(on)});
    slots[i].push_back({j.channel, j.c, j.s, -1, std::move(off)});
  };
  if (pool)
    pool->parallel_for(jobs.size(), run);
  else
    for (std::size_t i = 0; i < jobs.size(); ++i) run(i);

  std::vector<FeatureMap> out;
  for (auto& s : slots)
    for (auto& f : s) out.push_back(std::move(f));
  return out;
}

std::vector<FeatureMap> static_feature_set(const FrameRGB& frame, const PipelineConfig& cfg, ThreadPool* pool) {
  static const GaborBank bank;
  const int depth = required_depth(cfg, bank);
  validate_frame(frame, depth);
  const auto levels = cfg.used_scales();
  const ChannelPyramids pyr = build_channel_pyramids(frame, depth, bank, levels, pool);
  return static_feature_maps(pyr, cfg, pool);
}

}  // namespace bias
