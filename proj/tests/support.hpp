#pragma once

// Hand-rolled generators and small helpers shared by the test suites.

#include "bias/core.hpp"
#include "bias/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using bias::GrayMap;

/// Seeded source of random test inputs. Every property test names its seed
/// so a failure can be replayed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  GrayMap map(int w, int h, double lo = 0.0, double hi = 1.0) {
    GrayMap m(h, w);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(lo, hi);
    return m;
  }

  /// Non-negative map with a few smooth bumps over a noise floor: the shape
  /// rectified feature maps tend to have.
  GrayMap bumpy(int w, int h, int bumps = 4) {
    GrayMap m = map(w, h, 0.0, 0.05);
    for (int b = 0; b < bumps; ++b) {
      const double cx = uniform(0, w - 1), cy = uniform(0, h - 1), s = uniform(1.0, 0.15 * w + 1.0);
      const double a = uniform(0.2, 1.0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          m(y, x) += a * std::exp(-0.5 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (s * s));
    }
    return m;
  }

  /// Map with values drawn from a few levels, to exercise ties.
  GrayMap quantized(int w, int h, int levels) {
    GrayMap m(h, w);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = integer(0, levels - 1) / double(levels);
    return m;
  }

  std::vector<bias::FixationPoint> points(int w, int h, int n) {
    std::vector<bias::FixationPoint> out;
    for (int i = 0; i < n; ++i) out.push_back({integer(0, w - 1), integer(0, h - 1)});
    return out;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline GrayMap gaussian_blob(int w, int h, double cx, double cy, double sigma, double amp = 1.0) {
  GrayMap m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      m(y, x) = amp * std::exp(-0.5 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (sigma * sigma));
  return m;
}

inline bool bit_equal(const GrayMap& a, const GrayMap& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bias_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
