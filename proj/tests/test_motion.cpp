#include "bias/motion.hpp"

#include "bias/fusion.hpp"
#include "bias/pyramid.hpp"
#include "bias/thread_pool.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bias;
using testing_support::Gen;

namespace {

Pyramid tagged(double v) { return Pyramid{GrayMap::Constant(4, 4, v)}; }

// Brute-force detector: explicit loops, clamped reads.
GrayMap hr_oracle(const GrayMap& now, const GrayMap& delayed, int dx, int dy) {
  const int h = now.rows(), w = now.cols();
  GrayMap out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // shift by (dx, dy) reads the source at (x - dx, y - dy).
      const double fwd = delayed(std::clamp(y - dy, 0, h - 1), std::clamp(x - dx, 0, w - 1));
      const double back = delayed(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
      out(y, x) = std::max(0.0, std::exp(-std::abs(now(y, x) - fwd)) - std::exp(-std::abs(now(y, x) - back)));
    }
  return out;
}

GrayMap bar_frame(int w, int h, int x0, int width) {
  GrayMap m = GrayMap::Constant(h, w, 0.1);
  m.middleCols(x0, width).setConstant(0.9);
  return m;
}

}  // namespace

TEST(FrameHistory, RingArithmetic) {
  FrameHistory h(16);
  EXPECT_FALSE(h.available(0));
  h.push(tagged(1));
  EXPECT_TRUE(h.available(0));
  EXPECT_FALSE(h.available(1));
  EXPECT_THROW(h.at(1), Error);
  for (int i = 2; i <= 16; ++i) h.push(tagged(i));
  EXPECT_EQ(h.at(15)[0](0, 0), 1.0);
  EXPECT_EQ(h.at(0)[0](0, 0), 16.0);
  h.push(tagged(17));
  EXPECT_EQ(h.at(15)[0](0, 0), 2.0);
  EXPECT_FALSE(h.available(16));
  EXPECT_EQ(h.size(), 16);
  EXPECT_EQ(h.pushed(), 17);
}

TEST(FrameHistory, SchemaFixedByFirstPush) {
  FrameHistory h(4);
  h.push(Pyramid{GrayMap::Zero(8, 8), GrayMap::Zero(4, 4)});
  EXPECT_THROW(h.push(Pyramid{GrayMap::Zero(8, 8), GrayMap::Zero(4, 5)}), DimensionError);
  EXPECT_THROW(h.push(Pyramid{GrayMap::Zero(8, 8)}), DimensionError);
  EXPECT_THROW(FrameHistory(0), ConfigError);
}

TEST(ShiftOne, Definitions) {
  const GrayMap c = GrayMap::Constant(5, 6, 2.5);
  for (Direction d : kDirections) EXPECT_TRUE(testing_support::bit_equal(shift_one(c, d), c));

  GrayMap imp = GrayMap::Zero(5, 6);
  imp(2, 3) = 1.0;
  EXPECT_EQ(shift_one(imp, Direction::Right)(2, 4), 1.0);
  EXPECT_EQ(shift_one(imp, Direction::Left)(2, 2), 1.0);
  EXPECT_EQ(shift_one(imp, Direction::Down)(3, 3), 1.0);
  EXPECT_EQ(shift_one(imp, Direction::Up)(1, 3), 1.0);
  EXPECT_EQ(shift_one(imp, Direction::Right).sum(), 1.0);

  Gen gen(41);
  const GrayMap m = gen.map(7, 5);
  const GrayMap back = shift_one(shift_one(m, Direction::Left), Direction::Right);
  EXPECT_TRUE(testing_support::bit_equal(back.middleCols(1, 5), m.middleCols(1, 5)));
}

TEST(HrResponse, ConstantsGiveZero) {
  const GrayMap c = GrayMap::Constant(6, 6, 0.4);
  for (Direction d : kDirections) EXPECT_TRUE((hr_response(c, c, d) == 0.0).all());
}

TEST(HrResponse, MovingPixelOnFiveByFive) {
  GrayMap then = GrayMap::Zero(5, 5), now = GrayMap::Zero(5, 5);
  then(2, 2) = 1.0;
  now(2, 3) = 1.0;
  const GrayMap right = hr_response(now, then, Direction::Right);
  const GrayMap left = hr_response(now, then, Direction::Left);
  EXPECT_GT(right(2, 3), 0.0);
  EXPECT_EQ(left(2, 3), 0.0);
  EXPECT_NEAR(right(2, 3), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_TRUE(testing_support::bit_equal(right, hr_oracle(now, then, 1, 0)));
  EXPECT_TRUE(testing_support::bit_equal(left, hr_oracle(now, then, -1, 0)));
}

TEST(HrResponse, MatchesBruteForceOnRandomInput) {
  Gen gen(42);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayMap a = gen.map(9, 7), b = gen.map(9, 7);
    EXPECT_LT((hr_response(a, b, Direction::Up) - hr_oracle(a, b, 0, -1)).abs().maxCoeff(), 1e-15);
    EXPECT_LT((hr_response(a, b, Direction::Down) - hr_oracle(a, b, 0, 1)).abs().maxCoeff(), 1e-15);
  }
  EXPECT_THROW(hr_response(GrayMap::Zero(3, 3), GrayMap::Zero(3, 4), Direction::Up), DimensionError);
}

// Property: opposite directions never both respond at one pixel.
TEST(HrProperty, DirectionAntisymmetry) {
  Gen gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    const GrayMap a = gen.map(16, 12), b = gen.map(16, 12);
    for (Direction d : {Direction::Right, Direction::Down})
      EXPECT_TRUE((hr_response(a, b, d) * hr_response(a, b, opposite(d)) == 0.0).all());
  }
  // A static vertical edge included.
  const GrayMap edge = bar_frame(16, 8, 8, 8);
  EXPECT_TRUE((hr_response(edge, edge, Direction::Right) * hr_response(edge, edge, Direction::Left) == 0.0).all());
}

// Property: a grating drifting right by 1 px/frame drives the rightward
// detector far more than the leftward one.
TEST(HrProperty, DriftingGratingSelectivity) {
  for (double period : {8.0, 13.0, 32.0}) {
    auto grating = [&](int t) {
      GrayMap m(32, 96);
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 96; ++x) m(y, x) = 0.5 + 0.4 * std::sin(2 * std::numbers::pi * (x - t) / period);
      return m;
    };
    for (int t = 1; t < 4; ++t) {
      const double r = hr_response(grating(t), grating(t - 1), Direction::Right).mean();
      const double l = hr_response(grating(t), grating(t - 1), Direction::Left).mean();
      EXPECT_GT(r, 5 * l) << "period " << period;
    }
  }
}

// Property: a stimulus stepping one pixel every k frames is answered best
// by the temporal offset closest to k.
TEST(HrProperty, TemporalOffsetMatching) {
  for (int k : {1, 3, 7, 15}) {
    FrameHistory hist(16);
    double best = -1;
    int best_tau = 0;
    std::map<int, double> sums;
    for (int t = 0; t < 60; ++t) {
      hist.push(Pyramid{bar_frame(96, 8, 20 + t / k, 3)});
      if (t < 30) continue;
      for (int tau : {1, 3, 7, 15})
        sums[tau] += hr_response(hist.at(0)[0], hist.at(tau)[0], Direction::Right).mean();
    }
    for (auto [tau, s] : sums)
      if (s > best) best = s, best_tau = tau;
    EXPECT_EQ(best_tau, k);
  }
}

TEST(MotionStack, ComputesAvailableOffsetsOnly) {
  FrameHistory h(8);
  const std::vector<int> scales{0, 1};
  h.push(build_pyramid(GrayMap(GrayMap::Constant(8, 8, 0.5)), 1));
  EXPECT_EQ(compute_motion_stack(h, scales, {1, 3}).size(), 0u);
  h.push(build_pyramid(GrayMap(GrayMap::Constant(8, 8, 0.5)), 1));
  const MotionStack s = compute_motion_stack(h, scales, {1, 3});
  EXPECT_EQ(s.size(), 8u);
  EXPECT_TRUE(s.has(1, Direction::Up, 1));
  EXPECT_FALSE(s.has(0, Direction::Up, 3));
  EXPECT_THROW(s.get(0, Direction::Up, 3), Error);
}

TEST(MotionFeatures, ZeroAndConstantStacks) {
  MotionStack st;
  for (int sc : {1, 3})
    for (Direction d : kDirections) st.set(sc, d, 1, GrayMap::Zero(16 >> sc, 16 >> sc));
  auto [on, off] = motion_feature_maps(st, 1, 3, Direction::Right, 1);
  EXPECT_TRUE((on == 0.0).all() && (off == 0.0).all());
  EXPECT_TRUE((dynamic_conspicuity(st, [] {
                 PipelineConfig c;
                 c.center_scales = {1};
                 c.deltas = {2};
                 return c;
               }(), 1, Extent{8, 8}) == 0.0).all());

  for (int sc : {1, 3}) st.set(sc, Direction::Right, 1, GrayMap::Constant(16 >> sc, 16 >> sc, 0.3));
  std::tie(on, off) = motion_feature_maps(st, 1, 3, Direction::Right, 1);
  EXPECT_TRUE((on - 0.6).abs().maxCoeff() < 1e-15);
  EXPECT_TRUE((off == 0.0).all());
  EXPECT_THROW(motion_feature_maps(st, 3, 3, Direction::Right, 1), DimensionError);
  EXPECT_THROW(motion_feature_maps(st, 1, 3, Direction::Right, 2), Error);
}

TEST(DynamicConspicuity, SingleTermAndDoubling) {
  Gen gen(44);
  const GrayMap a = gen.bumpy(16, 16);
  MotionStack st;
  for (int sc : {1, 3, 4})
    for (Direction d : kDirections) st.set(sc, d, 1, GrayMap::Zero(32 >> sc, 32 >> sc));
  st.set(1, Direction::Right, 1, a);
  PipelineConfig cfg;
  cfg.center_scales = {1};
  cfg.deltas = {2};
  const Extent grid{16, 16};
  const GrayMap one = dynamic_conspicuity(st, cfg, 1, grid);
  // (right: M+ = a) and (left: M- = a) are the same opponency seen from both ends.
  GrayMap oracle = GrayMap::Zero(16, 16);
  for (Direction d : kDirections) {
    auto [on, off] = motion_feature_maps(st, 1, 3, d, 1);
    oracle += normalize(on) + normalize(off);
  }
  oracle *= 0.5;
  EXPECT_LT((one - oracle).abs().maxCoeff(), 1e-12);
  EXPECT_LT((one - normalize(a)).abs().maxCoeff(), 1e-12);

  cfg.deltas = {2, 3};
  EXPECT_LT((dynamic_conspicuity(st, cfg, 1, grid) - 2 * one).abs().maxCoeff(), 1e-12);
}

TEST(DynamicConspicuity, DriftingDotLocalized) {
  FrameHistory h(2);
  auto frame = [](int x) {
    GrayMap m = GrayMap::Constant(64, 64, 0.2);
    m.block(30, x, 4, 4).setConstant(0.9);
    return build_pyramid(m, 4);
  };
  h.push(frame(30));
  h.push(frame(32));
  const MotionStack st = compute_motion_stack(h, {2, 4}, {1});
  auto [on, off] = motion_feature_maps(st, 2, 4, Direction::Right, 1);
  const GrayMap pos = st.get(2, Direction::Right, 1) - st.get(2, Direction::Left, 1);
  const GrayMap sur = st.get(4, Direction::Left, 1) - st.get(4, Direction::Right, 1);
  EXPECT_TRUE(testing_support::bit_equal(on, (pos - resize_to(sur, Extent{16, 16})).max(0.0)));
  Eigen::Index py, px;
  on.maxCoeff(&py, &px);
  EXPECT_NEAR(px, 8, 1.5);
  EXPECT_NEAR(py, 8, 1.5);
}

TEST(DynamicSaliency, WeightedSum) {
  Gen gen(45);
  const GrayMap m1 = gen.bumpy(20, 20), m3 = gen.bumpy(20, 20);
  const DynamicSaliency ds = combine_dynamic({{1, m1}, {3, m3}}, 0.8, Extent{20, 20});
  EXPECT_LT((ds.map - (normalize(m1) + 0.64 * normalize(m3))).abs().maxCoeff(), 1e-6);
  EXPECT_EQ(ds.taus_used, (std::vector<int>{1, 3}));
  EXPECT_FALSE(ds.warm_up);
  const DynamicSaliency single = combine_dynamic({{1, m1}}, 0.8, Extent{20, 20});
  EXPECT_TRUE(testing_support::bit_equal(single.map, normalize(m1)));
  const DynamicSaliency none = combine_dynamic({}, 0.8, Extent{20, 20});
  EXPECT_TRUE(none.warm_up);
  EXPECT_TRUE((none.map == 0.0).all());
}

TEST(DynamicSaliency, UniformSequenceAndWarmUp) {
  PipelineConfig cfg;
  FrameHistory h(16);
  const Extent grid{16, 16};
  for (int t = 0; t < 5; ++t) {
    h.push(build_pyramid(GrayMap(GrayMap::Constant(64, 64, 0.1 * t)), 6));
    const DynamicSaliency ds = dynamic_saliency(h, cfg, grid);
    EXPECT_TRUE((ds.map == 0.0).all());
    EXPECT_EQ(ds.warm_up, t == 0);
    const std::vector<int> want = t >= 3 ? std::vector<int>{1, 3} : t >= 1 ? std::vector<int>{1} : std::vector<int>{};
    EXPECT_EQ(ds.taus_used, want);
  }
}

// Property: adding a constant to every frame leaves DS unchanged.
TEST(DynamicSaliencyProperty, ConstantOffsetInvariance) {
  Gen gen(46);
  PipelineConfig cfg;
  cfg.tau_set = {1, 3};
  cfg.center_scales = {1};
  cfg.deltas = {2};
  for (int trial = 0; trial < 5; ++trial) {
    FrameHistory a(4), b(4);
    const double offset = gen.uniform(-0.3, 0.3);
    for (int t = 0; t < 4; ++t) {
      const GrayMap m = gen.bumpy(32, 32);
      a.push(build_pyramid(m, 3));
      b.push(build_pyramid(GrayMap(m + offset), 3));
    }
    const GrayMap da = dynamic_saliency(a, cfg, Extent{16, 16}).map, db = dynamic_saliency(b, cfg, Extent{16, 16}).map;
    EXPECT_LT((da - db).abs().maxCoeff(), 1e-9 * std::max(1.0, da.abs().maxCoeff()));
  }
}

TEST(DynamicSaliency, PoolDoesNotChangeBits) {
  Gen gen(47);
  PipelineConfig cfg;
  FrameHistory h(16);
  for (int t = 0; t < 9; ++t) h.push(build_pyramid(gen.bumpy(128, 96, 6), 6));
  ThreadPool pool(3);
  const GrayMap serial = dynamic_saliency(h, cfg, Extent{32, 24}).map;
  EXPECT_TRUE(testing_support::bit_equal(dynamic_saliency(h, cfg, Extent{32, 24}, &pool).map, serial));
  EXPECT_GT(serial.maxCoeff(), 0.0);
}
