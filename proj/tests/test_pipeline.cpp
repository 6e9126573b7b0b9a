#include "bias/pipeline.hpp"

#include "bias/fixation.hpp"
#include "bias/fusion.hpp"
#include "bias/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace bias;
using testing_support::bit_equal;

namespace {

FrameRGB gray(int w, int h) { return FrameRGB::uniform(w, h, 128, 128, 128); }

std::vector<FrameRGB> clip(int n, int w = 256, int h = 256) {
  std::vector<FrameRGB> v;
  for (int i = 0; i < n; ++i) v.push_back(synthetic_frame(w, h, i));
  return v;
}

PipelineConfig with_threads(int t) {
  PipelineConfig c;
  c.threads = t;
  return c;
}

void expect_same(const std::vector<FrameResult>& a, const std::vector<FrameResult>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(bit_equal(a[i].master_map, b[i].master_map)) << i;
    EXPECT_TRUE(bit_equal(a[i].static_map, b[i].static_map)) << i;
    EXPECT_TRUE(bit_equal(a[i].dynamic_map, b[i].dynamic_map)) << i;
    EXPECT_TRUE(bit_equal(a[i].fixation_map, b[i].fixation_map)) << i;
    ASSERT_EQ(a[i].foci.size(), b[i].foci.size()) << i;
    for (std::size_t k = 0; k < a[i].foci.size(); ++k) {
      EXPECT_EQ(a[i].foci[k].mu_x, b[i].foci[k].mu_x);
      EXPECT_EQ(a[i].foci[k].mu_y, b[i].foci[k].mu_y);
      EXPECT_EQ(a[i].foci[k].sigma_x, b[i].foci[k].sigma_x);
      EXPECT_EQ(a[i].foci[k].amplitude, b[i].foci[k].amplitude);
    }
  }
}

}  // namespace

TEST(Pipeline, EmptySourceGivesNoResults) {
  const std::vector<FrameRGB> none;
  EXPECT_TRUE(process_stream(frames_from(none), PipelineConfig{}).empty());
}

TEST(Pipeline, OneResultPerFrameInOrder) {
  const auto frames = clip(6);
  std::vector<long> seen;
  process_stream(frames_from(frames), PipelineConfig{}, [&](FrameResult&& r) { seen.push_back(r.frame_index); }, 1);
  EXPECT_EQ(seen, (std::vector<long>{0, 1, 2, 3, 4, 5}));
}

TEST(Pipeline, OutputsInUnitRangeAtFrameSize) {
  const auto results = process_stream(frames_from(clip(4, 320, 256)), PipelineConfig{});
  for (const auto& r : results) {
    for (const GrayMap* m : {&r.static_map, &r.dynamic_map, &r.master_map, &r.fixation_map}) {
      EXPECT_EQ(extent_of(*m), (Extent{320, 256}));
      EXPECT_GE(m->minCoeff(), 0.0);
      EXPECT_LE(m->maxCoeff(), 1.0);
    }
    EXPECT_EQ(r.motion_warm_up, r.frame_index == 0);
    const auto& t = r.timings;
    for (double s : {t.channels, t.features, t.motion, t.fusion, t.fixation, t.total}) EXPECT_GE(s, 0.0);
    EXPECT_GE(t.total, t.channels + t.features + t.motion + t.fusion + t.fixation - 1e-9);
  }
  EXPECT_TRUE((results[0].dynamic_map == 0.0).all());
  EXPECT_GT(results[3].dynamic_map.maxCoeff(), 0.0);
}

TEST(Pipeline, UniformGrayIsFeatureless) {
  const std::vector<FrameRGB> frames(4, gray(256, 256));
  for (const auto& r : process_stream(frames_from(frames), PipelineConfig{})) {
    EXPECT_TRUE((r.master_map == 0.0).all());
    EXPECT_TRUE((r.fixation_map == 0.0).all());
    EXPECT_TRUE(r.foci.empty());
  }
}

TEST(Pipeline, RedDotPopsOut) {
  std::vector<FrameRGB> frames(5, gray(320, 256));
  for (int i = 2; i < 5; ++i)
    for (int y = 157; y < 163; ++y)
      for (int x = 197; x < 203; ++x) {
        frames[i].r(y, x) = 230;
        frames[i].g(y, x) = 20;
        frames[i].b(y, x) = 20;
      }
  const auto results = process_stream(frames_from(frames), PipelineConfig{});
  for (int i = 2; i < 5; ++i) {
    Eigen::Index y, x;
    results[i].master_map.maxCoeff(&y, &x);
    EXPECT_LE(std::hypot(x - 199.5, y - 159.5), 3.0) << i;
    ASSERT_FALSE(results[i].foci.empty());
    EXPECT_LE(std::hypot(results[i].foci[0].mu_x - 199.5, results[i].foci[0].mu_y - 159.5), 3.0) << i;
  }
}

TEST(Pipeline, DimensionChangeMidStreamFails) {
  StreamState st(PipelineConfig{});
  process_frame(st, gray(256, 256));
  try {
    process_frame(st, gray(288, 256));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(process_frame(st, gray(128, 128)), DimensionError);
}

TEST(Pipeline, SourceErrorCarriesFrameIndex) {
  int calls = 0;
  FrameSource src = [&]() -> std::optional<FrameRGB> {
    if (calls++ == 2) throw IoError("disk on fire");
    return gray(256, 256);
  };
  int delivered = 0;
  try {
    process_stream(src, PipelineConfig{}, [&](FrameResult&&) { ++delivered; });
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("reading frame 2: disk on fire"), std::string::npos) << e.what();
  }
  EXPECT_EQ(delivered, 2);
}

TEST(Pipeline, SinkErrorStopsReader) {
  const auto frames = clip(8);
  int n = 0;
  EXPECT_THROW(process_stream(frames_from(frames), PipelineConfig{},
                              [&](FrameResult&&) {
                                if (++n == 2) throw std::runtime_error("sink full");
                              }),
               std::runtime_error);
}

TEST(Pipeline, InvalidConfigRejected) {
  PipelineConfig cfg;
  cfg.ewma_alpha = 0;
  EXPECT_THROW(StreamState{cfg}, ConfigError);
}

TEST(Pipeline, WithoutGwtaUsesPriorTimesMasterThenEwma) {
  PipelineConfig cfg;
  cfg.enable_gwta = false;
  const auto results = process_stream(frames_from(clip(4)), cfg);
  EwmaState ewma;
  const GrayMap prior = center_prior(256, 256);
  for (const auto& r : results) {
    EXPECT_TRUE(r.foci.empty());
    EXPECT_TRUE(bit_equal(r.fixation_map, ewma_step(ewma, apply_prior(r.master_map, prior), cfg.ewma_alpha)));
  }
}

TEST(Pipeline, AblationSwitchesAreExact) {
  PipelineConfig cfg;
  cfg.enable_ewma = false;
  const auto frames = clip(5);
  const GrayMap prior = center_prior(256, 256);
  for (const auto& r : process_stream(frames_from(frames), cfg))
    EXPECT_TRUE(bit_equal(r.fixation_map, apply_prior(gwta(r.master_map, cfg.gwta).map, prior)));
  cfg.enable_center_prior = false;
  for (const auto& r : process_stream(frames_from(frames), cfg))
    EXPECT_TRUE(bit_equal(r.fixation_map, gwta(r.master_map, cfg.gwta).map));
  cfg.enable_gwta = false;
  for (const auto& r : process_stream(frames_from(frames), cfg)) EXPECT_TRUE(bit_equal(r.fixation_map, r.master_map));

  PipelineConfig stat;
  stat.fusion_weights = {0, 1, 0};
  for (const auto& r : process_stream(frames_from(frames), stat)) {
    // N only rescales, so S is SS rescaled to unit peak.
    EXPECT_LT((r.master_map - r.static_map).abs().maxCoeff(), 1e-12);
  }
}

TEST(Pipeline, WarmUpUsesAvailableOffsetsOnly) {
  PipelineConfig both, first;
  both.tau_set = {1, 3};
  first.tau_set = {1};
  const auto frames = clip(5);
  const auto a = process_stream(frames_from(frames), both), b = process_stream(frames_from(frames), first);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(bit_equal(a[i].dynamic_map, b[i].dynamic_map)) << i;
  EXPECT_FALSE(bit_equal(a[3].dynamic_map, b[3].dynamic_map));
}

TEST(Pipeline, RepeatableAndThreadCountInvariant) {
  const auto frames = clip(20);
  const auto ref = process_stream(frames_from(frames), with_threads(1));
  expect_same(ref, process_stream(frames_from(frames), with_threads(1)));
  for (int t : {2, 4, 8}) expect_same(ref, process_stream(frames_from(frames), with_threads(t)));
}
