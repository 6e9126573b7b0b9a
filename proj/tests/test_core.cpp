#include "bias/core.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace bias;

namespace {

std::string config_error(PipelineConfig cfg) {
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsAreAcceptedUnchanged) {
  const PipelineConfig cfg;
  const PipelineConfig v = validate_config(cfg);
  EXPECT_EQ(v, cfg);
  EXPECT_EQ(v.fusion_weights, (FusionWeights{1.0, 0.3, 0.3}));
  EXPECT_DOUBLE_EQ(v.ewma_alpha, 0.9);
  EXPECT_DOUBLE_EQ(v.gamma, 0.8);
  EXPECT_EQ(v.center_scales, std::vector<int>{2});
  EXPECT_EQ(v.deltas, std::vector<int>{4});
  EXPECT_EQ(v.tau_set, (std::vector<int>{1, 3, 7, 15}));
  EXPECT_EQ(v.pyramid_levels, 8);
  EXPECT_DOUBLE_EQ(v.gwta.step_mu, 0.1);
  EXPECT_DOUBLE_EQ(v.gwta.step_sigma, 4.0);
  EXPECT_DOUBLE_EQ(v.gwta.lambda_coeff, 0.03);
  EXPECT_EQ(v.gwta.max_steps, 15);
  EXPECT_DOUBLE_EQ(v.gwta.residual_stop, 0.2);
  EXPECT_EQ(v.gwta.max_foci, 12);
}

TEST(Config, ScalePairBeyondDepthIsRejected) {
  PipelineConfig cfg;
  cfg.deltas = {7};
  EXPECT_EQ(config_error(cfg), "c+δ exceeds pyramid depth");
}

TEST(Config, AlphaZeroIsRejected) {
  PipelineConfig cfg;
  cfg.ewma_alpha = 0.0;
  EXPECT_EQ(config_error(cfg), "ewma_alpha out of range");
}

TEST(Config, OtherInvariants) {
  PipelineConfig cfg;
  cfg.fusion_weights = {0, 0, 0};
  EXPECT_EQ(config_error(cfg), "fusion weights all zero");
  cfg = {};
  cfg.fusion_weights = {1, -0.1, 0};
  EXPECT_EQ(config_error(cfg), "fusion weights negative");
  cfg = {};
  cfg.gwta.max_steps = 0;
  EXPECT_EQ(config_error(cfg), "gwta.max_steps must be >= 1");
  cfg = {};
  cfg.gwta.residual_stop = 1.0;
  EXPECT_EQ(config_error(cfg), "gwta.residual_stop out of range");
  cfg = {};
  cfg.gwta.max_foci = 0;
  EXPECT_EQ(config_error(cfg), "gwta.max_foci must be >= 1");
  cfg = {};
  cfg.gamma = 1.5;
  EXPECT_EQ(config_error(cfg), "gamma out of range");
  cfg = {};
  cfg.threads = 0;
  EXPECT_EQ(config_error(cfg), "threads must be positive");
  cfg = {};
  cfg.tau_set = {};
  EXPECT_EQ(config_error(cfg), "tau_set empty");
}

TEST(Config, DerivedScales) {
  PipelineConfig cfg;
  cfg.center_scales = {2, 3, 4};
  cfg.deltas = {3, 4};
  cfg = validate_config(cfg);
  EXPECT_EQ(cfg.accumulation_scale(), 2);
  EXPECT_EQ(cfg.deepest_scale(), 8);
  EXPECT_EQ(cfg.used_scales(), (std::vector<int>{2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(PipelineConfig{}.max_tau(), 15);
}

TEST(Config, ParseAppliesKeysAndKeepsDefaults) {
  std::istringstream in(
      "# ablation\n"
      "center_scales = 2\n"
      "deltas = 1   # single pair\n"
      "tau_set = 1,3,5,7\n"
      "fusion_weights = 0, 1, 0\n"
      "enable_gwta = false\n"
      "gwta.max_foci = 5\n");
  const PipelineConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.deltas, std::vector<int>{1});
  EXPECT_EQ(cfg.tau_set, (std::vector<int>{1, 3, 5, 7}));
  EXPECT_EQ(cfg.fusion_weights, (FusionWeights{0, 1, 0}));
  EXPECT_FALSE(cfg.enable_gwta);
  EXPECT_EQ(cfg.gwta.max_foci, 5);
  EXPECT_DOUBLE_EQ(cfg.ewma_alpha, 0.9);
}

TEST(Config, ParseErrors) {
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream bad_number("gamma = fast\n");
  EXPECT_THROW(parse_config(bad_number), ConfigError);
  std::istringstream no_equals("gamma 0.5\n");
  EXPECT_THROW(parse_config(no_equals), ConfigError);
  std::istringstream invalid("deltas = 9\n");
  EXPECT_THROW(parse_config(invalid), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/bias.cfg"), ConfigError);
}

// Property: serialize then reload reproduces every field.
TEST(ConfigProperty, RoundTrip) {
  testing_support::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    PipelineConfig cfg;
    cfg.pyramid_levels = gen.integer(7, 10);  // deepest c + delta is 4 + 3
    cfg.center_scales = {gen.integer(1, 3)};
    if (gen.coin()) cfg.center_scales.push_back(cfg.center_scales[0] + 1);
    cfg.deltas = {gen.integer(1, 2)};
    if (gen.coin()) cfg.deltas.push_back(3);
    cfg.tau_set = {1, gen.integer(2, 20)};
    cfg.gamma = gen.uniform(0.01, 1.0);
    cfg.fusion_weights = {gen.uniform(0, 2), gen.uniform(0, 2), gen.uniform(0, 2)};
    cfg.ewma_alpha = gen.uniform(0.01, 1.0);
    cfg.enable_gwta = gen.coin();
    cfg.enable_ewma = gen.coin();
    cfg.enable_center_prior = gen.coin();
    cfg.threads = gen.integer(1, 16);
    cfg.gwta.step_mu = gen.uniform(0, 1);
    cfg.gwta.step_sigma = gen.uniform(0, 10);
    cfg.gwta.lambda_coeff = gen.uniform(0, 0.1);
    cfg.gwta.max_steps = gen.integer(1, 40);
    cfg.gwta.residual_stop = gen.uniform(0.01, 0.99);
    cfg.gwta.max_foci = gen.integer(1, 20);
    cfg.gwta.sigma_min = gen.uniform(0.5, 4);
    cfg.gwta.sigma_init_frac = gen.uniform(0.01, 0.1);
    cfg.gwta.sigma_max_frac = gen.uniform(0.2, 0.9);
    cfg = validate_config(cfg);
    std::istringstream in(to_string(cfg));
    ASSERT_EQ(parse_config(in), cfg) << "trial " << trial << "\n" << to_string(cfg);
  }
}

TEST(Frame, FromRgb24AndValidation) {
  const std::uint8_t px[] = {100, 50, 200, 0, 0, 0, 255, 255, 255, 1, 2, 3};
  const FrameRGB f = FrameRGB::from_rgb24(px, 2, 2);
  EXPECT_EQ(f.extent(), (Extent{2, 2}));
  EXPECT_EQ(f.r(0, 0), 100);
  EXPECT_EQ(f.g(0, 0), 50);
  EXPECT_EQ(f.b(0, 0), 200);
  EXPECT_EQ(f.b(1, 1), 3);
  EXPECT_NO_THROW(validate_frame(f, 1));
  EXPECT_THROW(validate_frame(f, 2), DimensionError);

  FrameRGB bad = FrameRGB::uniform(8, 8, 10, 10, 10);
  bad.g(3, 3) = 256;
  EXPECT_THROW(validate_frame(bad, 1), DimensionError);
  bad.g(3, 3) = std::nan("");
  EXPECT_THROW(validate_frame(bad, 1), DimensionError);
  FrameRGB ragged = FrameRGB::uniform(8, 8, 1, 2, 3);
  ragged.b = GrayMap::Zero(7, 8);
  EXPECT_THROW(validate_frame(ragged, 1), DimensionError);
}
