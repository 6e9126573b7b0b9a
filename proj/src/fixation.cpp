#include "bias/fixation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bias {

FocusLimits FocusLimits::resolve(const GwtaConfig& cfg, int width) {
  FocusLimits l{};
  l.sigma_min = cfg.sigma_min;
  l.sigma_max = std::max(cfg.sigma_max_frac * width, l.sigma_min);
  l.sigma_init = std::clamp(cfg.sigma_init_frac * width, l.sigma_min, l.sigma_max);
  l.lambda = cfg.lambda_coeff * std::sqrt(static_cast<double>(width));
  return l;
}

namespace {

double gauss_norm(double sx, double sy) { return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sx * sy); }

Eigen::ArrayXd axis_profile(int n, double mu, double sigma) {
  Eigen::ArrayXd d = Eigen::ArrayXd::LinSpaced(n, 0.0, n - 1.0) - mu;
  return (-0.5 * d.square() / (sigma * sigma)).exp();
}

double sample_bilinear(const GrayMap& m, double x, double y) {
  const int w = static_cast<int>(m.cols()), h = static_cast<int>(m.rows());
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = m(y0, x0) + fx * (m(y0, x1) - m(y0, x0));
  const double bot = m(y1, x0) + fx * (m(y1, x1) - m(y1, x0));
  return top + fy * (bot - top);
}

}  // namespace

double focus_objective(const GrayMap& s, double mu_x, double mu_y, double sigma_x, double sigma_y) {
  return focus_gradient(s, mu_x, mu_y, sigma_x, sigma_y, 0.0).value;
}

double regularized_focus_objective(const GrayMap& s, double mu_x, double mu_y, double sigma_x, double sigma_y,
                                   double lambda) {
  return focus_objective(s, mu_x, mu_y, sigma_x, sigma_y) + lambda * (std::log(sigma_x) + std::log(sigma_y));
}

FocusGradient focus_gradient(const GrayMap& s, double mu_x, double mu_y, double sx, double sy, double window) {
  const int w = static_cast<int>(s.cols()), h = static_cast<int>(s.rows());
  int x0 = 0, x1 = w - 1, y0 = 0, y1 = h - 1;
  if (window > 0.0) {
    x0 = std::max(0, static_cast<int>(std::floor(mu_x - window * sx)));
    x1 = std::min(w - 1, static_cast<int>(std::ceil(mu_x + window * sx)));
    y0 = std::max(0, static_cast<int>(std::floor(mu_y - window * sy)));
    y1 = std::min(h - 1, static_cast<int>(std::ceil(mu_y + window * sy)));
  }
  FocusGradient g;
  if (x0 > x1 || y0 > y1) return g;
  const int nx = x1 - x0 + 1;
  // Column moments v_k(x) = sum_y S(x, y) ey(y) dy^k, then weighted along x.
  using Row = Eigen::Array<double, 1, Eigen::Dynamic>;
  Row v0 = Row::Zero(nx), v1 = Row::Zero(nx), v2 = Row::Zero(nx);
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - mu_y;
    const double ey = std::exp(-0.5 * dy * dy / (sy * sy));
    const auto row = s.row(y).segment(x0, nx);
    v0 += ey * row;
    v1 += (ey * dy) * row;
    v2 += (ey * dy * dy) * row;
  }
  Row ex(nx), ex1(nx), ex2(nx);
  for (int i = 0; i < nx; ++i) {
    const double dx = x0 + i - mu_x;
    ex[i] = std::exp(-0.5 * dx * dx / (sx * sx));
    ex1[i] = ex[i] * dx;
    ex2[i] = ex1[i] * dx;
  }
  const double c0 = (v0 * ex).sum(), cx = (v0 * ex1).sum(), cxx = (v0 * ex2).sum();
  const double cy = (v1 * ex).sum(), cyy = (v2 * ex).sum();
  const double a = gauss_norm(sx, sy);
  g.value = a * c0;
  g.d_mu_x = a * cx / (sx * sx);
  g.d_mu_y = a * cy / (sy * sy);
  g.d_sigma_x = a * cxx / (sx * sx * sx) - g.value / sx;
  g.d_sigma_y = a * cyy / (sy * sy * sy) - g.value / sy;
  return g;
}

namespace {

struct Peak {
  int x = 0, y = 0;
  double value = 0.0;
};

// Raster-order argmax: first occurrence wins ties.
Peak find_peak(const GrayMap& m) {
  Peak p{0, 0, m(0, 0)};
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x)
      if (m(y, x) > p.value) p = {x, y, m(y, x)};
  return p;
}

GaussianFocus fit_from(const GrayMap& residual, const GwtaConfig& cfg, Peak start) {
  const int w = static_cast<int>(residual.cols()), h = static_cast<int>(residual.rows());
  if (!(start.value > 0.0)) throw Error("cannot fit a focus on a zero residual map");
  const FocusLimits lim = FocusLimits::resolve(cfg, w);
  GaussianFocus f;
  f.mu_x = start.x;
  f.mu_y = start.y;
  f.sigma_x = f.sigma_y = lim.sigma_init;
  for (int n = 0; n < cfg.max_steps; ++n) {
    const FocusGradient g = focus_gradient(residual, f.mu_x, f.mu_y, f.sigma_x, f.sigma_y);
    f.mu_x = std::clamp(f.mu_x + cfg.step_mu * g.d_mu_x, 0.0, w - 1.0);
    f.mu_y = std::clamp(f.mu_y + cfg.step_mu * g.d_mu_y, 0.0, h - 1.0);
    f.sigma_x = std::clamp(f.sigma_x + cfg.step_sigma * (g.d_sigma_x + lim.lambda / f.sigma_x), lim.sigma_min,
                           lim.sigma_max);
    f.sigma_y = std::clamp(f.sigma_y + cfg.step_sigma * (g.d_sigma_y + lim.lambda / f.sigma_y), lim.sigma_min,
                           lim.sigma_max);
    f.steps_used = n + 1;
  }
  f.amplitude = std::max(0.0, sample_bilinear(residual, f.mu_x, f.mu_y));
  return f;
}

}  // namespace

GaussianFocus fit_focus(const GrayMap& residual, const GwtaConfig& cfg) {
  if (residual.size() == 0) throw DimensionError("cannot fit a focus on an empty map");
  return fit_from(residual, cfg, find_peak(residual));
}

GrayMap render_focus(const GaussianFocus& f, Extent e) {
  const Eigen::ArrayXd gx = axis_profile(e.width, f.mu_x, f.sigma_x);
  const Eigen::ArrayXd gy = axis_profile(e.height, f.mu_y, f.sigma_y);
  return f.amplitude * (gy.matrix() * gx.matrix().transpose()).array();
}

GwtaResult gwta(const GrayMap& s, const GwtaConfig& cfg) {
  const Extent e = extent_of(s);
  GwtaResult out;
  out.map = GrayMap::Zero(e.height, e.width);
  if (s.size() == 0 || !(s.maxCoeff() > 0.0)) return out;
  GrayMap residual = s;
  Peak peak = find_peak(residual);
  while (static_cast<int>(out.foci.size()) < cfg.max_foci) {
    GaussianFocus f = fit_from(residual, cfg, peak);
    // A fit that drifted off an earlier peak leaves it partly standing, and
    // the next fit could then sample higher. Keep amplitudes in fit order.
    if (!out.foci.empty()) f.amplitude = std::min(f.amplitude, out.foci.back().amplitude);
    out.foci.push_back(f);
    // Subtract the bump, add it to the output and find the next peak in one
    // sweep; the bump values equal render_focus(f, e).
    const Eigen::ArrayXd gx = axis_profile(e.width, f.mu_x, f.sigma_x);
    const Eigen::ArrayXd gy = axis_profile(e.height, f.mu_y, f.sigma_y);
    peak = {0, 0, -1.0};
    Eigen::Array<double, 1, Eigen::Dynamic> bump(e.width);
    for (int y = 0; y < e.height; ++y) {
      bump = f.amplitude * (gy[y] * gx.transpose());
      auto res = residual.row(y);
      res = (res - bump).max(0.0);
      out.map.row(y) += bump;
      const double row_max = res.maxCoeff();
      if (row_max > peak.value) {
        int x = 0;
        while (res[x] != row_max) ++x;
        peak = {x, y, row_max};
      }
    }
    if (!(peak.value >= cfg.residual_stop)) break;
  }
  out.map = out.map.min(1.0);
  return out;
}

GrayMap center_prior(int width, int height) {
  const Eigen::ArrayXd gx = axis_profile(width, width / 2.0, width / 3.0);
  const Eigen::ArrayXd gy = axis_profile(height, height / 2.0, height / 3.0);
  return (gy.matrix() * gx.matrix().transpose()).array();
}

GrayMap apply_prior(const GrayMap& fixation, const GrayMap& prior) {
  if (extent_of(fixation) != extent_of(prior)) throw DimensionError("prior and fixation map differ in size");
  return fixation * prior;
}

const GrayMap& ewma_step(EwmaState& state, const GrayMap& f, double alpha) {
  if (!state.initialized) {
    state.smoothed = f;
    state.initialized = true;
    return state.smoothed;
  }
  if (extent_of(state.smoothed) != extent_of(f)) throw DimensionError("EWMA input changed size");
  // Incremental form keeps a constant input an exact fixed point; alpha = 1
  // is a plain copy, which the incremental form only approximates.
  if (alpha == 1.0)
    state.smoothed = f;
  else
    state.smoothed += alpha * (f - state.smoothed);
  return state.smoothed;
}

}  // namespace bias
