#pragma once

// Fixation prediction: greedy Gaussian winner-take-all fitting on the master
// saliency map, a multiplicative center prior, and temporal EWMA smoothing.

#include "bias/core.hpp"

#include <vector>

namespace bias {

/// One focus of attention: a diagonal Gaussian in pixel coordinates.
struct GaussianFocus {
  double mu_x = 0.0, mu_y = 0.0;
  double sigma_x = 1.0, sigma_y = 1.0;
  double amplitude = 0.0;
  int steps_used = 0;
};

/// Sigma bounds and regularizer resolved for a map of a given width.
struct FocusLimits {
  double sigma_init, sigma_min, sigma_max, lambda;
  static FocusLimits resolve(const GwtaConfig& cfg, int width);
};

/// Objective sum_x S(x) G(x; mu, sigma) with G = exp(-q/2) / sqrt(2 pi |Sigma|),
/// summed over the whole map.
double focus_objective(const GrayMap& s, double mu_x, double mu_y, double sigma_x, double sigma_y);

/// focus_objective plus the log-barrier lambda (ln sigma_x + ln sigma_y) whose
/// gradient is the lambda / sigma regularizer of the sigma update.
double regularized_focus_objective(const GrayMap& s, double mu_x, double mu_y, double sigma_x, double sigma_y,
                                   double lambda);

struct FocusGradient {
  double value = 0.0;  // objective inside the window
  double d_mu_x = 0.0, d_mu_y = 0.0, d_sigma_x = 0.0, d_sigma_y = 0.0;
};

/// Closed-form gradient of focus_objective restricted to a +-`window_sigmas`
/// sigma box around mu. A non-positive window means the whole map.
FocusGradient focus_gradient(const GrayMap& s, double mu_x, double mu_y, double sigma_x, double sigma_y,
                             double window_sigmas = 4.0);

/// Starts at the residual argmax (first in raster order) with sigma_init and
/// takes max_steps joint gradient-ascent steps:
///   mu      += step_mu * dC/dmu
///   sigma_i += step_sigma * (dC/dsigma_i + lambda / sigma_i)
/// with sigma clamped to its bounds and mu kept inside the map. The amplitude
/// is the residual sampled bilinearly at the final mu.
GaussianFocus fit_focus(const GrayMap& residual, const GwtaConfig& cfg);

/// Unnormalized Gaussian bump amplitude * exp(-q/2) for one focus.
GrayMap render_focus(const GaussianFocus& f, Extent extent);

struct GwtaResult {
  std::vector<GaussianFocus> foci;
  /// sum_i amplitude_i exp(-q_i/2), saturated at 1.
  GrayMap map;
};

/// Greedy fitting: fit on the residual, subtract the fitted bump (clamping
/// at zero), repeat until the residual maximum drops below residual_stop or
/// max_foci foci exist. A zero map yields no foci. Each amplitude is capped
/// at the previous one, so they never increase in fit order.
GwtaResult gwta(const GrayMap& s, const GwtaConfig& cfg);

/// Anisotropic Gaussian centered at (W/2, H/2) with sigmas (W/3, H/3); 1 at the center.
GrayMap center_prior(int width, int height);

GrayMap apply_prior(const GrayMap& fixation, const GrayMap& prior);

struct EwmaState {
  GrayMap smoothed;
  bool initialized = false;
};

/// First call copies `f`; later calls blend alpha * f + (1 - alpha) * previous.
const GrayMap& ewma_step(EwmaState& state, const GrayMap& f, double alpha);

}  // namespace bias
