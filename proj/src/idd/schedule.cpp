#include "idd/schedule.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace hhi::idd {

NoiseSchedule NoiseSchedule::make(const ScheduleConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("diffusion needs at least one step");
  if (!(cfg.beta_start > 0.0) || !(cfg.beta_end < 1.0) || cfg.beta_start > cfg.beta_end)
    throw ConfigError("beta range must satisfy 0 < start <= end < 1");
  NoiseSchedule s;
  s.cfg = cfg;
  s.beta.assign(cfg.steps + 1, 0.0);
  s.alpha.assign(cfg.steps + 1, 1.0);
  s.alpha_bar.assign(cfg.steps + 1, 1.0);
  for (int t = 1; t <= cfg.steps; ++t) {
    double frac = cfg.steps == 1 ? 0.0 : static_cast<double>(t - 1) / (cfg.steps - 1);
    s.beta[t] = cfg.beta_start + (cfg.beta_end - cfg.beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

void NoiseSchedule::noising(int t, const float* y, const float* eps, float* x_t,
                            std::int64_t n) const {
  const float a = static_cast<float>(std::sqrt(alpha_bar[t]));
  const float b = static_cast<float>(std::sqrt(1.0 - alpha_bar[t]));
  for (std::int64_t i = 0; i < n; ++i) x_t[i] = a * y[i] + b * eps[i];
}

void NoiseSchedule::clean_estimate(int t, const float* x_t, const float* eps_hat,
                                   float* y_hat, std::int64_t n) const {
  const float b = static_cast<float>(std::sqrt(1.0 - alpha_bar[t]));
  const float inv_a = static_cast<float>(1.0 / std::sqrt(alpha_bar[t]));
  for (std::int64_t i = 0; i < n; ++i) y_hat[i] = (x_t[i] - b * eps_hat[i]) * inv_a;
}

void NoiseSchedule::ancestral_step(int t, const float* x_t, const float* eps_hat,
                                   const float* z, float* x_prev, std::int64_t n) const {
  const float coef = static_cast<float>(beta[t] / std::sqrt(1.0 - alpha_bar[t]));
  const float inv_sa = static_cast<float>(1.0 / std::sqrt(alpha[t]));
  const float sigma = static_cast<float>(posterior_sigma(t));
  if (t == 1 || sigma == 0.0f) {
    for (std::int64_t i = 0; i < n; ++i) x_prev[i] = (x_t[i] - coef * eps_hat[i]) * inv_sa;
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      x_prev[i] = (x_t[i] - coef * eps_hat[i]) * inv_sa + sigma * z[i];
  }
}

double NoiseSchedule::posterior_sigma(int t) const {
  // Variance of q(x_{t-1} | x_t, y); alpha_bar[0] = 1 zeroes it at t = 1.
  double var = (1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t]) * beta[t];
  return std::sqrt(var);
}

}  // namespace hhi::idd
