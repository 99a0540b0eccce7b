#pragma once

#include <cstdint>
#include <vector>

namespace hhi::idd {

struct ScheduleConfig {
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

// Variance schedule and the forward/reverse coefficient tables. Everything
// here is double precision; float rounding happens only where data buffers
// are touched.
struct NoiseSchedule {
  ScheduleConfig cfg;
  // Indexed 1..steps; slot 0 exists so indices match step numbers, with
  // alpha_bar[0] = 1 making the t=1 posterior noiseless.
  std::vector<double> beta, alpha, alpha_bar;

  static NoiseSchedule make(const ScheduleConfig& cfg);

  // x_t = sqrt(alpha_bar_t) * y + sqrt(1 - alpha_bar_t) * eps
  void noising(int t, const float* y, const float* eps, float* x_t, std::int64_t n) const;

  // y_hat = (x_t - sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_bar_t)
  void clean_estimate(int t, const float* x_t, const float* eps_hat, float* y_hat,
                      std::int64_t n) const;

  // One ancestral update: mean = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat)
  // / sqrt(alpha_t), then + sigma_t * z with z already sampled by the caller
  // (z is ignored at t = 1 where sigma is 0).
  void ancestral_step(int t, const float* x_t, const float* eps_hat, const float* z,
                      float* x_prev, std::int64_t n) const;

  double posterior_sigma(int t) const;
};

}  // namespace hhi::idd
