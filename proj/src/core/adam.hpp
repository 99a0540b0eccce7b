#pragma once

#include <cstdint>
#include <vector>

#include "core/nn.hpp"
#include "core/tape.hpp"

namespace hhi::core {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a ParamStore. Moment buffers follow the
// store's registration order; steps_taken feeds the bias-correction terms
// and survives checkpointing so resumed runs continue the same trajectory.
class Adam {
 public:
  Adam(AdamConfig cfg, const ParamStore& params);

  // Applies one update from the gradients of `tape`'s latest backward pass.
  // Parameters the pass never reached contribute zero gradients. A non-
  // finite gradient aborts with the parameter's name. lr_scale multiplies
  // the configured learning rate (used by the decay schedule).
  void step(ParamStore& params, Tape& tape, double lr_scale = 1.0);

  const AdamConfig& config() const { return cfg_; }
  std::int64_t steps_taken() const { return steps_; }

  // Checkpoint access: slot i holds {m, v} for parameter i.
  std::vector<std::vector<float>>& moment1() { return m_; }
  std::vector<std::vector<float>>& moment2() { return v_; }
  void restore(std::int64_t steps, std::vector<std::vector<float>> m,
               std::vector<std::vector<float>> v);

 private:
  AdamConfig cfg_;
  std::int64_t steps_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace hhi::core
