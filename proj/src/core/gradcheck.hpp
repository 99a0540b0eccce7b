#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/nn.hpp"
#include "core/tape.hpp"

namespace hhi::core {

// A differentiable scalar loss exposed two ways: once through the float
// tape (the implementation under test) and once as a plain double-precision
// function of the parameter values (the oracle side). The finite-difference
// oracle runs entirely in 64-bit arithmetic; 32-bit steps would drown the
// comparison in cancellation noise long before a wrong adjoint did.
struct GradCheckProblem {
  // Live float parameters, in a fixed order.
  std::vector<std::string> names;
  std::vector<Tensor> params;
  // Runs the taped forward pass and returns the scalar loss.
  std::function<Tensor(Tape&)> loss_tape;
  // Evaluates the same loss in double given replacement parameter values
  // (same order and sizes as `params`).
  std::function<double(const std::vector<std::vector<double>>&)> loss_double;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::int64_t checked = 0;
};

// Compares tape gradients against central finite differences of
// loss_double. rel = |a - n| / max(|a|, |n|, 1e-3); the floor keeps noise
// on near-zero gradients from registering as relative blowups.
GradCheckReport grad_check(GradCheckProblem& problem, double fd_step = 1e-3);

}  // namespace hhi::core
