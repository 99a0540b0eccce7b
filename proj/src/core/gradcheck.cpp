#include "core/gradcheck.hpp"

#include <cmath>

namespace hhi::core {

GradCheckReport grad_check(GradCheckProblem& problem, double fd_step) {
  Tape tape;
  Tensor loss = problem.loss_tape(tape);
  tape.backward(loss);

  std::vector<std::vector<float>> grads;
  grads.reserve(problem.params.size());
  for (const auto& p : problem.params) grads.push_back(p.grad_or_zero(tape.stamp()));

  // Baseline double copy of every parameter; perturb one scalar at a time.
  std::vector<std::vector<double>> values(problem.params.size());
  for (size_t i = 0; i < problem.params.size(); ++i) {
    const Tensor& p = problem.params[i];
    values[i].assign(p.data(), p.data() + p.numel());
  }

  GradCheckReport report;
  for (size_t i = 0; i < problem.params.size(); ++i) {
    for (size_t j = 0; j < values[i].size(); ++j) {
      double keep = values[i][j];
      values[i][j] = keep + fd_step;
      double up = problem.loss_double(values);
      values[i][j] = keep - fd_step;
      double down = problem.loss_double(values);
      values[i][j] = keep;

      double numeric = (up - down) / (2.0 * fd_step);
      double analytic = static_cast<double>(grads[i][j]);
      double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
      double rel = std::fabs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = problem.names[i];
        report.worst_index = static_cast<std::int64_t>(j);
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace hhi::core
