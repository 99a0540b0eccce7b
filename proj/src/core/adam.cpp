#include "core/adam.hpp"

#include <cmath>

#include "core/kernels.hpp"

namespace hhi::core {

Adam::Adam(AdamConfig cfg, const ParamStore& params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& t : params.tensors) {
    m_.emplace_back(static_cast<size_t>(t.numel()), 0.0f);
    v_.emplace_back(static_cast<size_t>(t.numel()), 0.0f);
  }
}

void Adam::restore(std::int64_t steps, std::vector<std::vector<float>> m,
                   std::vector<std::vector<float>> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ConfigError("optimizer state does not match parameter count");
  }
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size()) {
      throw ConfigError("optimizer state shape mismatch at slot " + std::to_string(i));
    }
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

void Adam::step(ParamStore& params, Tape& tape, double lr_scale) {
  if (params.size() != m_.size()) {
    throw ConfigError("optimizer was built for a different parameter set");
  }
  ++steps_;
  float bc1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_)));
  float bc2 = static_cast<float>(1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_)));
  float lr = static_cast<float>(cfg_.lr * lr_scale);
  const auto& table = kern::table();
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.tensors[i];
    std::vector<float> grad = p.grad_or_zero(tape.stamp());
    if (!table.all_finite(grad.data(), static_cast<std::int64_t>(grad.size()))) {
      throw NumericError("non-finite gradient for parameter '" + params.names[i] + "'");
    }
    table.adam_update(p.data(), grad.data(), m_[i].data(), v_[i].data(), p.numel(), lr,
                      static_cast<float>(cfg_.beta1), static_cast<float>(cfg_.beta2),
                      static_cast<float>(cfg_.eps), bc1, bc2);
  }
}

}  // namespace hhi::core
