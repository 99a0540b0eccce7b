#include "core/nn.hpp"

#include <cmath>

namespace hhi::core {

Tensor init_linear_weight(std::uint64_t seed, const std::string& name, std::int64_t out,
                          std::int64_t in) {
  Tensor w({out, in});
  float bound = 1.0f / std::sqrt(static_cast<float>(in));
  RngStream rng(seed, "init/" + name);
  rng.fill_uniform(w.values(), -bound, bound);
  return w;
}

Tensor init_zeros(Shape shape) { return Tensor::zeros(std::move(shape)); }

Tensor init_ones(Shape shape) { return Tensor::full(std::move(shape), 1.0f); }

Tensor init_normal(std::uint64_t seed, const std::string& name, Shape shape, float stddev) {
  Tensor t(std::move(shape));
  RngStream rng(seed, "init/" + name);
  rng.fill_normal(t.values(), 0.0f, stddev);
  return t;
}

std::vector<float> sinusoidal_embedding(double position, std::int64_t dim) {
  std::vector<float> out(static_cast<size_t>(dim));
  std::int64_t half = dim / 2;
  for (std::int64_t i = 0; i < half; ++i) {
    double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    out[static_cast<size_t>(2 * i)] = static_cast<float>(std::sin(position * freq));
    out[static_cast<size_t>(2 * i + 1)] = static_cast<float>(std::cos(position * freq));
  }
  if (dim % 2 == 1) out[static_cast<size_t>(dim - 1)] = 0.0f;
  return out;
}

Tensor sinusoidal_table(std::int64_t positions, std::int64_t dim) {
  Tensor t({positions, dim});
  for (std::int64_t p = 0; p < positions; ++p) {
    std::vector<float> row = sinusoidal_embedding(static_cast<double>(p), dim);
    for (std::int64_t c = 0; c < dim; ++c) t.at({p, c}) = row[static_cast<size_t>(c)];
  }
  return t;
}

}  // namespace hhi::core
