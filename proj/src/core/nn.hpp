#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace hhi::core {

// Ordered, name-addressed parameter registry. Order is construction order
// and defines checkpoint layout and optimizer slot order.
template <class T>
struct ParamStoreT {
  std::vector<std::string> names;
  std::vector<TensorT<T>> tensors;

  TensorT<T>& add(const std::string& name, TensorT<T> t) {
    for (const auto& n : names) {
      if (n == name) throw ConfigError("duplicate parameter name: " + name);
    }
    names.push_back(name);
    tensors.push_back(std::move(t));
    return tensors.back();
  }

  TensorT<T>* find(const std::string& name) {
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return &tensors[i];
    }
    return nullptr;
  }

  std::int64_t total_params() const {
    std::int64_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }

  size_t size() const { return tensors.size(); }
};

using ParamStore = ParamStoreT<float>;

// Uniform(-1/sqrt(in), 1/sqrt(in)) weight with the stream keyed by
// (seed, "init/<name>") so initialization is independent of registration
// order elsewhere in the model.
Tensor init_linear_weight(std::uint64_t seed, const std::string& name, std::int64_t out,
                          std::int64_t in);
Tensor init_zeros(Shape shape);
Tensor init_ones(Shape shape);
Tensor init_normal(std::uint64_t seed, const std::string& name, Shape shape, float stddev);

// Fixed sinusoidal table [positions, dim]: even channels sine, odd cosine,
// wavelengths geometric from 2*pi to 10000*2*pi.
Tensor sinusoidal_table(std::int64_t positions, std::int64_t dim);

// Same encoding evaluated at a single (possibly non-integer) position.
std::vector<float> sinusoidal_embedding(double position, std::int64_t dim);

}  // namespace hhi::core
