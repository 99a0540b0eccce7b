#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace hhi::core {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (std::int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Value buffer plus a lazily materialized gradient buffer. grad_stamp ties
// the gradient to one backward pass; stale gradients read as zero.
template <class T>
struct StorageT {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  std::uint64_t grad_stamp = 0;
};

// Shared handle onto a storage block. Copies alias the same buffer; ops
// always allocate fresh storage for their outputs.
template <class T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(Shape shape)
      : st_(std::make_shared<StorageT<T>>()) {
    st_->shape = std::move(shape);
    st_->value.assign(shape_numel(st_->shape), T(0));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, T v) {
    TensorT t(std::move(shape));
    for (T& x : t.st_->value) x = v;
    return t;
  }

  static TensorT scalar(T v) { return full({1}, v); }

  static TensorT from(Shape shape, std::vector<T> values) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
      throw ConfigError("tensor literal size does not match shape " + shape_str(shape));
    }
    TensorT t;
    t.st_ = std::make_shared<StorageT<T>>();
    t.st_->shape = std::move(shape);
    t.st_->value = std::move(values);
    return t;
  }

  bool defined() const { return st_ != nullptr; }
  const Shape& shape() const { return st_->shape; }
  std::int64_t dim(int i) const { return st_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(st_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(st_->value.size()); }

  T* data() { return st_->value.data(); }
  const T* data() const { return st_->value.data(); }
  std::span<T> values() { return st_->value; }
  std::span<const T> values() const { return st_->value; }

  // Row-major element access for tests and small fixtures.
  T& at(std::initializer_list<std::int64_t> idx) {
    return st_->value[static_cast<size_t>(flat_index(idx))];
  }
  T at(std::initializer_list<std::int64_t> idx) const {
    return st_->value[static_cast<size_t>(flat_index(idx))];
  }

  std::shared_ptr<StorageT<T>>& storage() { return st_; }
  const std::shared_ptr<StorageT<T>>& storage() const { return st_; }
  bool same_storage(const TensorT& other) const { return st_ == other.st_; }

  // Gradient as written by the most recent backward pass with stamp `stamp`;
  // parameters untouched by that pass report zeros.
  std::vector<T> grad_or_zero(std::uint64_t stamp) const {
    if (st_->grad_stamp == stamp && !st_->grad.empty()) return st_->grad;
    return std::vector<T>(st_->value.size(), T(0));
  }

 private:
  std::int64_t flat_index(std::initializer_list<std::int64_t> idx) const {
    const Shape& s = st_->shape;
    if (idx.size() != s.size()) throw ConfigError("index rank mismatch for " + shape_str(s));
    std::int64_t flat = 0;
    size_t i = 0;
    for (std::int64_t v : idx) {
      flat = flat * s[i] + v;
      ++i;
    }
    return flat;
  }

  std::shared_ptr<StorageT<T>> st_;
};

using Tensor = TensorT<float>;

}  // namespace hhi::core
