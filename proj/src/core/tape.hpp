#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace hhi::core {

// Dynamic reverse-mode tape. Ops append one step per call during the
// forward pass; backward() replays the steps in reverse. A null tape
// pointer in an op call means "inference only": no step is recorded and no
// gradient buffers are touched.
//
// Gradient buffers live on tensor storage, versioned by a global stamp.
// Each backward() takes a fresh stamp, so earlier gradients are invalidated
// without clearing memory, and tensors the pass never reaches correctly
// report zero gradients.
template <class T>
class TapeT {
 public:
  struct Step {
    std::string op;
    std::function<void(TapeT&)> backward;
  };

  void record(std::string op, std::function<void(TapeT&)> backward) {
    steps_.push_back(Step{std::move(op), std::move(backward)});
  }

  size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  std::uint64_t stamp() const { return stamp_; }

  // Seeds d(loss)/d(loss) = 1 and replays the tape. `loss` must be a scalar
  // produced by ops recorded on this tape.
  void backward(const TensorT<T>& loss) {
    if (loss.numel() != 1) {
      throw ConfigError("backward expects a scalar loss, got " + shape_str(loss.shape()));
    }
    stamp_ = next_stamp();
    grad(loss)[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      it->backward(*this);
    }
  }

  // Gradient buffer of `t` under the current stamp, zero-filled on first
  // touch. Backward closures use this both to read an output's adjoint and
  // to accumulate into an input's. Tensor handles are shared references, so
  // a const handle still owns mutable storage.
  T* grad(const TensorT<T>& t) {
    auto& st = *t.storage();
    if (st.grad_stamp != stamp_ || st.grad.size() != st.value.size()) {
      st.grad.assign(st.value.size(), T(0));
      st.grad_stamp = stamp_;
    }
    return st.grad.data();
  }

  // True once the pass has written into t's gradient. Closures skip work
  // for outputs nothing depended on; correctness never requires the check.
  bool has_grad(const TensorT<T>& t) const {
    const auto& st = *t.storage();
    return st.grad_stamp == stamp_ && !st.grad.empty();
  }

 private:
  static std::uint64_t next_stamp() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
  }

  std::vector<Step> steps_;
  std::uint64_t stamp_ = 0;
};

using Tape = TapeT<float>;

}  // namespace hhi::core
