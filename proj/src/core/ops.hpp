#pragma once

#include <cstdint>
#include <vector>

#include "core/tape.hpp"
#include "core/tensor.hpp"

// Differentiable op library. Every op allocates a fresh output tensor,
// validates the result for NaN/Inf (raising NumericError with the op name),
// and, when a tape is supplied, records a backward step. Instantiated for
// float (production path, SIMD-dispatched kernels) and double (used by the
// finite-difference oracle in gradient checking).

namespace hhi::core::ops {

// Elementwise with numpy-style right-aligned broadcasting of b onto a.
template <class T>
TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);
template <class T>
TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);
template <class T>
TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <class T>
TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& a, double s);

template <class T>
TensorT<T> silu(TapeT<T>* tape, const TensorT<T>& x);
template <class T>
TensorT<T> sin_op(TapeT<T>* tape, const TensorT<T>& x);

template <class T>
TensorT<T> softmax_lastdim(TapeT<T>* tape, const TensorT<T>& x);

// Normalizes over the last dimension. gain/bias have that dimension's shape.
template <class T>
TensorT<T> layer_norm(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& gain,
                      const TensorT<T>& bias, double eps = 1e-5);

// x[..., in] * w[out, in]^T + b[out]; pass a default-constructed b to skip
// the bias. Leading dimensions are preserved.
template <class T>
TensorT<T> linear(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b);

// x[batch, c_in, len], w[c_out, c_in], b[c_out] -> [batch, c_out, len].
// Kernel size is 1 by design: time mixing happens in attention, not here.
template <class T>
TensorT<T> conv1d_pointwise(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w,
                            const TensorT<T>& b);

template <class T>
TensorT<T> matmul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

template <class T>
struct MhaWeightsT {
  TensorT<T> wq, bq, wk, bk, wv, bv, wo, bo;
};
using MhaWeights = MhaWeightsT<float>;

// Scaled dot-product attention over already-projected q/k/v [n, tokens, c],
// heads stacked in the channel dim. If attn is non-null it receives a copy
// of the post-softmax weights [n, heads, tokens, tokens] (no gradient).
template <class T>
TensorT<T> attention_core(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                          const TensorT<T>& v, int heads, TensorT<T>* attn = nullptr);

// Full block: q/k/v projections, attention_core, output projection.
template <class T>
TensorT<T> multi_head_attention(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                                const TensorT<T>& v, int heads, const MhaWeightsT<T>& w,
                                TensorT<T>* attn = nullptr);

template <class T>
TensorT<T> reshape(TapeT<T>* tape, const TensorT<T>& x, Shape shape);
template <class T>
TensorT<T> permute(TapeT<T>* tape, const TensorT<T>& x, std::vector<int> dims);
template <class T>
TensorT<T> slice_axis(TapeT<T>* tape, const TensorT<T>& x, int axis, std::int64_t lo,
                      std::int64_t hi);

template <class T>
TensorT<T> sum_all(TapeT<T>* tape, const TensorT<T>& x);
template <class T>
TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& x);
// mean((a - b)^2) over all elements.
template <class T>
TensorT<T> mse(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b);

// Throws NumericError naming `op` if t contains NaN or Inf.
template <class T>
void ensure_finite(const TensorT<T>& t, const char* op);

}  // namespace hhi::core::ops
