#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <utility>

#include "core/kernels.hpp"
#include "core/parallel.hpp"

namespace hhi::core::ops {
namespace {

// Kernel shim: float goes through the runtime-dispatched table, any other
// scalar type uses the templated reference loops.
template <class T>
struct K {
  static void gemm_nn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                      bool acc) {
    kern::gemm_nn_ref<T>(a, b, c, m, k, n, acc);
  }
  static void gemm_nt(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                      bool acc) {
    kern::gemm_nt_ref<T>(a, b, c, m, k, n, acc);
  }
  static void gemm_tn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                      bool acc) {
    kern::gemm_tn_ref<T>(a, b, c, m, k, n, acc);
  }
  static void axpy(T alpha, const T* x, T* y, std::int64_t n) { kern::axpy_ref<T>(alpha, x, y, n); }
  static void scale(const T* x, T alpha, T* y, std::int64_t n) { kern::scale_ref<T>(x, alpha, y, n); }
  static void ew_add(const T* a, const T* b, T* c, std::int64_t n) { kern::ew_add_ref<T>(a, b, c, n); }
  static void ew_sub(const T* a, const T* b, T* c, std::int64_t n) { kern::ew_sub_ref<T>(a, b, c, n); }
  static void ew_mul(const T* a, const T* b, T* c, std::int64_t n) { kern::ew_mul_ref<T>(a, b, c, n); }
  static void ew_mul_acc(const T* a, const T* b, T* c, std::int64_t n) {
    kern::ew_mul_acc_ref<T>(a, b, c, n);
  }
  static bool all_finite(const T* x, std::int64_t n) { return kern::all_finite_ref<T>(x, n); }
  static double reduce_sum(const T* x, std::int64_t n) { return kern::reduce_sum_ref<T>(x, n); }
};

template <>
struct K<float> {
  static void gemm_nn(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                      std::int64_t n, bool acc) {
    kern::table().gemm_nn(a, b, c, m, k, n, acc);
  }
  static void gemm_nt(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                      std::int64_t n, bool acc) {
    kern::table().gemm_nt(a, b, c, m, k, n, acc);
  }
  static void gemm_tn(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                      std::int64_t n, bool acc) {
    kern::table().gemm_tn(a, b, c, m, k, n, acc);
  }
  static void axpy(float alpha, const float* x, float* y, std::int64_t n) {
    kern::table().axpy(alpha, x, y, n);
  }
  static void scale(const float* x, float alpha, float* y, std::int64_t n) {
    kern::table().scale(x, alpha, y, n);
  }
  static void ew_add(const float* a, const float* b, float* c, std::int64_t n) {
    kern::table().ew_add(a, b, c, n);
  }
  static void ew_sub(const float* a, const float* b, float* c, std::int64_t n) {
    kern::table().ew_sub(a, b, c, n);
  }
  static void ew_mul(const float* a, const float* b, float* c, std::int64_t n) {
    kern::table().ew_mul(a, b, c, n);
  }
  static void ew_mul_acc(const float* a, const float* b, float* c, std::int64_t n) {
    kern::table().ew_mul_acc(a, b, c, n);
  }
  static bool all_finite(const float* x, std::int64_t n) { return kern::table().all_finite(x, n); }
  static double reduce_sum(const float* x, std::int64_t n) { return kern::table().reduce_sum(x, n); }
};

// Row-parallel gemm_nn; chunks write disjoint C rows, so the result is
// bitwise identical for any thread count.
template <class T>
void gemm_nn_rows(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                  bool acc) {
  std::int64_t grain = std::max<std::int64_t>(1, 65536 / std::max<std::int64_t>(1, k * n));
  parallel_for(m, grain, [&](std::int64_t lo, std::int64_t hi) {
    K<T>::gemm_nn(a + lo * k, b, c + lo * n, hi - lo, k, n, acc);
  });
}

template <class T>
void check_shapes_equal(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
}

template <class T>
void bwd_finite(TapeT<T>& tp, const TensorT<T>& t, const char* op) {
  if (tp.has_grad(t)) {
    const auto& g = t.storage()->grad;
    if (!K<T>::all_finite(g.data(), static_cast<std::int64_t>(g.size()))) {
      throw NumericError(std::string(op) + " backward produced NaN/Inf");
    }
  }
}

// Broadcast plan for elementwise ops: b is broadcast onto a, right-aligned.
// The layout splits a into `outer` segments of length `seg`, where over a
// segment the corresponding b values are a contiguous run (or a run reused
// across segments). bstride[d] is b's step, 0 on broadcast dims.
struct BPlan {
  std::int64_t outer = 1;
  std::int64_t seg = 1;
  std::vector<std::int64_t> odims;
  std::vector<std::int64_t> bstride;
};

template <class T>
BPlan make_bplan(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (bs.size() > as.size()) {
    for (size_t i = 0; i + as.size() < bs.size(); ++i) {
      if (bs[i] != 1) {
        throw ConfigError(std::string(op) + ": cannot broadcast " + shape_str(bs) + " onto " +
                          shape_str(as));
      }
    }
  }
  int ra = static_cast<int>(as.size());
  int rb = static_cast<int>(bs.size());
  auto bdim = [&](int ai) -> std::int64_t {
    int bi = ai - (ra - rb);
    return bi >= 0 ? bs[bi] : 1;
  };
  for (int i = 0; i < ra; ++i) {
    std::int64_t bd = bdim(i);
    if (bd != 1 && bd != as[i]) {
      throw ConfigError(std::string(op) + ": cannot broadcast " + shape_str(bs) + " onto " +
                        shape_str(as));
    }
  }

  BPlan plan;
  int split = ra;
  while (split > 0 && bdim(split - 1) == as[split - 1]) {
    plan.seg *= as[split - 1];
    --split;
  }
  // b strides over its own (right-aligned) layout for the outer dims.
  std::int64_t running = plan.seg;
  std::vector<std::int64_t> stride_at(ra, 0);
  for (int i = split - 1; i >= 0; --i) {
    std::int64_t bd = bdim(i);
    stride_at[i] = (bd == 1) ? 0 : running;
    running *= bd;
  }
  for (int i = 0; i < split; ++i) {
    plan.odims.push_back(as[i]);
    plan.bstride.push_back(stride_at[i]);
    plan.outer *= as[i];
  }
  return plan;
}

// Calls fn(a_offset, b_offset) for each segment in order.
template <class Fn>
void for_each_segment(const BPlan& plan, Fn&& fn) {
  std::vector<std::int64_t> idx(plan.odims.size(), 0);
  std::int64_t aoff = 0;
  std::int64_t boff = 0;
  for (std::int64_t o = 0; o < plan.outer; ++o) {
    fn(aoff, boff);
    aoff += plan.seg;
    for (int d = static_cast<int>(plan.odims.size()) - 1; d >= 0; --d) {
      boff += plan.bstride[d];
      if (++idx[d] < plan.odims[d]) break;
      boff -= plan.bstride[d] * plan.odims[d];
      idx[d] = 0;
    }
  }
}

template <class T>
void softmax_rows(T* x, std::int64_t rows, std::int64_t n) {
  for (std::int64_t r = 0; r < rows; ++r) {
    T* row = x + r * n;
    T mx = row[0];
    for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      row[i] = std::exp(row[i] - mx);
      sum += static_cast<double>(row[i]);
    }
    T inv = static_cast<T>(1.0 / sum);
    for (std::int64_t i = 0; i < n; ++i) row[i] *= inv;
  }
}

// dS = P * (dP - rowdot(dP, P)), written in place over dp.
template <class T>
void softmax_backward_rows(const T* p, T* dp, std::int64_t rows, std::int64_t n) {
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* prow = p + r * n;
    T* drow = dp + r * n;
    double dot = 0.0;
    for (std::int64_t i = 0; i < n; ++i) dot += static_cast<double>(drow[i]) * prow[i];
    T d = static_cast<T>(dot);
    for (std::int64_t i = 0; i < n; ++i) drow[i] = prow[i] * (drow[i] - d);
  }
}

template <class T>
std::int64_t rows_of_last_dim(const TensorT<T>& x) {
  return x.numel() / x.shape().back();
}

}  // namespace

template <class T>
void ensure_finite(const TensorT<T>& t, const char* op) {
  if (!K<T>::all_finite(t.data(), t.numel())) {
    throw NumericError(std::string(op) + " produced NaN/Inf");
  }
}

// ---------- elementwise, broadcasting ----------

template <class T>
TensorT<T> add(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  BPlan plan = make_bplan(a, b, "add");
  TensorT<T> out(a.shape());
  const T* ap = a.data();
  const T* bp = b.data();
  T* op_ = out.data();
  if (plan.seg == 1 && b.numel() == 1) {
    T c = bp[0];
    for (std::int64_t i = 0; i < a.numel(); ++i) op_[i] = ap[i] + c;
  } else {
    for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
      K<T>::ew_add(ap + ao, bp + bo, op_ + ao, plan.seg);
    });
  }
  ensure_finite(out, "add");
  if (tape) {
    tape->record("add", [a, b, out, plan](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* ga = tp.grad(a);
      T* gb = tp.grad(b);
      K<T>::axpy(T(1), go, ga, out.numel());
      if (b.numel() == 1 && plan.seg == 1) {
        gb[0] += static_cast<T>(K<T>::reduce_sum(go, out.numel()));
      } else {
        for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
          K<T>::axpy(T(1), go + ao, gb + bo, plan.seg);
        });
      }
      bwd_finite(tp, a, "add");
      bwd_finite(tp, b, "add");
    });
  }
  return out;
}

template <class T>
TensorT<T> sub(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  BPlan plan = make_bplan(a, b, "sub");
  TensorT<T> out(a.shape());
  const T* ap = a.data();
  const T* bp = b.data();
  T* op_ = out.data();
  if (plan.seg == 1 && b.numel() == 1) {
    T c = bp[0];
    for (std::int64_t i = 0; i < a.numel(); ++i) op_[i] = ap[i] - c;
  } else {
    for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
      K<T>::ew_sub(ap + ao, bp + bo, op_ + ao, plan.seg);
    });
  }
  ensure_finite(out, "sub");
  if (tape) {
    tape->record("sub", [a, b, out, plan](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* ga = tp.grad(a);
      T* gb = tp.grad(b);
      K<T>::axpy(T(1), go, ga, out.numel());
      if (b.numel() == 1 && plan.seg == 1) {
        gb[0] -= static_cast<T>(K<T>::reduce_sum(go, out.numel()));
      } else {
        for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
          K<T>::axpy(T(-1), go + ao, gb + bo, plan.seg);
        });
      }
      bwd_finite(tp, a, "sub");
      bwd_finite(tp, b, "sub");
    });
  }
  return out;
}

template <class T>
TensorT<T> mul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  BPlan plan = make_bplan(a, b, "mul");
  TensorT<T> out(a.shape());
  const T* ap = a.data();
  const T* bp = b.data();
  T* op_ = out.data();
  for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
    K<T>::ew_mul(ap + ao, bp + bo, op_ + ao, plan.seg);
  });
  ensure_finite(out, "mul");
  if (tape) {
    tape->record("mul", [a, b, out, plan](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* ga = tp.grad(a);
      T* gb = tp.grad(b);
      const T* ap2 = a.data();
      const T* bp2 = b.data();
      for_each_segment(plan, [&](std::int64_t ao, std::int64_t bo) {
        K<T>::ew_mul_acc(go + ao, bp2 + bo, ga + ao, plan.seg);
        K<T>::ew_mul_acc(go + ao, ap2 + ao, gb + bo, plan.seg);
      });
      bwd_finite(tp, a, "mul");
      bwd_finite(tp, b, "mul");
    });
  }
  return out;
}

template <class T>
TensorT<T> scale(TapeT<T>* tape, const TensorT<T>& a, double s) {
  TensorT<T> out(a.shape());
  K<T>::scale(a.data(), static_cast<T>(s), out.data(), a.numel());
  ensure_finite(out, "scale");
  if (tape) {
    tape->record("scale", [a, out, s](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      K<T>::axpy(static_cast<T>(s), tp.grad(out), tp.grad(a), out.numel());
      bwd_finite(tp, a, "scale");
    });
  }
  return out;
}

// ---------- activations ----------

template <class T>
TensorT<T> silu(TapeT<T>* tape, const TensorT<T>& x) {
  TensorT<T> out(x.shape());
  auto sig = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
  const T* xp = x.data();
  T* op_ = out.data();
  T* sp = sig->data();
  std::int64_t n = x.numel();
  parallel_for(n, 4096, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      T s = T(1) / (T(1) + std::exp(-xp[i]));
      sp[i] = s;
      op_[i] = xp[i] * s;
    }
  });
  ensure_finite(out, "silu");
  if (tape) {
    tape->record("silu", [x, out, sig](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      const T* xp2 = x.data();
      const T* sp2 = sig->data();
      std::int64_t n2 = out.numel();
      for (std::int64_t i = 0; i < n2; ++i) {
        T s = sp2[i];
        gx[i] += go[i] * s * (T(1) + xp2[i] * (T(1) - s));
      }
      bwd_finite(tp, x, "silu");
    });
  }
  return out;
}

template <class T>
TensorT<T> sin_op(TapeT<T>* tape, const TensorT<T>& x) {
  TensorT<T> out(x.shape());
  const T* xp = x.data();
  T* op_ = out.data();
  for (std::int64_t i = 0; i < x.numel(); ++i) op_[i] = std::sin(xp[i]);
  ensure_finite(out, "sin");
  if (tape) {
    tape->record("sin", [x, out](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      const T* xp2 = x.data();
      for (std::int64_t i = 0; i < out.numel(); ++i) gx[i] += go[i] * std::cos(xp2[i]);
      bwd_finite(tp, x, "sin");
    });
  }
  return out;
}

template <class T>
TensorT<T> softmax_lastdim(TapeT<T>* tape, const TensorT<T>& x) {
  std::int64_t n = x.shape().back();
  std::int64_t rows = rows_of_last_dim(x);
  TensorT<T> out(x.shape());
  std::memcpy(out.data(), x.data(), sizeof(T) * static_cast<size_t>(x.numel()));
  softmax_rows(out.data(), rows, n);
  ensure_finite(out, "softmax");
  if (tape) {
    tape->record("softmax", [x, out, rows, n](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      const T* yp = out.data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* yrow = yp + r * n;
        const T* grow = go + r * n;
        double dot = 0.0;
        for (std::int64_t i = 0; i < n; ++i) dot += static_cast<double>(grow[i]) * yrow[i];
        T d = static_cast<T>(dot);
        T* gxrow = gx + r * n;
        for (std::int64_t i = 0; i < n; ++i) gxrow[i] += yrow[i] * (grow[i] - d);
      }
      bwd_finite(tp, x, "softmax");
    });
  }
  return out;
}

// ---------- layer norm ----------

template <class T>
TensorT<T> layer_norm(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& gain,
                      const TensorT<T>& bias, double eps) {
  std::int64_t n = x.shape().back();
  std::int64_t rows = rows_of_last_dim(x);
  if (gain.numel() != n || bias.numel() != n) {
    throw ConfigError("layer_norm: gain/bias must match last dim " + std::to_string(n));
  }
  TensorT<T> out(x.shape());
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
  auto rstd = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
  const T* xp = x.data();
  const T* gp = gain.data();
  const T* bp = bias.data();
  T* op_ = out.data();
  T* hp = xhat->data();
  T* rp = rstd->data();
  parallel_for(rows, 64, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t r = lo; r < hi; ++r) {
      const T* xrow = xp + r * n;
      double mean = 0.0;
      for (std::int64_t i = 0; i < n; ++i) mean += static_cast<double>(xrow[i]);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        double d = static_cast<double>(xrow[i]) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      T r_ = static_cast<T>(1.0 / std::sqrt(var + eps));
      rp[r] = r_;
      T mu = static_cast<T>(mean);
      T* hrow = hp + r * n;
      T* orow = op_ + r * n;
      for (std::int64_t i = 0; i < n; ++i) {
        T h = (xrow[i] - mu) * r_;
        hrow[i] = h;
        orow[i] = gp[i] * h + bp[i];
      }
    }
  });
  ensure_finite(out, "layer_norm");
  if (tape) {
    tape->record("layer_norm", [x, gain, bias, out, xhat, rstd, rows, n](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      T* gg = tp.grad(gain);
      T* gb = tp.grad(bias);
      const T* gp2 = gain.data();
      const T* hp2 = xhat->data();
      const T* rp2 = rstd->data();
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* grow = go + r * n;
        const T* hrow = hp2 + r * n;
        T rs = rp2[r];
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
          double dh = static_cast<double>(grow[i]) * gp2[i];
          s1 += dh;
          s2 += dh * hrow[i];
        }
        T m1 = static_cast<T>(s1 / static_cast<double>(n));
        T m2 = static_cast<T>(s2 / static_cast<double>(n));
        T* gxrow = gx + r * n;
        for (std::int64_t i = 0; i < n; ++i) {
          T dh = grow[i] * gp2[i];
          gxrow[i] += rs * (dh - m1 - hrow[i] * m2);
          gg[i] += grow[i] * hrow[i];
          gb[i] += grow[i];
        }
      }
      bwd_finite(tp, x, "layer_norm");
      bwd_finite(tp, gain, "layer_norm");
      bwd_finite(tp, bias, "layer_norm");
    });
  }
  return out;
}

// ---------- linear / conv / matmul ----------

template <class T>
TensorT<T> linear(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  if (w.rank() != 2) throw ConfigError("linear: weight must be [out, in]");
  std::int64_t in = w.dim(1);
  std::int64_t outf = w.dim(0);
  if (x.shape().back() != in) {
    throw ConfigError("linear: input last dim " + shape_str(x.shape()) + " does not match weight " +
                      shape_str(w.shape()));
  }
  if (b.defined() && b.numel() != outf) throw ConfigError("linear: bias size mismatch");
  std::int64_t rows = x.numel() / in;

  Shape oshape = x.shape();
  oshape.back() = outf;
  TensorT<T> out(oshape);

  // The forward product streams x rows against W^T; transposing W once per
  // call is far cheaper than column-strided access inside the kernel.
  std::vector<T> wt(static_cast<size_t>(in * outf));
  const T* wp = w.data();
  for (std::int64_t o = 0; o < outf; ++o) {
    for (std::int64_t i = 0; i < in; ++i) wt[i * outf + o] = wp[o * in + i];
  }
  gemm_nn_rows<T>(x.data(), wt.data(), out.data(), rows, in, outf, false);
  if (b.defined()) {
    const T* bp = b.data();
    T* op_ = out.data();
    parallel_for(rows, 256, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t r = lo; r < hi; ++r) K<T>::ew_add(op_ + r * outf, bp, op_ + r * outf, outf);
    });
  }
  ensure_finite(out, "linear");
  if (tape) {
    tape->record("linear", [x, w, b, out, rows, in, outf](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      gemm_nn_rows<T>(go, w.data(), gx, rows, outf, in, true);
      T* gw = tp.grad(w);
      K<T>::gemm_tn(go, x.data(), gw, outf, rows, in, true);
      if (b.defined()) {
        T* gb = tp.grad(b);
        for (std::int64_t r = 0; r < rows; ++r) K<T>::axpy(T(1), go + r * outf, gb, outf);
        bwd_finite(tp, b, "linear");
      }
      bwd_finite(tp, x, "linear");
      bwd_finite(tp, w, "linear");
    });
  }
  return out;
}

template <class T>
TensorT<T> conv1d_pointwise(TapeT<T>* tape, const TensorT<T>& x, const TensorT<T>& w,
                            const TensorT<T>& b) {
  if (x.rank() != 3 || w.rank() != 2) {
    throw ConfigError("conv1d_pointwise: expects x[b, c_in, len], w[c_out, c_in]");
  }
  std::int64_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  std::int64_t cout = w.dim(0);
  if (w.dim(1) != cin) throw ConfigError("conv1d_pointwise: channel mismatch");
  if (b.defined() && b.numel() != cout) throw ConfigError("conv1d_pointwise: bias size mismatch");

  TensorT<T> out({batch, cout, len});
  const T* xp = x.data();
  const T* bp = b.defined() ? b.data() : nullptr;
  T* op_ = out.data();
  for (std::int64_t n = 0; n < batch; ++n) {
    T* on = op_ + n * cout * len;
    K<T>::gemm_nn(w.data(), xp + n * cin * len, on, cout, cin, len, false);
    if (bp) {
      for (std::int64_t co = 0; co < cout; ++co) {
        T add = bp[co];
        T* row = on + co * len;
        for (std::int64_t l = 0; l < len; ++l) row[l] += add;
      }
    }
  }
  ensure_finite(out, "conv1d_pointwise");
  if (tape) {
    tape->record("conv1d_pointwise", [x, w, b, out, batch, cin, len, cout](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      T* gw = tp.grad(w);
      const T* xp2 = x.data();
      for (std::int64_t n = 0; n < batch; ++n) {
        const T* gon = go + n * cout * len;
        K<T>::gemm_tn(w.data(), gon, gx + n * cin * len, cin, cout, len, true);
        K<T>::gemm_nt(gon, xp2 + n * cin * len, gw, cout, len, cin, true);
      }
      if (b.defined()) {
        T* gb = tp.grad(b);
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* row = go + (n * cout + co) * len;
            double s = 0.0;
            for (std::int64_t l = 0; l < len; ++l) s += static_cast<double>(row[l]);
            gb[co] += static_cast<T>(s);
          }
        }
        bwd_finite(tp, b, "conv1d_pointwise");
      }
      bwd_finite(tp, x, "conv1d_pointwise");
      bwd_finite(tp, w, "conv1d_pointwise");
    });
  }
  return out;
}

template <class T>
TensorT<T> matmul(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ConfigError("matmul: needs [m,k]x[k,n], got " + shape_str(a.shape()) + " x " +
                      shape_str(b.shape()));
  }
  std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  TensorT<T> out({m, n});
  gemm_nn_rows<T>(a.data(), b.data(), out.data(), m, k, n, false);
  ensure_finite(out, "matmul");
  if (tape) {
    tape->record("matmul", [a, b, out, m, k, n](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      K<T>::gemm_nt(go, b.data(), tp.grad(a), m, n, k, true);
      K<T>::gemm_tn(a.data(), go, tp.grad(b), k, m, n, true);
      bwd_finite(tp, a, "matmul");
      bwd_finite(tp, b, "matmul");
    });
  }
  return out;
}

// ---------- attention ----------

template <class T>
TensorT<T> attention_core(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                          const TensorT<T>& v, int heads, TensorT<T>* attn) {
  check_shapes_equal(q, k, "attention_core");
  check_shapes_equal(q, v, "attention_core");
  if (q.rank() != 3) throw ConfigError("attention_core: expects [n, tokens, dim]");
  std::int64_t nb = q.dim(0), tok = q.dim(1), c = q.dim(2);
  if (heads <= 0 || c % heads != 0) {
    throw ConfigError("attention_core: heads must divide dim, got dim=" + std::to_string(c) +
                      " heads=" + std::to_string(heads));
  }
  std::int64_t dh = c / heads;
  T sc = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  TensorT<T> out({nb, tok, c});
  // Post-softmax weights are kept whole for the backward pass.
  TensorT<T> probs({nb, static_cast<std::int64_t>(heads), tok, tok});

  const T* qp = q.data();
  const T* kp = k.data();
  const T* vp = v.data();
  T* op_ = out.data();
  T* pp = probs.data();
  std::int64_t nh = nb * heads;

  parallel_for(nh, 1, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<T> qh(static_cast<size_t>(tok * dh));
    std::vector<T> kt(static_cast<size_t>(dh * tok));
    std::vector<T> vh(static_cast<size_t>(tok * dh));
    std::vector<T> oh(static_cast<size_t>(tok * dh));
    for (std::int64_t ih = lo; ih < hi; ++ih) {
      std::int64_t n = ih / heads;
      std::int64_t h = ih % heads;
      std::int64_t base = n * tok * c + h * dh;
      for (std::int64_t t = 0; t < tok; ++t) {
        const T* qs = qp + base + t * c;
        const T* ks = kp + base + t * c;
        const T* vs = vp + base + t * c;
        for (std::int64_t e = 0; e < dh; ++e) {
          qh[t * dh + e] = sc * qs[e];
          kt[e * tok + t] = ks[e];
          vh[t * dh + e] = vs[e];
        }
      }
      T* pslice = pp + ih * tok * tok;
      K<T>::gemm_nn(qh.data(), kt.data(), pslice, tok, dh, tok, false);
      softmax_rows(pslice, tok, tok);
      K<T>::gemm_nn(pslice, vh.data(), oh.data(), tok, tok, dh, false);
      T* obase = op_ + base;
      for (std::int64_t t = 0; t < tok; ++t) {
        for (std::int64_t e = 0; e < dh; ++e) obase[t * c + e] = oh[t * dh + e];
      }
    }
  });
  ensure_finite(out, "attention_core");

  if (attn != nullptr) {
    TensorT<T> copy(probs.shape());
    std::memcpy(copy.data(), probs.data(), sizeof(T) * static_cast<size_t>(probs.numel()));
    *attn = copy;
  }

  if (tape) {
    tape->record("attention_core", [q, k, v, out, probs, heads, nb, tok, c, dh, sc](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      // Materialize before the parallel region; allocation is not
      // thread-safe, the disjoint writes afterwards are.
      T* gq = tp.grad(q);
      T* gk = tp.grad(k);
      T* gv = tp.grad(v);
      const T* qp2 = q.data();
      const T* kp2 = k.data();
      const T* vp2 = v.data();
      const T* pp2 = probs.data();
      std::int64_t nh2 = nb * heads;
      parallel_for(nh2, 1, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<T> qh(static_cast<size_t>(tok * dh));
        std::vector<T> kh(static_cast<size_t>(tok * dh));
        std::vector<T> vt(static_cast<size_t>(dh * tok));
        std::vector<T> doh(static_cast<size_t>(tok * dh));
        std::vector<T> dp(static_cast<size_t>(tok * tok));
        std::vector<T> tmp(static_cast<size_t>(tok * dh));
        for (std::int64_t ih = lo; ih < hi; ++ih) {
          std::int64_t n = ih / heads;
          std::int64_t h = ih % heads;
          std::int64_t base = n * tok * c + h * dh;
          for (std::int64_t t = 0; t < tok; ++t) {
            const T* qs = qp2 + base + t * c;
            const T* ks = kp2 + base + t * c;
            const T* vs = vp2 + base + t * c;
            const T* gs = go + base + t * c;
            for (std::int64_t e = 0; e < dh; ++e) {
              qh[t * dh + e] = sc * qs[e];
              kh[t * dh + e] = ks[e];
              vt[e * tok + t] = vs[e];
              doh[t * dh + e] = gs[e];
            }
          }
          const T* pslice = pp2 + ih * tok * tok;
          // dP = dO V^T, then through softmax, then to q/k/v.
          K<T>::gemm_nn(doh.data(), vt.data(), dp.data(), tok, dh, tok, false);
          softmax_backward_rows(pslice, dp.data(), tok, tok);
          K<T>::gemm_nn(dp.data(), kh.data(), tmp.data(), tok, tok, dh, false);
          for (std::int64_t t = 0; t < tok; ++t) {
            T* dst = gq + base + t * c;
            for (std::int64_t e = 0; e < dh; ++e) dst[e] += sc * tmp[t * dh + e];
          }
          K<T>::gemm_tn(dp.data(), qh.data(), tmp.data(), tok, tok, dh, false);
          for (std::int64_t t = 0; t < tok; ++t) {
            T* dst = gk + base + t * c;
            for (std::int64_t e = 0; e < dh; ++e) dst[e] += tmp[t * dh + e];
          }
          K<T>::gemm_tn(pslice, doh.data(), tmp.data(), tok, tok, dh, false);
          for (std::int64_t t = 0; t < tok; ++t) {
            T* dst = gv + base + t * c;
            for (std::int64_t e = 0; e < dh; ++e) dst[e] += tmp[t * dh + e];
          }
        }
      });
      bwd_finite(tp, q, "attention_core");
      bwd_finite(tp, k, "attention_core");
      bwd_finite(tp, v, "attention_core");
    });
  }
  return out;
}

template <class T>
TensorT<T> multi_head_attention(TapeT<T>* tape, const TensorT<T>& q, const TensorT<T>& k,
                                const TensorT<T>& v, int heads, const MhaWeightsT<T>& w,
                                TensorT<T>* attn) {
  TensorT<T> qp = linear(tape, q, w.wq, w.bq);
  TensorT<T> kp = linear(tape, k, w.wk, w.bk);
  TensorT<T> vp = linear(tape, v, w.wv, w.bv);
  TensorT<T> core = attention_core(tape, qp, kp, vp, heads, attn);
  return linear(tape, core, w.wo, w.bo);
}

// ---------- shape ops ----------

template <class T>
TensorT<T> reshape(TapeT<T>* tape, const TensorT<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ConfigError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                      " changes element count");
  }
  TensorT<T> out(std::move(shape));
  std::memcpy(out.data(), x.data(), sizeof(T) * static_cast<size_t>(x.numel()));
  if (tape) {
    tape->record("reshape", [x, out](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      K<T>::axpy(T(1), tp.grad(out), tp.grad(x), out.numel());
    });
  }
  return out;
}

namespace {

// Shared by permute forward/backward: walks the output in order and reports
// the matching input offset. fast-paths rank-4 (0,2,1,3), the only permute
// on the hot path.
template <class T, class Fn>
void permute_walk(const Shape& xs, const std::vector<int>& dims, Fn&& fn) {
  int r = static_cast<int>(xs.size());
  Shape os(xs.size());
  for (int i = 0; i < r; ++i) os[i] = xs[dims[i]];
  std::vector<std::int64_t> xstride(r, 1);
  for (int i = r - 2; i >= 0; --i) xstride[i] = xstride[i + 1] * xs[i + 1];
  std::vector<std::int64_t> ostride_from_x(r);
  for (int i = 0; i < r; ++i) ostride_from_x[i] = xstride[dims[i]];
  std::vector<std::int64_t> idx(r, 0);
  std::int64_t total = shape_numel(xs);
  std::int64_t xoff = 0;
  for (std::int64_t o = 0; o < total; ++o) {
    fn(o, xoff);
    for (int d = r - 1; d >= 0; --d) {
      xoff += ostride_from_x[d];
      if (++idx[d] < os[d]) break;
      xoff -= ostride_from_x[d] * os[d];
      idx[d] = 0;
    }
  }
}

bool is_0213(const std::vector<int>& dims) {
  return dims.size() == 4 && dims[0] == 0 && dims[1] == 2 && dims[2] == 1 && dims[3] == 3;
}

}  // namespace

template <class T>
TensorT<T> permute(TapeT<T>* tape, const TensorT<T>& x, std::vector<int> dims) {
  int r = x.rank();
  if (static_cast<int>(dims.size()) != r) throw ConfigError("permute: rank mismatch");
  std::vector<bool> seen(static_cast<size_t>(r), false);
  for (int d : dims) {
    if (d < 0 || d >= r || seen[static_cast<size_t>(d)]) throw ConfigError("permute: bad dims");
    seen[static_cast<size_t>(d)] = true;
  }
  Shape oshape(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) oshape[static_cast<size_t>(i)] = x.dim(dims[static_cast<size_t>(i)]);
  TensorT<T> out(oshape);
  const T* xp = x.data();
  T* op_ = out.data();
  if (is_0213(dims)) {
    std::int64_t d0 = x.dim(0), d1 = x.dim(1), d2 = x.dim(2), d3 = x.dim(3);
    parallel_for(d0 * d2, 16, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t bi = lo; bi < hi; ++bi) {
        std::int64_t b = bi / d2, j = bi % d2;
        T* orow = op_ + (b * d2 + j) * d1 * d3;
        for (std::int64_t i = 0; i < d1; ++i) {
          std::memcpy(orow + i * d3, xp + ((b * d1 + i) * d2 + j) * d3,
                      sizeof(T) * static_cast<size_t>(d3));
        }
      }
    });
  } else {
    permute_walk<T>(x.shape(), dims, [&](std::int64_t o, std::int64_t xoff) { op_[o] = xp[xoff]; });
  }
  if (tape) {
    tape->record("permute", [x, out, dims](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      if (is_0213(dims)) {
        std::int64_t d0 = x.dim(0), d1 = x.dim(1), d2 = x.dim(2), d3 = x.dim(3);
        for (std::int64_t b = 0; b < d0; ++b) {
          for (std::int64_t j = 0; j < d2; ++j) {
            const T* orow = go + (b * d2 + j) * d1 * d3;
            for (std::int64_t i = 0; i < d1; ++i) {
              K<T>::axpy(T(1), orow + i * d3, gx + ((b * d1 + i) * d2 + j) * d3, d3);
            }
          }
        }
      } else {
        permute_walk<T>(x.shape(), dims,
                        [&](std::int64_t o, std::int64_t xoff) { gx[xoff] += go[o]; });
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> slice_axis(TapeT<T>* tape, const TensorT<T>& x, int axis, std::int64_t lo,
                      std::int64_t hi) {
  int r = x.rank();
  if (axis < 0 || axis >= r) throw ConfigError("slice_axis: bad axis");
  std::int64_t d = x.dim(axis);
  if (lo < 0 || hi > d || lo >= hi) {
    throw ConfigError("slice_axis: bad range [" + std::to_string(lo) + "," + std::to_string(hi) +
                      ") for dim " + std::to_string(d));
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < r; ++i) inner *= x.dim(i);
  Shape oshape = x.shape();
  oshape[static_cast<size_t>(axis)] = hi - lo;
  TensorT<T> out(oshape);
  const T* xp = x.data();
  T* op_ = out.data();
  std::int64_t w = hi - lo;
  for (std::int64_t o = 0; o < outer; ++o) {
    std::memcpy(op_ + o * w * inner, xp + (o * d + lo) * inner,
                sizeof(T) * static_cast<size_t>(w * inner));
  }
  if (tape) {
    tape->record("slice_axis", [x, out, d, lo, w, outer, inner](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T* go = tp.grad(out);
      T* gx = tp.grad(x);
      for (std::int64_t o = 0; o < outer; ++o) {
        K<T>::axpy(T(1), go + o * w * inner, gx + (o * d + lo) * inner, w * inner);
      }
    });
  }
  return out;
}

// ---------- reductions ----------

template <class T>
TensorT<T> sum_all(TapeT<T>* tape, const TensorT<T>& x) {
  TensorT<T> out = TensorT<T>::scalar(static_cast<T>(K<T>::reduce_sum(x.data(), x.numel())));
  ensure_finite(out, "sum");
  if (tape) {
    tape->record("sum", [x, out](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T g = tp.grad(out)[0];
      T* gx = tp.grad(x);
      for (std::int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
      bwd_finite(tp, x, "sum");
    });
  }
  return out;
}

template <class T>
TensorT<T> mean_all(TapeT<T>* tape, const TensorT<T>& x) {
  double inv = 1.0 / static_cast<double>(x.numel());
  TensorT<T> out =
      TensorT<T>::scalar(static_cast<T>(K<T>::reduce_sum(x.data(), x.numel()) * inv));
  ensure_finite(out, "mean");
  if (tape) {
    tape->record("mean", [x, out, inv](TapeT<T>& tp) {
      if (!tp.has_grad(out)) return;
      T g = static_cast<T>(tp.grad(out)[0] * inv);
      T* gx = tp.grad(x);
      for (std::int64_t i = 0; i < x.numel(); ++i) gx[i] += g;
      bwd_finite(tp, x, "mean");
    });
  }
  return out;
}

template <class T>
TensorT<T> mse(TapeT<T>* tape, const TensorT<T>& a, const TensorT<T>& b) {
  check_shapes_equal(a, b, "mse");
  TensorT<T> d = sub(tape, a, b);
  TensorT<T> sq = mul(tape, d, d);
  return mean_all(tape, sq);
}

// ---------- instantiations ----------

#define HHI_INSTANTIATE_OPS(T)                                                                     \
  template TensorT<T> add<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> sub<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> mul<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template TensorT<T> scale<T>(TapeT<T>*, const TensorT<T>&, double);                              \
  template TensorT<T> silu<T>(TapeT<T>*, const TensorT<T>&);                                       \
  template TensorT<T> sin_op<T>(TapeT<T>*, const TensorT<T>&);                                     \
  template TensorT<T> softmax_lastdim<T>(TapeT<T>*, const TensorT<T>&);                            \
  template TensorT<T> layer_norm<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,               \
                                    const TensorT<T>&, double);                                    \
  template TensorT<T> linear<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,                   \
                                const TensorT<T>&);                                                \
  template TensorT<T> conv1d_pointwise<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,         \
                                          const TensorT<T>&);                                      \
  template TensorT<T> matmul<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                  \
  template TensorT<T> attention_core<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,           \
                                        const TensorT<T>&, int, TensorT<T>*);                      \
  template TensorT<T> multi_head_attention<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&,     \
                                              const TensorT<T>&, int, const MhaWeightsT<T>&,       \
                                              TensorT<T>*);                                        \
  template TensorT<T> reshape<T>(TapeT<T>*, const TensorT<T>&, Shape);                             \
  template TensorT<T> permute<T>(TapeT<T>*, const TensorT<T>&, std::vector<int>);                  \
  template TensorT<T> slice_axis<T>(TapeT<T>*, const TensorT<T>&, int, std::int64_t,               \
                                    std::int64_t);                                                 \
  template TensorT<T> sum_all<T>(TapeT<T>*, const TensorT<T>&);                                    \
  template TensorT<T> mean_all<T>(TapeT<T>*, const TensorT<T>&);                                   \
  template TensorT<T> mse<T>(TapeT<T>*, const TensorT<T>&, const TensorT<T>&);                     \
  template void ensure_finite<T>(const TensorT<T>&, const char*);

HHI_INSTANTIATE_OPS(float)
HHI_INSTANTIATE_OPS(double)

#undef HHI_INSTANTIATE_OPS

}  // namespace hhi::core::ops
