#pragma once

#include <cmath>
#include <cstdint>

namespace hhi::core::kern {

// Three GEMM layouts cover every matmul in the library:
//   nn: C[M,N] = A[M,K]  * B[K,N]   (attention output, bias-free conv)
//   nt: C[M,N] = A[M,K]  * B[N,K]^T (x * W^T projections, attention scores)
//   tn: C[M,N] = A[K,M]^T* B[K,N]   (weight gradients, dX through conv)
// acc=true accumulates into C instead of overwriting it.
//
// Scalar templates below are the reference semantics; the float table may be
// rerouted to AVX2 at runtime. Backends are individually deterministic but
// FMA contraction means float results differ between backends at rounding
// level, so cross-backend comparisons are tolerance-based.

template <class T>
void gemm_nn_ref(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                 bool acc) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (!acc) {
      for (std::int64_t j = 0; j < n; ++j) crow[j] = T(0);
    }
    const T* arow = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
void gemm_nt_ref(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                 bool acc) {
  for (std::int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s = T(0);
      for (std::int64_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = acc ? crow[j] + s : s;
    }
  }
}

template <class T>
void gemm_tn_ref(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
                 bool acc) {
  if (!acc) {
    for (std::int64_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  // k is the outer loop so C stays hot; A row p holds column values for all i.
  for (std::int64_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      T av = arow[i];
      T* crow = c + i * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
void axpy_ref(T alpha, const T* x, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale_ref(const T* x, T alpha, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

template <class T>
void ew_add_ref(const T* a, const T* b, T* c, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

template <class T>
void ew_sub_ref(const T* a, const T* b, T* c, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

template <class T>
void ew_mul_ref(const T* a, const T* b, T* c, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

// c += a * b, the accumulate form used by product-rule adjoints.
template <class T>
void ew_mul_acc_ref(const T* a, const T* b, T* c, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) c[i] += a[i] * b[i];
}

// One optimizer step over a parameter block. bc1/bc2 are the bias
// corrections 1-beta1^t and 1-beta2^t for the step being applied.
template <class T>
void adam_update_ref(T* p, const T* g, T* m, T* v, std::int64_t n, T lr, T beta1, T beta2, T eps,
                     T bc1, T bc2) {
  for (std::int64_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    T mhat = m[i] / bc1;
    T vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <class T>
bool all_finite_ref(const T* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

// Fixed-order sum with a double accumulator; reduction order never depends
// on threading, so results are stable run to run.
template <class T>
double reduce_sum_ref(const T* x, std::int64_t n) {
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

enum class Isa { kScalar, kAvx2 };

struct Table {
  void (*gemm_nn)(const float*, const float*, float*, std::int64_t, std::int64_t, std::int64_t, bool);
  void (*gemm_nt)(const float*, const float*, float*, std::int64_t, std::int64_t, std::int64_t, bool);
  void (*gemm_tn)(const float*, const float*, float*, std::int64_t, std::int64_t, std::int64_t, bool);
  void (*axpy)(float, const float*, float*, std::int64_t);
  void (*scale)(const float*, float, float*, std::int64_t);
  void (*ew_add)(const float*, const float*, float*, std::int64_t);
  void (*ew_sub)(const float*, const float*, float*, std::int64_t);
  void (*ew_mul)(const float*, const float*, float*, std::int64_t);
  void (*ew_mul_acc)(const float*, const float*, float*, std::int64_t);
  void (*adam_update)(float*, const float*, float*, float*, std::int64_t, float, float, float,
                      float, float, float);
  bool (*all_finite)(const float*, std::int64_t);
  double (*reduce_sum)(const float*, std::int64_t);
};

// Active float table. Defaults to the best ISA the CPU supports; the
// HHI_SIMD environment variable (scalar|avx2|auto) overrides, and tests can
// pin a backend explicitly.
const Table& table();
Isa active_isa();
bool isa_supported(Isa isa);
void force_isa(Isa isa);  // throws ConfigError if unsupported
const Table& table_for(Isa isa);
const char* isa_name(Isa isa);

}  // namespace hhi::core::kern
