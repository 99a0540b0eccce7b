// AVX2+FMA variants of the float kernels. This file is the only translation
// unit compiled with -mavx2 -mfma; the dispatcher never hands out this table
// unless the CPU reports both features at runtime.

#include <immintrin.h>

#include "core/kernels.hpp"

namespace hhi::core::kern {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
  return _mm_cvtss_f32(s);
}

void gemm_nn_avx2(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                  std::int64_t n, bool acc) {
  for (std::int64_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    std::int64_t j = 0;
    // 32-wide tiles keep four accumulators live across the whole k loop.
    for (; j + 32 <= n; j += 32) {
      __m256 c0, c1, c2, c3;
      if (acc) {
        c0 = _mm256_loadu_ps(crow + j);
        c1 = _mm256_loadu_ps(crow + j + 8);
        c2 = _mm256_loadu_ps(crow + j + 16);
        c3 = _mm256_loadu_ps(crow + j + 24);
      } else {
        c0 = c1 = c2 = c3 = _mm256_setzero_ps();
      }
      for (std::int64_t p = 0; p < k; ++p) {
        __m256 av = _mm256_set1_ps(arow[p]);
        const float* brow = b + p * n + j;
        c0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow), c0);
        c1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 8), c1);
        c2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 16), c2);
        c3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + 24), c3);
      }
      _mm256_storeu_ps(crow + j, c0);
      _mm256_storeu_ps(crow + j + 8, c1);
      _mm256_storeu_ps(crow + j + 16, c2);
      _mm256_storeu_ps(crow + j + 24, c3);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 c0 = acc ? _mm256_loadu_ps(crow + j) : _mm256_setzero_ps();
      for (std::int64_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_ps(_mm256_set1_ps(arow[p]), _mm256_loadu_ps(b + p * n + j), c0);
      }
      _mm256_storeu_ps(crow + j, c0);
    }
    for (; j < n; ++j) {
      float s = acc ? crow[j] : 0.0f;
      for (std::int64_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
      crow[j] = s;
    }
  }
}

void gemm_nt_avx2(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                  std::int64_t n, bool acc) {
  for (std::int64_t i = 0; i < m; ++i) {
    const float* arow = a + i * k;
    float* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const float* brow = b + j * k;
      __m256 accv = _mm256_setzero_ps();
      std::int64_t p = 0;
      for (; p + 8 <= k; p += 8) {
        accv = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p), _mm256_loadu_ps(brow + p), accv);
      }
      float s = hsum8(accv);
      for (; p < k; ++p) s += arow[p] * brow[p];
      crow[j] = acc ? crow[j] + s : s;
    }
  }
}

void gemm_tn_avx2(const float* a, const float* b, float* c, std::int64_t m, std::int64_t k,
                  std::int64_t n, bool acc) {
  if (!acc) {
    std::int64_t total = m * n;
    std::int64_t i = 0;
    __m256 z = _mm256_setzero_ps();
    for (; i + 8 <= total; i += 8) _mm256_storeu_ps(c + i, z);
    for (; i < total; ++i) c[i] = 0.0f;
  }
  for (std::int64_t p = 0; p < k; ++p) {
    const float* arow = a + p * m;
    const float* brow = b + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      __m256 av = _mm256_set1_ps(arow[i]);
      float* crow = c + i * n;
      std::int64_t j = 0;
      for (; j + 8 <= n; j += 8) {
        _mm256_storeu_ps(crow + j,
                         _mm256_fmadd_ps(av, _mm256_loadu_ps(brow + j), _mm256_loadu_ps(crow + j)));
      }
      for (; j < n; ++j) crow[j] += arow[i] * brow[j];
    }
  }
}

void axpy_avx2(float alpha, const float* x, float* y, std::int64_t n) {
  __m256 av = _mm256_set1_ps(alpha);
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(const float* x, float alpha, float* y, std::int64_t n) {
  __m256 av = _mm256_set1_ps(alpha);
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  }
  for (; i < n; ++i) y[i] = alpha * x[i];
}

void ew_add_avx2(const float* a, const float* b, float* c, std::int64_t n) {
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(c + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) c[i] = a[i] + b[i];
}

void ew_sub_avx2(const float* a, const float* b, float* c, std::int64_t n) {
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(c + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) c[i] = a[i] - b[i];
}

void ew_mul_avx2(const float* a, const float* b, float* c, std::int64_t n) {
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(c + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) c[i] = a[i] * b[i];
}

void ew_mul_acc_avx2(const float* a, const float* b, float* c, std::int64_t n) {
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(
        c + i, _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), _mm256_loadu_ps(c + i)));
  }
  for (; i < n; ++i) c[i] += a[i] * b[i];
}

void adam_update_avx2(float* p, const float* g, float* m, float* v, std::int64_t n, float lr,
                      float beta1, float beta2, float eps, float bc1, float bc2) {
  __m256 b1 = _mm256_set1_ps(beta1);
  __m256 nb1 = _mm256_set1_ps(1.0f - beta1);
  __m256 b2 = _mm256_set1_ps(beta2);
  __m256 nb2 = _mm256_set1_ps(1.0f - beta2);
  __m256 bc1v = _mm256_set1_ps(bc1);
  __m256 bc2v = _mm256_set1_ps(bc2);
  __m256 lrv = _mm256_set1_ps(lr);
  __m256 epsv = _mm256_set1_ps(eps);
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_fmadd_ps(b1, _mm256_loadu_ps(m + i), _mm256_mul_ps(nb1, gv));
    __m256 vv = _mm256_fmadd_ps(b2, _mm256_loadu_ps(v + i), _mm256_mul_ps(nb2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 mhat = _mm256_div_ps(mv, bc1v);
    __m256 vhat = _mm256_div_ps(vv, bc2v);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), epsv);
    __m256 pv = _mm256_sub_ps(_mm256_loadu_ps(p + i), _mm256_div_ps(_mm256_mul_ps(lrv, mhat), denom));
    _mm256_storeu_ps(p + i, pv);
  }
  if (i < n) adam_update_ref<float>(p + i, g + i, m + i, v + i, n - i, lr, beta1, beta2, eps, bc1, bc2);
}

bool all_finite_avx2(const float* x, std::int64_t n) {
  // A float is non-finite exactly when its exponent bits are all ones.
  const __m256i expmask = _mm256_set1_epi32(0x7F800000);
  std::int64_t i = 0;
  __m256i bad = _mm256_setzero_si256();
  for (; i + 8 <= n; i += 8) {
    __m256i bits = _mm256_castps_si256(_mm256_loadu_ps(x + i));
    __m256i exp = _mm256_and_si256(bits, expmask);
    bad = _mm256_or_si256(bad, _mm256_cmpeq_epi32(exp, expmask));
    if ((i & 1023) == 1016 && !_mm256_testz_si256(bad, bad)) return false;
  }
  if (!_mm256_testz_si256(bad, bad)) return false;
  for (; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

double reduce_sum_avx2(const float* x, std::int64_t n) {
  // Double accumulators with a fixed lane-combination order. The result
  // differs from the scalar reference at rounding level only.
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  alignas(32) double lanes[8];
  _mm256_storeu_pd(lanes, acc0);
  _mm256_storeu_pd(lanes + 4, acc1);
  double s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
             ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
  for (; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

const Table kAvx2Table = {
    &gemm_nn_avx2, &gemm_nt_avx2, &gemm_tn_avx2, &axpy_avx2,       &scale_avx2,
    &ew_add_avx2,  &ew_sub_avx2,  &ew_mul_avx2,  &ew_mul_acc_avx2, &adam_update_avx2,
    &all_finite_avx2, &reduce_sum_avx2,
};

}  // namespace

const Table& avx2_table() { return kAvx2Table; }

}  // namespace hhi::core::kern
