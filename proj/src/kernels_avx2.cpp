// AVX2 lane. Compiled with -mavx2 -mfma; only dispatched to when the CPU
// reports avx2, so no runtime guards are needed inside the kernels.

#include "wavemod/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace wavemod::kernels {
namespace {

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, vx, vy));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sup_abs_avx2(const double* x, std::size_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d vmax = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_and_pd(_mm256_loadu_pd(x + i), mask);
    vmax = _mm256_max_pd(vmax, v);
  }
  double m = 0.0;
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, vmax);
  for (double t : tmp) m = std::max(m, t);
  for (; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void correlate_avx2(const double* v, std::size_t n_v, const double* w, std::size_t k,
                    double* out, std::size_t n_out) {
  (void)n_v;
  // Four outputs per pass share the streamed weight loads.
  std::size_t i = 0;
  for (; i + 4 <= n_out; i += 4) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    const double* base = v + i;
    std::size_t j = 0;
    for (; j + 4 <= k; j += 4) {
      __m256d vw = _mm256_loadu_pd(w + j);
      a0 = _mm256_fmadd_pd(vw, _mm256_loadu_pd(base + j), a0);
      a1 = _mm256_fmadd_pd(vw, _mm256_loadu_pd(base + j + 1), a1);
      a2 = _mm256_fmadd_pd(vw, _mm256_loadu_pd(base + j + 2), a2);
      a3 = _mm256_fmadd_pd(vw, _mm256_loadu_pd(base + j + 3), a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; j < k; ++j) {
      const double wj = w[j];
      s0 += wj * base[j];
      s1 += wj * base[j + 1];
      s2 += wj * base[j + 2];
      s3 += wj * base[j + 3];
    }
    out[i] = s0;
    out[i + 1] = s1;
    out[i + 2] = s2;
    out[i + 3] = s3;
  }
  for (; i < n_out; ++i) {
    __m256d acc = _mm256_setzero_pd();
    const double* base = v + i;
    std::size_t j = 0;
    for (; j + 4 <= k; j += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), _mm256_loadu_pd(base + j), acc);
    }
    double s = hsum(acc);
    for (; j < k; ++j) s += w[j] * base[j];
    out[i] = s;
  }
}

} // namespace

namespace detail {
const Ops avx2_ops = {&axpy_avx2, &dot_avx2, &sup_abs_avx2, &correlate_avx2};
} // namespace detail

} // namespace wavemod::kernels
