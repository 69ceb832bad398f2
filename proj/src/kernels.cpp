#include "wavemod/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>

namespace wavemod::kernels {

namespace {

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sup_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void correlate_scalar(const double* v, std::size_t n_v, const double* w, std::size_t k,
                      double* out, std::size_t n_out) {
  (void)n_v;
  for (std::size_t i = 0; i < n_out; ++i) {
    double s = 0.0;
    const double* vi = v + i;
    for (std::size_t j = 0; j < k; ++j) s += w[j] * vi[j];
    out[i] = s;
  }
}

} // namespace

namespace detail {
const Ops scalar_ops = {&axpy_scalar, &dot_scalar, &sup_abs_scalar, &correlate_scalar};
} // namespace detail

namespace {

const detail::Ops* pick(Lane lane) {
#ifdef WAVEMOD_HAVE_AVX2_LANE
  if (lane == Lane::Avx2 && avx2_available()) return &detail::avx2_ops;
  if (lane == Lane::Auto && avx2_available()) return &detail::avx2_ops;
#else
  (void)lane;
#endif
  return &detail::scalar_ops;
}

std::atomic<const detail::Ops*> g_ops{nullptr};
std::atomic<Lane> g_lane{Lane::Auto};

const detail::Ops* ops() {
  const detail::Ops* p = g_ops.load(std::memory_order_acquire);
  if (!p) {
    p = pick(g_lane.load());
    g_ops.store(p, std::memory_order_release);
  }
  return p;
}

} // namespace

bool avx2_available() {
#ifdef WAVEMOD_HAVE_AVX2_LANE
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

void set_lane(Lane lane) {
  g_lane.store(lane);
  g_ops.store(pick(lane), std::memory_order_release);
}

Lane active_lane() {
  return ops() == &detail::scalar_ops ? Lane::Scalar : Lane::Avx2;
}

const char* lane_name() {
  return active_lane() == Lane::Scalar ? "scalar" : "avx2";
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ops()->axpy(alpha, x, y, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  return ops()->dot(x, y, n);
}

double sup_abs(const double* x, std::size_t n) {
  return ops()->sup_abs(x, n);
}

void correlate(const double* v, std::size_t n_v, const double* w, std::size_t k,
               double* out, std::size_t n_out) {
  ops()->correlate(v, n_v, w, k, out, n_out);
}

} // namespace wavemod::kernels
