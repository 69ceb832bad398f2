#pragma once
// Data-parallel arithmetic primitives used in the hot inner loops
// (heat-kernel FIR correlation, reductions, vector updates).
//
// A scalar reference lane is always available; an AVX2 lane is compiled in a
// separate translation unit and selected at runtime when the CPU supports it.
// The lanes are equivalence-tested against each other (see tests/test_kernels.cpp).

#include <cstddef>

namespace wavemod::kernels {

enum class Lane { Auto, Scalar, Avx2 };

// Select the active lane. Auto (default) picks AVX2 when the CPU has it.
// Setting an unavailable lane falls back to Scalar. Intended for tests and
// the --no-simd escape hatch; not thread-safe against concurrent kernel calls.
void set_lane(Lane lane);
Lane active_lane();
const char* lane_name();
bool avx2_available();

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// sum_i x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);

// max_i |x[i]|  (0 for n == 0)
double sup_abs(const double* x, std::size_t n);

// FIR correlation: out[i] = sum_{j<k} w[j] * v[i+j] for i = 0..n_out-1.
// Requires n_v >= n_out + k - 1.
void correlate(const double* v, std::size_t n_v, const double* w, std::size_t k,
               double* out, std::size_t n_out);

namespace detail {
struct Ops {
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sup_abs)(const double*, std::size_t);
  void (*correlate)(const double*, std::size_t, const double*, std::size_t, double*, std::size_t);
};
extern const Ops scalar_ops;
#ifdef WAVEMOD_HAVE_AVX2_LANE
extern const Ops avx2_ops;
#endif
} // namespace detail

} // namespace wavemod::kernels
