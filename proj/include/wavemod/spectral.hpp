#pragma once
// Periodic pseudospectral helpers built on FFTW: derivatives, Fourier
// interpolation / shifting, resampling, plus Gauss-Legendre nodes and cubic
// splines used by the Bloch-curve quadratures.

#include <complex>
#include <vector>

namespace wavemod::spectral {

using cd = std::complex<double>;

// Forward/backward c2c FFT (backward is unnormalized inverse; divide by N).
void fft(std::vector<cd>& a, bool inverse);

// Fourier coefficients c_j = (1/N) sum_m f[m] e^{-2pi i j m / N} of a real
// N-sample 1-periodic function, j indexed FFTW-style (0, 1, .., -1).
std::vector<cd> fourier_coeffs(const std::vector<double>& f);

// d^order/dx^order of an N-sample function with period `period` (real data).
std::vector<double> derivative(const std::vector<double>& f, int order, double period = 1.0);
std::vector<cd> derivative(const std::vector<cd>& f, int order, double period = 1.0);

// Translate samples: returns g with g[m] = f(x_m + shift) (period `period`).
std::vector<double> shift(const std::vector<double>& f, double shift_amount, double period = 1.0);

// Resample an N-point periodic function to M points on the same period.
std::vector<double> resample(const std::vector<double>& f, int M);
std::vector<cd> resample(const std::vector<cd>& f, int M);

// Trigonometric (exact) evaluation of the interpolant at arbitrary x.
double interp_value(const std::vector<double>& f, double x, double period = 1.0);
cd interp_value(const std::vector<cd>& f, double x, double period = 1.0);

// Evaluates the interpolant at many points; O((N + P) log ...) via coefficient reuse.
class TrigInterp {
public:
  explicit TrigInterp(const std::vector<double>& samples, double period = 1.0);
  explicit TrigInterp(const std::vector<cd>& samples, double period = 1.0);
  cd eval(double x) const;
  double eval_real(double x) const;
  cd eval_derivative(double x, int order) const;

private:
  std::vector<cd> coeff_;
  std::vector<double> wavenum_; // 2*pi*j/period, FFTW index order
  double period_;
};

// Gauss-Legendre rule on [-1,1]; nodes ascending.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Composite Gauss-Legendre over [a,b] with `panels` equal panels.
struct Quadrature {
  std::vector<double> x, w;
};
Quadrature composite_gl(double a, double b, int panels, int per_panel);

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  double derivative(double x) const;

private:
  std::vector<double> x_, y_, m_; // m_: second derivatives
};

// Complex-valued spline (independent re/im splines).
class CubicSplineC {
public:
  CubicSplineC() = default;
  CubicSplineC(const std::vector<double>& x, const std::vector<cd>& y);
  cd operator()(double x) const;
  cd derivative(double x) const;

private:
  CubicSpline re_, im_;
};

} // namespace wavemod::spectral
