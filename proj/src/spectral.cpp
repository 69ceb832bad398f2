#include "wavemod/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace wavemod::spectral {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

fftw_plan get_plan(int n, bool inverse) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto& entry = cache[n];
  fftw_plan& plan = inverse ? entry.bwd : entry.fwd;
  if (!plan) {
    std::vector<cd> tmp(n);
    auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
    plan = fftw_plan_dft_1d(n, p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  return plan;
}

// Signed spectral index for bin j of an N-point transform. The Nyquist bin of
// an even N is treated as +N/2 with its derivative zeroed for odd orders.
int signed_index(int j, int n) { return j <= n / 2 ? j : j - n; }

} // namespace

void fft(std::vector<cd>& a, bool inverse) {
  if (a.empty()) return;
  fftw_plan plan = get_plan(static_cast<int>(a.size()), inverse);
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(plan, p, p);
}

std::vector<cd> fourier_coeffs(const std::vector<double>& f) {
  std::vector<cd> a(f.begin(), f.end());
  fft(a, false);
  const double inv = 1.0 / static_cast<double>(f.size());
  for (auto& c : a) c *= inv;
  return a;
}

namespace {

std::vector<cd> derivative_coeffs(std::vector<cd> a, int order, double period) {
  const int n = static_cast<int>(a.size());
  for (int j = 0; j < n; ++j) {
    int s = signed_index(j, n);
    if (n % 2 == 0 && j == n / 2 && order % 2 == 1) {
      a[j] = 0.0;
      continue;
    }
    cd ik(0.0, two_pi * s / period);
    cd factor = 1.0;
    for (int o = 0; o < order; ++o) factor *= ik;
    a[j] *= factor;
  }
  return a;
}

} // namespace

std::vector<double> derivative(const std::vector<double>& f, int order, double period) {
  std::vector<cd> a(f.begin(), f.end());
  fft(a, false);
  a = derivative_coeffs(std::move(a), order, period);
  fft(a, true);
  std::vector<double> out(f.size());
  const double inv = 1.0 / static_cast<double>(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = a[i].real() * inv;
  return out;
}

std::vector<cd> derivative(const std::vector<cd>& f, int order, double period) {
  std::vector<cd> a = f;
  fft(a, false);
  a = derivative_coeffs(std::move(a), order, period);
  fft(a, true);
  const double inv = 1.0 / static_cast<double>(f.size());
  for (auto& c : a) c *= inv;
  return a;
}

std::vector<double> shift(const std::vector<double>& f, double shift_amount, double period) {
  const int n = static_cast<int>(f.size());
  std::vector<cd> a(f.begin(), f.end());
  fft(a, false);
  for (int j = 0; j < n; ++j) {
    int s = signed_index(j, n);
    a[j] *= std::exp(cd(0.0, two_pi * s * shift_amount / period));
  }
  fft(a, true);
  std::vector<double> out(n);
  const double inv = 1.0 / n;
  for (int i = 0; i < n; ++i) out[i] = a[i].real() * inv;
  return out;
}

std::vector<cd> resample(const std::vector<cd>& f, int M) {
  const int n = static_cast<int>(f.size());
  std::vector<cd> a = f;
  fft(a, false);
  std::vector<cd> b(M, cd(0.0));
  const int half = std::min(n, M) / 2;
  for (int j = 0; j <= half; ++j) b[j] = a[j];
  for (int j = 1; j < (std::min(n, M) + 1) / 2; ++j) b[M - j] = a[n - j];
  if (std::min(n, M) % 2 == 0 && M > n) {
    // split the Nyquist bin symmetrically when upsampling
    b[half] = a[half] * 0.5;
    b[M - half] = a[half] * 0.5;
  }
  fft(b, true);
  const double inv = 1.0 / n;
  for (auto& c : b) c *= inv;
  return b;
}

std::vector<double> resample(const std::vector<double>& f, int M) {
  std::vector<cd> fc(f.begin(), f.end());
  auto rc = resample(fc, M);
  std::vector<double> out(M);
  for (int i = 0; i < M; ++i) out[i] = rc[i].real();
  return out;
}

TrigInterp::TrigInterp(const std::vector<double>& samples, double period)
    : TrigInterp(std::vector<cd>(samples.begin(), samples.end()), period) {}

TrigInterp::TrigInterp(const std::vector<cd>& samples, double period) : period_(period) {
  const int n = static_cast<int>(samples.size());
  coeff_ = samples;
  fft(coeff_, false);
  const double inv = 1.0 / n;
  wavenum_.resize(n);
  for (int j = 0; j < n; ++j) {
    coeff_[j] *= inv;
    wavenum_[j] = two_pi * signed_index(j, n) / period;
  }
  if (n % 2 == 0) {
    // represent the Nyquist mode as a cosine (split between +/-) so that the
    // interpolant is real for real data
    coeff_[n / 2] *= 1.0; // handled in eval via cos form
  }
}

cd TrigInterp::eval(double x) const {
  const int n = static_cast<int>(coeff_.size());
  cd s(0.0);
  for (int j = 0; j < n; ++j) {
    if (n % 2 == 0 && j == n / 2) {
      s += coeff_[j] * std::cos(wavenum_[j] * x);
    } else {
      s += coeff_[j] * std::exp(cd(0.0, wavenum_[j] * x));
    }
  }
  return s;
}

double TrigInterp::eval_real(double x) const { return eval(x).real(); }

cd TrigInterp::eval_derivative(double x, int order) const {
  const int n = static_cast<int>(coeff_.size());
  cd s(0.0);
  for (int j = 0; j < n; ++j) {
    if (n % 2 == 0 && j == n / 2) {
      if (order % 2 == 1) continue;
      double f = std::pow(-wavenum_[j] * wavenum_[j], order / 2);
      s += coeff_[j] * f * std::cos(wavenum_[j] * x);
      continue;
    }
    cd ik(0.0, wavenum_[j]);
    cd factor = 1.0;
    for (int o = 0; o < order; ++o) factor *= ik;
    s += coeff_[j] * factor * std::exp(cd(0.0, wavenum_[j] * x));
  }
  return s;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  // Newton on Legendre polynomials with the usual asymptotic initial guess.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

Quadrature composite_gl(double a, double b, int panels, int per_panel) {
  std::vector<double> xs, ws;
  gauss_legendre(per_panel, xs, ws);
  Quadrature q;
  q.x.reserve(panels * per_panel);
  q.w.reserve(panels * per_panel);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    for (int i = 0; i < per_panel; ++i) {
      q.x.push_back(lo + 0.5 * h * (xs[i] + 1.0));
      q.w.push_back(0.5 * h * ws[i]);
    }
  }
  return q;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const int n = static_cast<int>(x_.size());
  if (n < 3) throw std::invalid_argument("CubicSpline: need at least 3 points");
  m_.assign(n, 0.0);
  std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
  b[0] = 1.0;
  b[n - 1] = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    double h0 = x_[i] - x_[i - 1];
    double h1 = x_[i + 1] - x_[i];
    a[i] = h0 / 6.0;
    b[i] = (h0 + h1) / 3.0;
    c[i] = h1 / 6.0;
    d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
  }
  // Thomas algorithm
  for (int i = 1; i < n; ++i) {
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m_[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

double CubicSpline::operator()(double x) const {
  const int n = static_cast<int>(x_.size());
  int lo = 0, hi = n - 1;
  if (x <= x_[0]) {
    hi = 1;
  } else if (x >= x_[n - 1]) {
    lo = n - 2;
  } else {
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
  }
  double h = x_[hi] - x_[lo];
  double A = (x_[hi] - x) / h, B = (x - x_[lo]) / h;
  return A * y_[lo] + B * y_[hi] +
         ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[hi]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const int n = static_cast<int>(x_.size());
  int lo = 0, hi = n - 1;
  if (x <= x_[0]) {
    hi = 1;
  } else if (x >= x_[n - 1]) {
    lo = n - 2;
  } else {
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
  }
  double h = x_[hi] - x_[lo];
  double A = (x_[hi] - x) / h, B = (x - x_[lo]) / h;
  return (y_[hi] - y_[lo]) / h +
         ((3 * B * B - 1) * m_[hi] - (3 * A * A - 1) * m_[lo]) * h / 6.0;
}

CubicSplineC::CubicSplineC(const std::vector<double>& x, const std::vector<cd>& y) {
  std::vector<double> re(y.size()), im(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    re[i] = y[i].real();
    im[i] = y[i].imag();
  }
  re_ = CubicSpline(x, re);
  im_ = CubicSpline(x, im);
}

cd CubicSplineC::operator()(double x) const { return {re_(x), im_(x)}; }
cd CubicSplineC::derivative(double x) const { return {re_.derivative(x), im_.derivative(x)}; }

} // namespace wavemod::spectral
