#pragma once
// Phase-dynamics solvers: the convective heat propagator by exact kernel
// convolution (exact on piecewise-cubic data, affine tails beyond the grid),
// the viscous Hamilton-Jacobi equation via Cole-Hopf, the viscous Burgers'
// equation, explicit front solutions with analytic derivatives, and the
// quasilinear Hamilton-Jacobi / Whitham equations driven by dispersion tables.

#include "wavemod/grid.hpp"
#include "wavemod/spectral.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace wavemod::phase_dynamics {

struct ColeHopfPositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainTooSmallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalization with erf_paper(0) = 1/2, erf_paper(+inf) = 1:
// erf_paper(x) = (1/sqrt(4 pi)) Int_{-inf}^x exp(-y^2/4) dy.
double erf_paper(double x);

// convective heat kernel H(x,t) = exp(-(x+a t)^2/(4 d t)) / sqrt(4 pi d t)
double heat_kernel(double x, double t, double a, double d);

struct PhaseField {
  Grid grid;
  std::vector<double> samples;
  double time = 0.0;
  double a = 0.0, d = 0.0, nu = 0.0;
};

// Precomputed FIR weights for w -> e^{(d dzz + a dz) t} w on a uniform grid.
// Exact for piecewise-cubic data; data are extended affinely beyond the grid
// and the remaining Gaussian tails are added in closed form.
class HeatPropagator {
public:
  // periodic = true wraps the data around the grid instead of extending it
  // affinely (used for L-periodic experiment data)
  HeatPropagator(const Grid& g, double t, double a, double d, double support_sigmas = 12.0,
                 bool periodic = false);

  std::vector<double> apply(const std::vector<double>& w0) const;
  // d/dx of the propagated field (exact derivative weights, not FD)
  std::vector<double> apply_derivative(const std::vector<double>& w0) const;

private:
  std::vector<double> extend(const std::vector<double>& w0) const;
  std::vector<double> run(const std::vector<double>& w0, const std::vector<double>& weights,
                          bool derivative) const;

  Grid grid_;
  double t_, a_, d_, sigma_;
  bool periodic_ = false;
  int offset_ = 0;  // tap offset: out_i uses wext[i + offset_ .. +K-1]
  int ghost_ = 0;   // affine ghost cells on each side
  std::vector<double> w_val_, w_der_;
};

// e^{(d dzz + a dz) t} w0; t = 0 returns w0.
std::vector<double> heat_solve(const std::vector<double>& w0, const Grid& g, double t, double a,
                               double d);

// Viscous Hamilton-Jacobi d_t g = d g_zz + a g_z + nu g_z^2 via Cole-Hopf;
// nu = 0 falls back to heat_solve. Throws ColeHopfPositivityError when
// 1 + heat(e^{(nu/d) g0} - 1) is not positive.
PhaseField hj_solve(const std::vector<double>& gamma0, const Grid& g, double t, double a,
                    double d, double nu);

// Viscous Burgers d_t k = d k_zz + a k_z + nu (k^2)_z for k = gamma_z;
// integrates k0bar to a phase, applies hj_solve, differentiates exactly.
PhaseField burgers_solve(const std::vector<double>& k0bar, const Grid& g, double t, double a,
                         double d, double nu);

// Monotone front solutions (nu = 0: erf profile; nu != 0: log of 1 + beta erf).
double front_solution(double gamma_minus, double gamma_plus, double x, double t, double a,
                      double d, double nu);

// Analytic space/time derivatives of the front: d_x^j (d_t - a d_x)^l gamma_f
// for j in {0,1,2,3}, l in {0,1}.
double front_derivative(double gamma_minus, double gamma_plus, double x, double t, double a,
                        double d, double nu, int j, int l);

// residual of d_t g - d g_xx - a g_x - nu g_x^2 on the front formula
double front_residual(double gamma_minus, double gamma_plus, double x, double t, double a,
                      double d, double nu);

struct FrontDecayFit {
  double slope = 0.0;          // log-log fitted exponent of the norm in (1+t)
  double expected = 0.0;       // -(j/2 + l)
  double two_sided_constant = 0.0; // max over t of max(ratio, 1/ratio) vs max|gamma_pm|
  std::vector<double> ts, norms;
};

FrontDecayFit front_decay_rates(double gamma_minus, double gamma_plus, int j, int l,
                                const std::vector<double>& t_grid, double a, double d, double nu,
                                double u_half_width = 40.0);

// Direct IMEX integration (Strang: Crank-Nicolson diffusion + explicit
// midpoint transport/nonlinearity), the Cole-Hopf-independent oracle.
std::vector<double> hj_solve_imex(const std::vector<double>& gamma0, const Grid& g, double t,
                                  double a, double d, double nu, double dt);
std::vector<double> burgers_solve_imex(const std::vector<double>& k0bar, const Grid& g, double t,
                                       double a, double d, double nu, double dt);

// Dispersion tables for the quasilinear equations: omega(k) and d(k) sampled
// on a k-grid (cubic splines in between).
struct DispersionTables {
  std::vector<double> ks;
  std::vector<double> omega;
  std::vector<double> deff;
  double k0 = 0.0;

  spectral::CubicSpline omega_spline() const { return {ks, omega}; }
  spectral::CubicSpline deff_spline() const { return {ks, deff}; }
};

// Whitham equation d_t kap = (d(k0 kap) kap_z)_z + (omega(k0) kap - omega(k0 kap))_z
std::vector<double> whitham_solve(const std::vector<double>& kappa0, const Grid& g, double t,
                                  const DispersionTables& tables, double dt);

// Quasilinear Hamilton-Jacobi d_t Y = d(k0 Y_z) Y_zz + omega(k0) Y_z - omega(k0 Y_z)
std::vector<double> hj2_solve(const std::vector<double>& upsilon0, const Grid& g, double t,
                              const DispersionTables& tables, double dt);

} // namespace wavemod::phase_dynamics
