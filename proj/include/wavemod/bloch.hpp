#pragma once
// Floquet-Bloch machinery: assembly of the one-period operators
//   L(xi) u = k0^2 D (d/dz + i xi)^2 u + omega0 (d/dz + i xi) u + f'(phi0(z)) u,
// full-spectrum sweeps certifying the diffusive spectral stability conditions,
// continuation of the critical eigenvalue curve with normalized eigenfunctions
// and adjoints, and the modulation coefficients a, d, nu by independent routes.

#include "wavemod/model.hpp"
#include "wavemod/wavetrain.hpp"

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

namespace wavemod::bloch {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct BlochMatrix {
  double xi = 0.0;
  int N = 0;
  int n = 0;
  CMat entries; // (N*n) x (N*n), component-major block order
};

BlochMatrix assemble_bloch(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                           double xi, int N);

// entries * v for a component-major complex sample vector
std::vector<cd> apply(const BlochMatrix& B, const std::vector<cd>& v);

// discrete L^2(0,1) pairing of component-major fields: sums over all
// components, divides by the per-component sample count N
cd inner_l2c(const std::vector<cd>& a, const std::vector<cd>& b, int N);

struct StabilityOptions {
  double origin_radius = 1e-6;  // D3 disk
  double theta_slack = 1e-10;   // D2 reporting slack
  double biorth_floor = 0.05;   // left/right eigenvector product floor
};

struct StabilityReport {
  bool d1_holds = false;
  bool d3_holds = false;
  double d2_theta = 0.0;      // best-fit theta (> 0 when D2 holds)
  double d2_witness_xi = 0.0; // xi at which the theta constraint binds or fails
  double spectral_margin = 0.0; // max over grid of (max Re sigma(L(xi)) + theta xi^2)
  double lambda0_abs = 0.0;   // |eigenvalue of L(0) nearest 0|
  int origin_count = 0;       // eigenvalues of L(0) inside the origin disk
  double biorth = 0.0;        // normalized left/right product at the origin eigenvalue
  int xi_count = 0;
  int N = 0;
  std::vector<double> sweep_xis;      // the sweep half-grid [0, pi]
  std::vector<double> sweep_max_re;   // max Re sigma(L(xi)) per xi
  bool d2_holds() const { return d2_theta > 0.0; }
  bool certified() const { return d1_holds && d2_holds() && d3_holds; }
};

StabilityReport stability_report(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                                 int xi_count, int N, const StabilityOptions& opts = {});

struct CurveOptions {
  double gap_floor_fraction = 0.1; // shrink xi0 where gap < fraction * gap(0)
  double ambiguity_ratio = 0.95;   // two nearly equidistant candidates -> error
};

struct GapCollapseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContinuationAmbiguityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class SpectralCurve {
public:
  std::vector<double> xis;             // symmetric, ascending, includes 0
  std::vector<cd> lambda;              // lambda_c along xis
  std::vector<std::vector<cd>> Phi;     // eigenfunction samples (n*N) per xi
  std::vector<std::vector<cd>> Phi_adj; // adjoint samples, <Phi_adj, Phi> = 1
  double xi0 = 0.0;                    // validated half-width
  double gap0 = 0.0;                   // spectral gap at xi = 0
  int N = 0;
  int n = 0;
  double k0 = 0.0;
  std::vector<double> adjoint0;        // real adjoint at xi=0, <adjoint0, phi0'> = 1

  int index_of_zero() const;
  // cubic-spline interpolation along the curve (|xi| <= xi0)
  cd lambda_at(double xi) const;
  std::vector<cd> phi_at(double xi) const;
  std::vector<cd> phi_adj_at(double xi) const;
  void build_splines(); // called by critical_curve; idempotent

private:
  struct SplineData;
  std::shared_ptr<SplineData> splines_;
};

// Continues the critical eigenpair from xi=0 outward on a uniform grid with
// xi_count points on [0, xi0_request], mirroring to negative xi by conjugation.
// Requires D3 at xi=0 (checked); shrinks xi0 if the spectral gap closes.
SpectralCurve critical_curve(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                             double xi0_request, int xi_count, int N,
                             const CurveOptions& opts = {});

// Real adjoint eigenfunction of L(0)^* at eigenvalue 0 normalized so that
// <adjoint0, phi0'> = 1. Component-major samples.
std::vector<double> adjoint_at_zero(const model::RDSystem& sys,
                                    const wavetrain::WaveProfile& wave, int N);

struct RouteValue {
  double route_a = 0.0;
  double route_b = 0.0;
  double discrepancy = 0.0; // |A - B| / max(|A|, |B|, floor)
};

struct ModulationCoefficients {
  RouteValue a, d, nu;
  std::vector<double> f_p;    // n*N samples of the critical nonlinearity
  double nu_fp = 0.0;         // k0^2 <adjoint0, f_p>  (route A for nu)
  std::vector<cd> A_h_fp_coeffs; // Fourier coefficients of A_h(f_p)
  std::vector<double> A_h_fp;    // samples of A_h(f_p) on the profile grid
  double fit_radius = 0.0;
  bool discrepancy_flagged = false;
};

struct CoefficientOptions {
  double fit_fraction = 0.5;    // fit window = fit_fraction * xi0
  double cross_tol = 1e-3;      // relative cross-check tolerance (flag only)
  double abs_floor = 1e-3;      // discrepancy turns absolute below this scale
};

// Route A: weighted LS fit of lambda_c(xi) ~ i a xi - d xi^2 (odd/even parts).
// Route B: a = omega0 - k0 omega'(k0);
//          d = k0^2 (<adjoint0, D phi0' + 2 k0 D dzk_phi> + omega'(k0));
//          nu = -1/2 k0^2 omega''(k0) vs k0^2 <adjoint0, f_p>.
ModulationCoefficients modulation_coefficients(const model::RDSystem& sys,
                                               const SpectralCurve& curve,
                                               const wavetrain::WaveFamily& family,
                                               const CoefficientOptions& opts = {});

// f_p = 1/2 f''(phi0)(dk_phi, dk_phi) + omega'(k0) dzk_phi + D(phi0'' + 2 k0 dzzk_phi);
// returns samples and fills nu_check = k0^2 <adjoint0, f_p>.
std::vector<double> compute_fp(const model::RDSystem& sys, const wavetrain::WaveFamily& family,
                               const std::vector<double>& adjoint0, double omega1,
                               double* nu_check = nullptr);

// Fourier antiderivative: A_h(g) = sum_{j != 0} c_j/(2 pi i j) e^{2 pi i j z} where
// c_j are the Fourier coefficients of adjoint0^T g; returns samples on the grid.
std::vector<double> antiderivative_operator(const std::vector<double>& g,
                                            const std::vector<double>& adjoint0, int N,
                                            std::vector<cd>* coeffs = nullptr);

// Quadratic-odd/even least-squares fit used by route A; exposed for tests.
struct CurveFit {
  double a = 0.0;      // Im lambda ~ a xi + c3 xi^3
  double d = 0.0;      // Re lambda ~ -d xi^2 + c4 xi^4
  double c3 = 0.0, c4 = 0.0;
  double residual = 0.0; // max |lambda - (i a xi - d xi^2 + i c3 xi^3 + c4 xi^4)| on window
};
CurveFit fit_curve(const SpectralCurve& curve, double fit_radius);

} // namespace wavemod::bloch
