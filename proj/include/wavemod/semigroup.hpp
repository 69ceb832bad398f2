#pragma once
// Numerical realization of the semigroup decomposition about a wave train:
//   e^{L0 t} = S_e(t) + S_c(t),
//   S_c(t)   = (phi0' + k0 dk_phi d_z) S_p^0(t) + S_r(t),
//   S_p^i(t) = S_h^i(t) + S~_r^i(t),
// with the critical propagators realized as Bloch quadratures over the
// low-frequency window, the heat parts as convective-heat convolutions, and
// the full semigroup as an exact-split (Fourier x pointwise-expm) stepper.

#include "wavemod/bloch.hpp"
#include "wavemod/grid.hpp"
#include "wavemod/phase_dynamics.hpp"

#include <array>
#include <complex>
#include <memory>
#include <vector>

namespace wavemod::semigroup {

using cd = std::complex<double>;

// Smooth frequency/temporal cutoffs built from the standard C^inf bump:
// rho = 1 on |xi| <= xi0/2, 0 on |xi| >= xi0; chi = 0 on [0,1], 1 on [2,inf).
struct CutoffPair {
  double xi0 = 0.0;
  double rho(double xi) const;
  double chi(double t) const;
};

enum class Tag {
  full,
  s_e,
  s_c,
  critical_composed, // (phi0' + k0 dk_phi d_z) S_p^0
  s_p0,
  s_p1,
  s_p2,
  s_h0,
  s_h1,
  s_h2,
  s_tr0,
  s_tr1,
  s_tr2,
  s_r,
};

Tag tag_from_string(const std::string& name);
const char* tag_name(Tag tag);
bool tag_is_scalar(Tag tag); // scalar-valued output (phase-like) vs n-vector

struct ApplyOptions {
  int dz = 0;          // left spatial derivative order (0..2)
  int dt_minus_adz = 0; // (d_t - a d_z)^j, quadrature/heat tags (0..1), j<=2 for s_p*
};

// Exact evolution of d_t v = L0 v on a periodic domain of L whole periods:
// the domain splits into L Bloch fibers xi_m = 2 pi m / L, each a dense
// (n*P)-dimensional matrix diagonalized once. No time-stepping error.
class FiberPropagator {
public:
  FiberPropagator(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                  const Grid& domain);

  std::vector<double> apply(const std::vector<double>& v0, double t) const;
  std::vector<std::vector<double>> apply_snapshots(const std::vector<double>& v0,
                                                   const std::vector<double>& ts) const;

  int points_per_period() const { return P_; }
  int periods() const { return L_; }
  // rightmost spectral abscissa over all fibers except the translational 0
  double damping_abscissa() const { return abscissa_; }

private:
  struct Fiber {
    Eigen::VectorXcd lambda;
    Eigen::MatrixXcd V;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu; // factorization of V
    std::vector<cd> phase; // e^{i xi_m (x0 + p dx)} per class p
  };
  Grid grid_;
  int n_ = 0, P_ = 0, L_ = 0;
  double abscissa_ = 0.0;
  std::vector<Fiber> fibers_;
};

struct KitOptions {
  int nodes_per_panel = 10;
  int panels = 96;        // composite GL panels on [0, xi0]
  double stepper_dt = 0.01;
  double margin_pad = 5.0;
  double diffusion_speed_factor = 6.0; // influence margin: |drift| t + c sqrt(Dmax t)
};

// Weights W_i(xi_q) = Int e^{-i xi x} (d^i Phi~_xi(x))^* v0(x) dx, reusable
// across tags, times and derivative orders for a fixed v0.
struct NodeWeights {
  std::vector<cd> w0, w1, w2;
};

class SemigroupKit {
public:
  SemigroupKit(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
               const bloch::SpectralCurve& curve, const wavetrain::WaveFamily& family,
               double a, double d, const Grid& domain, const KitOptions& opts = {});

  const CutoffPair& cutoffs() const { return cut_; }
  const Grid& domain() const { return grid_; }
  double drift_a() const { return a_; }
  double diffusion_d() const { return d_; }

  // v0 is component-major (n * N) for all tags; scalar tags return N samples,
  // vector tags n*N.
  std::vector<double> apply(Tag tag, const std::vector<double>& v0, double t,
                            const ApplyOptions& o = {}) const;

  NodeWeights weights_for(const std::vector<double>& v0) const;
  std::vector<double> apply_quadrature(Tag tag, const NodeWeights& w, double t,
                                       const ApplyOptions& o = {}) const;

  // exact-split linear stepper for e^{L0 t} on the periodic domain
  std::vector<double> full_evolve(const std::vector<double>& v0, double t) const;
  std::vector<std::vector<double>> full_evolve_snapshots(const std::vector<double>& v0,
                                                         const std::vector<double>& ts) const;

  // L0 v by spectral differentiation (used for time derivatives of `full`)
  std::vector<double> apply_generator(const std::vector<double>& v) const;

  // window shrink for the influence cone at time t
  double interior_margin(double t) const;

  // pointwise principal Green's function row G_p^i(x, xt, t) by adaptive
  // panel-doubling quadrature (n components)
  std::vector<cd> greens_principal(int i, double x, double xt, double t,
                                   double tol = 1e-8) const;

  int points_per_period() const { return P_; }

private:
  std::vector<double> heat_part(int i, const std::vector<double>& v0, double t,
                                const ApplyOptions& o) const;
  std::vector<double> spectral_dz(const std::vector<double>& field, int order,
                                  int components) const;

  const model::RDSystem* sys_;
  wavetrain::WaveProfile wave_;
  bloch::SpectralCurve curve_;
  Grid grid_;
  CutoffPair cut_;
  KitOptions opts_;
  std::unique_ptr<FiberPropagator> fiber_;
  double a_ = 0.0, d_ = 0.0;
  int n_ = 0, P_ = 0, L_ = 0;

  // quadrature nodes on (0, xi0]; negative side handled by conjugation
  std::vector<double> node_xi_, node_w_, node_rho_;
  std::vector<cd> node_lambda_;
  // per node, per-period complex fields (n * P): adjoint derivatives 0..2 and Phi
  std::vector<std::array<std::vector<cd>, 3>> node_adj_;
  std::vector<std::vector<cd>> node_phi_;
  // per-period real fields on the P-grid
  std::vector<double> dphi_P_, dkphi_P_;                 // n*P
  std::vector<std::vector<std::vector<double>>> adj0_P_; // [deriv 0..2][c][P]
};

struct ProbeResult {
  std::vector<double> ts, norms;
  double slope = 0.0;
  double prefactor = 0.0;
  double r2 = 0.0;
  int used = 0; // points above the noise floor used in the fit
};

// sup norms over a family of test functions on the interior window, log-log fit.
ProbeResult decay_rate_probe(const SemigroupKit& kit, Tag tag, const ApplyOptions& o,
                             const std::vector<std::vector<double>>& test_functions,
                             const std::vector<double>& t_grid, double noise_floor = 1e-11);

struct CommutatorDefects {
  double first = 0.0;  // d_z S_p0 - S_p0 d_z - S_p1
  double second = 0.0; // d_z^2 S_p0 - S_p0 d_z^2 - 2 d_z S_p1 + S_p2
};

CommutatorDefects commutator_check(const SemigroupKit& kit, const std::vector<double>& v0,
                                   const std::vector<double>& ts, double window_shrink = 0.25);

struct OscillatoryBoundResult {
  double max_ratio = 0.0;
  double mu = 0.0; // fitted quadratic-decay constant of Re lambda
  std::vector<double> ratios;
};

struct HypothesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lemma-style bound: | Int rho(xi) e^{t lambda(xi)} xi^m e^{i xi x} dxi | against
// t^{-(m+1)/2} (1 + (x + a t)^4 / t^2)^{-1} over an (x, t) grid.
OscillatoryBoundResult oscillatory_bound_check(const std::vector<double>& xis,
                                               const std::vector<cd>& lambdas, int m,
                                               const CutoffPair& cut,
                                               const std::vector<double>& xs,
                                               const std::vector<double>& ts,
                                               int quad_nodes = 2048);

} // namespace wavemod::semigroup
