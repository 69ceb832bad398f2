#pragma once
// Full nonlinear simulation about a wave train with bounded nonlocalized
// perturbations, spatio-temporal phase extraction, decay-rate measurement for
// the modulated norms, comparison against the viscous Hamilton-Jacobi
// prediction, and the phase-map inversion diagnostics.

#include "wavemod/bloch.hpp"
#include "wavemod/grid.hpp"
#include "wavemod/semigroup.hpp"
#include "wavemod/wavetrain.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wavemod::experiment {

struct PerturbationSpec {
  enum class Kind { phase_front, wavenumber_modulated, additive_random, additive_custom };
  Kind kind = Kind::phase_front;
  double amplitude = 0.02;     // target E0 = ||v0||_{W^{2,inf}}
  double gamma_minus = 0.0;    // front plateaus (phase units, pre-scaling shape)
  double gamma_plus = 1.0;
  double interface_width = 1.5;
  double ramp_fraction = 0.32; // return ramp center as a fraction of L
  double ramp_width_fraction = 0.06;
  std::uint64_t seed = 0;
  double smoothing_width = 1.0;
  std::vector<double> custom;  // additive_custom: v0 samples (n*N)
  double e0_gate = 0.25;       // reject data with measured E0 above this
};

struct InitialData {
  std::vector<double> u0;     // n*N
  std::vector<double> v0;     // u0 - phi0
  std::vector<double> gamma0; // built-in phase offset (empty for additive kinds)
  double E0 = 0.0;            // measured ||v0||_{W^{2,inf}}
};

struct Trajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> snaps; // u(t) samples, n*N each
  double dt = 0.0;
  int n = 0;
  bool blowup = false;
  double step_halving_error = -1.0; // filled when requested
};

struct ExtractOptions {
  double window_sigma = 0.5;        // Gaussian window width (periods)
  double window_halfwidth = 2.5;    // truncation in units of sigma
  int oversample = 16;              // Fourier oversampling for u interpolation
  int newton_iters = 12;
  double newton_tol = 1e-11;
  double smooth_sigma = 0.5;        // Gaussian smoothing before derivatives
  double max_fail_fraction = 0.01;
  double jump_threshold = 0.5;      // unwrap failure threshold (periods)
};

struct PhaseDiagnostics {
  std::vector<double> times;
  std::vector<std::vector<double>> gamma;    // scalar field per snapshot
  std::vector<std::vector<double>> gamma_z, gamma_zz;
  std::vector<std::vector<double>> gamma_t;  // from local quadratic fits in t
  double max_gamma_z = 0.0;                  // invertibility gate sup over run
};

struct FitResult {
  double slope = 0.0;
  double ci = 0.0;        // 2-sigma confidence half-width
  double log_slope = 0.0; // power after removing a log(2+t) factor
  double log_ci = 0.0;
  double prefactor = 0.0;
};

struct NormSeries {
  std::vector<double> ts;
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, FitResult> fits;
};

struct HJComparison {
  std::vector<double> ts;
  std::vector<double> err0, err1;  // ||d^j (gamma - gamma_breve)||_inf, j = 0, 1
  std::vector<double> gamma_norm;  // ||gamma||_inf for the ratio series
  bool ratio_decreasing = false;
};

struct CorollaryResult {
  std::vector<double> ts;
  std::vector<double> norm_translate;  // ||u - phi0(. + gamma)||_inf
  std::vector<double> norm_family;     // wavenumber-corrected comparison
  double max_fixed_point_residual = 0.0;
  double max_taylor_defect_margin = 0.0; // max over snapshots of (lhs - rhs); <= 0 when the bound holds
  double max_gamma_z_shift_defect = 0.0; // same for the gamma_z shift bound
  FitResult fit_translate, fit_family;
};

struct SimOptions {
  double dt = 0.02;
  double blowup_cap = 1e3;
  bool record_step_halving = false;
  double halving_horizon = 2.0;
};

class ExperimentKit {
public:
  ExperimentKit(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                const wavetrain::WaveFamily& family, const Grid& domain);

  const Grid& domain() const { return grid_; }
  int points_per_period() const { return P_; }
  const std::vector<double>& phi0_tiled() const { return phi0_; }

  InitialData build_initial_data(const PerturbationSpec& spec) const;

  Trajectory simulate(const std::vector<double>& u0, double T,
                      const std::vector<double>& snapshot_times,
                      const SimOptions& opts = {}) const;

  PhaseDiagnostics extract_phase(const Trajectory& traj,
                                 const std::vector<double>* gamma0 = nullptr,
                                 const ExtractOptions& opts = {}) const;

  // interior-window norms of every main-theorem quantity + log-log fits.
  // window tracks the drift -a t; half-width in domain units.
  NormSeries measure_decay(const Trajectory& traj, const PhaseDiagnostics& diag, double a,
                           double window_half, double t_min) const;

  // gamma_breve(0) = adjoint0^T v0 pointwise; adjoint0_profile on the profile grid
  HJComparison compare_to_hj(const PhaseDiagnostics& diag, const std::vector<double>& v0,
                             const std::vector<double>& adjoint0_profile, double a, double d,
                             double nu, double window_half, double t_min) const;

  std::vector<double> invert_phase_map(const std::vector<double>& gamma,
                                       double tol = 1e-10) const;

  CorollaryResult corollary_check(const Trajectory& traj, const PhaseDiagnostics& diag,
                                  double a, double window_half, double t_min) const;

  // nonlinearity evaluators (component-major outputs)
  struct Fields {
    std::vector<double> v;        // n*N
    std::vector<double> gamma;    // N
    std::vector<double> gamma_t;  // N
  };
  enum class NonlinKind { Q, R, S, Q_p, R_p, S_p };
  std::vector<double> nonlinearity_eval(NonlinKind kind, const Fields& f,
                                        double omega1) const;
  // full N(v, gamma, gamma_t) = Q + dz R + dzz S
  std::vector<double> nonlinearity_full(const Fields& f) const;

  // defect of (d_t - L0)[v + phi0' gamma - gamma_z v] = N for v built from the
  // translate u = phi0(. + s0) through the modulated ansatz
  double modulation_residual_check(const std::vector<double>& gamma,
                                   const std::vector<double>& gamma_t, double s0) const;

  // defect of N(v,gamma,gamma_t) = k0^2 f_p gamma_z^2 + N_p(z, v, gamma, gamma~)
  double fp_decomposition_check(const Fields& f, const std::vector<double>& fp_profile,
                                double omega1, double a) const;

  const semigroup::FiberPropagator& linear_propagator() const { return *fiber_; }

private:
  std::vector<double> tile(const std::vector<double>& profile_field, int comps) const;
  std::vector<double> dz(const std::vector<double>& field, int order, int comps) const;
  std::vector<double> family_state(double gamma, double kdev, int pclass) const;

  const model::RDSystem* sys_;
  wavetrain::WaveProfile wave_;
  wavetrain::WaveFamily family_;
  Grid grid_;
  int n_ = 0, P_ = 0, L_ = 0, rot_ = 0;
  std::vector<double> phi0_, dphi_, d2phi_, dkphi_, dzkphi_, dkkphi_; // tiled n*N
  std::vector<double> f_phi0_;  // f(phi0) tiled
  std::vector<double> df_phi0_; // df(phi0) tiled (n*n*N)
  std::unique_ptr<semigroup::FiberPropagator> fiber_;
};

// geometric snapshot schedule: {0, t0, t0 r, ..., >= T}
std::vector<double> snapshot_schedule(double t0, double ratio, double T);

} // namespace wavemod::experiment
