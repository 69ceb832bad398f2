#pragma once
// Periodic wave trains of the comoving equation k^2 D phi'' + omega phi' + f(phi) = 0
// on the 1-periodic grid: Newton solve with a phase condition closing the
// translational degeneracy, continuation in the wavenumber, and the
// gauge-normalized k-derivatives of the family.

#include "wavemod/model.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace wavemod::wavetrain {

// Newton collapsed onto a spatially constant equilibrium; constants solve the
// profile equation with a degenerate omega direction, so this is reported
// distinctly from ordinary divergence.
struct ConstantCollapseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NewtonDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WaveProfile {
  double k = 0.0;
  double omega = 0.0;
  int N = 0;
  int n = 0;
  // component-major samples on zeta_i = i/N, i = 0..N-1
  std::vector<double> phi, dphi, d2phi, d3phi;
  double residual = 0.0;
  int newton_iterations = 0;
  std::vector<double> newton_history; // sup-norm residual per iterate

  double value(int i, int c) const { return phi[static_cast<std::size_t>(c) * N + i]; }
  std::vector<double> grid() const;
  // max over components of (max - min) sample value
  double oscillation() const;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double constant_threshold = 1e-8; // oscillation below this flags collapse
};

// Single-harmonic initial guess: uBar + amplitude * (cos, sin, cos, ...) pattern
// scaled by the leading instability eigenvector when `direction` is given.
struct GuessSpec {
  std::vector<double> u_bar;                // base state, length n
  double amplitude = 0.5;
  std::optional<std::vector<double>> cos_direction; // length n
  std::optional<std::vector<double>> sin_direction; // length n
  double omega = 0.0;
};

std::vector<double> harmonic_guess(const GuessSpec& spec, int n, int N);

// Newton on (phi, omega) with phase condition <phi_ref', phi - phi_ref> = 0,
// phi_ref = guess. Throws ConstantCollapseError / NewtonDivergenceError.
WaveProfile solve_wavetrain(const model::RDSystem& sys, double k,
                            const std::vector<double>& guess_phi, double guess_omega, int N,
                            const SolveOptions& opts = {});
WaveProfile solve_wavetrain(const model::RDSystem& sys, double k, const GuessSpec& guess, int N,
                            const SolveOptions& opts = {});

struct WaveFamily {
  WaveProfile base;
  std::vector<double> ks;             // ascending
  std::vector<WaveProfile> profiles;  // phase anchored to the base profile
  int base_index = -1;
  int failure_count = 0;              // continuation steps that failed (family truncated)

  // gauge-normalized family derivatives at k0 (set by k_derivatives_of_profile)
  std::vector<double> dk_phi, dzk_phi, dzzk_phi, dkk_phi;
  bool has_derivatives = false;

  const std::vector<double>& omega_of_k() const { return omegas_; }
  std::vector<double> omegas_;
};

// Continues base to k0 +/- j*dk, j <= half_count, seeding each solve from its
// neighbor and keeping the phase condition anchored to the base profile.
WaveFamily continue_family(const model::RDSystem& sys, const WaveProfile& base, double dk,
                           int half_count, const SolveOptions& opts = {});

struct DispersionDerivatives {
  double omega1 = 0.0; // omega'(k0)
  double omega2 = 0.0; // omega''(k0)
  double err1 = 0.0;   // Richardson error estimates
  double err2 = 0.0;
};

// Centered differences with Richardson extrapolation; needs >= 2 samples on
// each side of k0.
DispersionDerivatives dispersion_derivatives(const WaveFamily& family);
DispersionDerivatives dispersion_derivatives(const std::vector<double>& ks,
                                             const std::vector<double>& omegas, int center);

// Fills family.dk_phi / dzk_phi / dzzk_phi (and dkk_phi) from centered
// differences of the aligned profiles, gauge-corrected with c*phi0' so that
// <adjoint0, dk_phi> = 1 exactly. adjoint0 is component-major on the profile grid.
void k_derivatives_of_profile(WaveFamily& family, const std::vector<double>& adjoint0);

// L^2(0,1) inner product of component-major real sample vectors: sums over
// all components and divides by the per-component sample count N.
double inner_l2(const std::vector<double>& a, const std::vector<double>& b, int N);

} // namespace wavemod::wavetrain
