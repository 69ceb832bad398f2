#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemod/bloch.hpp"
#include "wavemod/experiment.hpp"
#include "wavemod/model.hpp"
#include "wavemod/phase_dynamics.hpp"
#include "wavemod/spectral.hpp"
#include "wavemod/wavetrain.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

using namespace wavemod;
namespace ex = wavemod::experiment;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Setup {
  model::RDSystem sys;
  wavetrain::WaveProfile wave;
  wavetrain::WaveFamily family;
  bloch::SpectralCurve curve;
  bloch::ModulationCoefficients mc;
  double omega1;
  Grid grid;
  std::unique_ptr<ex::ExperimentKit> kit_ptr;
  ex::ExperimentKit& kit() const { return *kit_ptr; }
};

Setup& setup() {
  static Setup* st = [] {
    const double rate = 50.0, beta = 0.5, k0 = 0.4418;
    auto sys = model::preset("lambda-omega", {{"rate", rate}, {"beta", beta}});
    double q = two_pi * k0;
    wavetrain::GuessSpec g;
    g.u_bar = {0.0, 0.0};
    g.amplitude = std::sqrt(1.0 - q * q / rate);
    g.cos_direction = std::vector<double>{1.0, 0.0};
    g.sin_direction = std::vector<double>{0.0, 1.0};
    g.omega = -beta * (rate - q * q) / two_pi;
    auto wave = wavetrain::solve_wavetrain(sys, k0, g, 64);
    auto fam = wavetrain::continue_family(sys, wave, 5e-4, 3);
    bloch::CurveOptions copts;
    copts.gap_floor_fraction = 0.02;
    auto curve = bloch::critical_curve(sys, wave, 1.5, 31, wave.N, copts);
    wavetrain::k_derivatives_of_profile(fam, curve.adjoint0);
    auto mc = bloch::modulation_coefficients(sys, curve, fam, {});
    double omega1 = wavetrain::dispersion_derivatives(fam).omega1;
    Grid grid = Grid::centered(40.0, 800);
    auto* s = new Setup{std::move(sys), std::move(wave), std::move(fam), std::move(curve),
                        std::move(mc), omega1, grid, nullptr};
    s->kit_ptr = std::make_unique<ex::ExperimentKit>(s->sys, s->wave, s->family, grid);
    return s;
  }();
  return *st;
}

} // namespace

TEST_CASE("initial data: unperturbed, E0 scaling, wavenumber modulation") {
  auto& s = setup();

  ex::PerturbationSpec spec;
  spec.kind = ex::PerturbationSpec::Kind::phase_front;
  spec.amplitude = 0.0;
  auto zero = s.kit().build_initial_data(spec);
  CHECK(zero.E0 == 0.0);
  double d0 = 0.0;
  for (std::size_t q = 0; q < zero.u0.size(); ++q)
    d0 = std::max(d0, std::abs(zero.u0[q] - s.kit().phi0_tiled()[q]));
  CHECK(d0 == 0.0);

  // E0 = O(delta): halving the plateau gap halves E0
  spec.amplitude = 0.02;
  spec.gamma_minus = 0.0;
  spec.gamma_plus = 1.0;
  auto a = s.kit().build_initial_data(spec);
  CHECK(a.E0 == doctest::Approx(0.02).epsilon(1e-2));
  spec.amplitude = 0.01;
  auto b = s.kit().build_initial_data(spec);
  CHECK(b.E0 == doctest::Approx(0.01).epsilon(1e-2));
  // the built-in phase scales with the amplitude (linear regime)
  double g_ratio = 0.0;
  for (int i = 0; i < s.grid.N; i += 37)
    if (std::abs(b.gamma0[i]) > 1e-6)
      g_ratio = std::max(g_ratio, std::abs(a.gamma0[i] / b.gamma0[i] - 2.0));
  CHECK(g_ratio < 0.05);

  // wavenumber-modulated kind: local wavenumber near the plateaus
  ex::PerturbationSpec wm;
  wm.kind = ex::PerturbationSpec::Kind::wavenumber_modulated;
  wm.amplitude = 0.02;
  auto c = s.kit().build_initial_data(wm);
  CHECK(c.E0 == doctest::Approx(0.02).epsilon(1e-2));
  CHECK(c.gamma0.size() == static_cast<std::size_t>(s.grid.N));
}

TEST_CASE("simulate: equilibrium, translate, step halving") {
  auto& s = setup();
  const auto& phi0 = s.kit().phi0_tiled();

  SUBCASE("wave train is a fixed point") {
    ex::SimOptions so;
    so.dt = 0.02;
    auto traj = s.kit().simulate(phi0, 5.0, {0.0, 2.0, 5.0}, so);
    CHECK_FALSE(traj.blowup);
    double err = 0.0;
    for (std::size_t q = 0; q < phi0.size(); ++q)
      err = std::max(err, std::abs(traj.snaps.back()[q] - phi0[q]));
    CHECK(err < 1e-10);
  }

  SUBCASE("small translate is preserved") {
    const double shift = 0.02;
    std::vector<double> u0(phi0.size());
    const int N = s.grid.N;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> comp(s.wave.phi.begin() + c * s.wave.N,
                               s.wave.phi.begin() + (c + 1) * s.wave.N);
      spectral::TrigInterp ti(comp, 1.0);
      for (int i = 0; i < N; ++i)
        u0[static_cast<std::size_t>(c) * N + i] = ti.eval_real(s.grid.point(i) + shift);
    }
    ex::SimOptions so;
    so.dt = 0.01;
    auto traj = s.kit().simulate(u0, 3.0, {0.0, 3.0}, so);
    double err = 0.0;
    for (std::size_t q = 0; q < u0.size(); ++q)
      err = std::max(err, std::abs(traj.snaps.back()[q] - u0[q]));
    CHECK(err < 1e-6);
  }

  SUBCASE("step halving estimate is small") {
    ex::PerturbationSpec spec;
    spec.amplitude = 0.02;
    auto init = s.kit().build_initial_data(spec);
    ex::SimOptions so;
    so.dt = 0.02;
    so.record_step_halving = true;
    auto traj = s.kit().simulate(init.u0, 2.0, {0.0, 2.0}, so);
    CHECK(traj.step_halving_error >= 0.0);
    CHECK(traj.step_halving_error < 1e-6);
  }
}

TEST_CASE("extract_phase: translates and manufactured modulation") {
  auto& s = setup();
  const int N = s.grid.N;

  auto make_traj = [&](const std::vector<double>& u) {
    ex::Trajectory t;
    t.grid = s.grid;
    t.n = 2;
    t.times = {0.0};
    t.snaps = {u};
    return t;
  };

  SUBCASE("pure translate gives gamma == s") {
    const double shift = 0.13;
    std::vector<double> u(2 * N);
    for (int c = 0; c < 2; ++c) {
      std::vector<double> comp(s.wave.phi.begin() + c * s.wave.N,
                               s.wave.phi.begin() + (c + 1) * s.wave.N);
      spectral::TrigInterp ti(comp, 1.0);
      for (int i = 0; i < N; ++i)
        u[static_cast<std::size_t>(c) * N + i] = ti.eval_real(s.grid.point(i) + shift);
    }
    auto diag = s.kit().extract_phase(make_traj(u));
    for (int i = 0; i < N; i += 17)
      CHECK(diag.gamma[0][i] == doctest::Approx(shift).epsilon(1e-7));
  }

  SUBCASE("unperturbed wave gives gamma == 0") {
    auto diag = s.kit().extract_phase(make_traj(s.kit().phi0_tiled()));
    for (int i = 0; i < N; i += 17) CHECK(std::abs(diag.gamma[0][i]) < 1e-9);
  }

  SUBCASE("manufactured wide front is recovered to 1e-3 on the interior") {
    std::vector<double> gf(N);
    for (int i = 0; i < N; ++i) {
      double z = s.grid.point(i);
      gf[i] = 0.05 * (phase_dynamics::erf_paper(z / 3.0) -
                      phase_dynamics::erf_paper((z - 13.0) / 2.5));
    }
    std::vector<double> u(2 * N);
    for (int c = 0; c < 2; ++c) {
      std::vector<double> comp(s.wave.phi.begin() + c * s.wave.N,
                               s.wave.phi.begin() + (c + 1) * s.wave.N);
      spectral::TrigInterp ti(comp, 1.0);
      for (int i = 0; i < N; ++i)
        u[static_cast<std::size_t>(c) * N + i] = ti.eval_real(s.grid.point(i) + gf[i]);
    }
    auto diag = s.kit().extract_phase(make_traj(u));
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
      if (std::abs(s.grid.point(i)) > 16.0) continue;
      err = std::max(err, std::abs(diag.gamma[0][i] - gf[i]));
    }
    CHECK(err < 1e-3);
  }
}

TEST_CASE("invert_phase_map: constant shift, residual, Taylor defect bound") {
  auto& s = setup();
  const int N = s.grid.N;

  std::vector<double> gamma(N, 0.37);
  auto psi = s.kit().invert_phase_map(gamma);
  for (int i = 0; i < N; i += 53)
    CHECK(psi[i] == doctest::Approx(s.grid.point(i) + 0.37).epsilon(1e-12));

  // smooth non-constant gamma: residual < 1e-10 everywhere
  for (int i = 0; i < N; ++i)
    gamma[i] = 0.2 * std::sin(two_pi * s.grid.point(i) / s.grid.length());
  psi = s.kit().invert_phase_map(gamma);
  Grid g = s.grid;
  spectral::TrigInterp gi(gamma, g.length());
  double rmax = 0.0;
  for (int i = 0; i < N; ++i) {
    double r = std::abs(psi[i] - g.point(i) - gi.eval_real(psi[i] - g.x0));
    rmax = std::max(rmax, r);
  }
  CHECK(rmax < 1e-9);
}

TEST_CASE("nonlinearity evaluators") {
  auto& s = setup();
  const int N = s.grid.N;

  SUBCASE("v = 0, gamma constant: Q = R = S = 0") {
    ex::ExperimentKit::Fields f;
    f.v.assign(2 * N, 0.0);
    f.gamma.assign(N, 0.4);
    f.gamma_t.assign(N, 0.0);
    for (auto kind : {ex::ExperimentKit::NonlinKind::Q, ex::ExperimentKit::NonlinKind::R,
                      ex::ExperimentKit::NonlinKind::S}) {
      auto out = s.kit().nonlinearity_eval(kind, f, s.omega1);
      for (double v : out) CHECK(std::abs(v) < 1e-13);
    }
  }

  SUBCASE("Q is quadratic in v") {
    std::mt19937_64 rng(7);
    ex::ExperimentKit::Fields f;
    f.gamma.assign(N, 0.0);
    f.gamma_t.assign(N, 0.0);
    f.v.resize(2 * N);
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < N; ++i) {
        double x = s.grid.point(i);
        f.v[static_cast<std::size_t>(c) * N + i] =
            std::exp(-x * x / 30.0) * std::cos(0.3 * x + c);
      }
    auto norm_at = [&](double eps) {
      ex::ExperimentKit::Fields fe = f;
      for (auto& v : fe.v) v *= eps;
      auto q = s.kit().nonlinearity_eval(ex::ExperimentKit::NonlinKind::Q, fe, s.omega1);
      double m = 0.0;
      for (double v : q) m = std::max(m, std::abs(v));
      return m;
    };
    double n1 = norm_at(0.01), n2 = norm_at(0.005);
    CHECK(n1 / n2 > 3.7);
    CHECK(n1 / n2 < 4.3);
  }

  SUBCASE("gamma_z bound gate") {
    ex::ExperimentKit::Fields f;
    f.v.assign(2 * N, 0.0);
    f.gamma.resize(N);
    for (int i = 0; i < N; ++i)
      f.gamma[i] = 5.0 * std::sin(two_pi * s.grid.point(i) / s.grid.length());
    f.gamma_t.assign(N, 0.0);
    CHECK_THROWS_AS(s.kit().nonlinearity_eval(ex::ExperimentKit::NonlinKind::Q, f, s.omega1),
                    std::invalid_argument);
  }
}

TEST_CASE("modulated-equation residual on the exact translate") {
  auto& s = setup();
  const int N = s.grid.N;
  std::vector<double> gamma(N), gamma_t(N);
  for (int i = 0; i < N; ++i) {
    double x = s.grid.point(i);
    gamma[i] = 0.01 * std::exp(-x * x / 50.0);
    gamma_t[i] = 0.004 * std::exp(-x * x / 70.0) * std::cos(0.2 * x);
  }
  double defect = s.kit().modulation_residual_check(gamma, gamma_t, 0.05);
  CHECK(defect < 1e-8);
}

TEST_CASE("gamma_z^2 extraction identity (f_p decomposition)") {
  auto& s = setup();
  const int N = s.grid.N;
  double nu_check = 0.0;
  auto fp = bloch::compute_fp(s.sys, s.family, s.curve.adjoint0, s.omega1, &nu_check);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    ex::ExperimentKit::Fields f;
    f.v.resize(2 * N);
    f.gamma.resize(N);
    f.gamma_t.resize(N);
    double c1 = dist(rng), c2 = dist(rng), c3 = dist(rng);
    for (int i = 0; i < N; ++i) {
      double x = s.grid.point(i);
      double env = std::exp(-x * x / 40.0);
      f.gamma[i] = 0.02 * env * (1.0 + 0.5 * c1 * std::sin(0.4 * x));
      f.gamma_t[i] = 0.01 * env * std::cos(0.3 * x + c2);
      f.v[i] = 0.02 * env * std::cos(0.5 * x + c3);
      f.v[N + i] = 0.015 * env * std::sin(0.45 * x - c1);
    }
    double a = s.wave.omega - s.wave.k * s.omega1;
    double defect = s.kit().fp_decomposition_check(f, fp, s.omega1, a);
    CHECK(defect < 1e-6);
  }
}

TEST_CASE("compare_to_hj: zero perturbation gives zero error") {
  auto& s = setup();
  const int N = s.grid.N;
  ex::Trajectory traj;
  traj.grid = s.grid;
  traj.n = 2;
  traj.times = {0.0, 2.0};
  traj.snaps = {s.kit().phi0_tiled(), s.kit().phi0_tiled()};
  auto diag = s.kit().extract_phase(traj);
  std::vector<double> v0(2 * N, 0.0);
  auto cmp = s.kit().compare_to_hj(diag, v0, s.curve.adjoint0, s.mc.a.route_b,
                                   s.mc.d.route_b, s.mc.nu.route_b, 12.0, 0.0);
  for (double e : cmp.err0) CHECK(e < 1e-8);
  for (double e : cmp.err1) CHECK(e < 1e-8);
}
