#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wavemod/bloch.hpp"
#include "wavemod/model.hpp"
#include "wavemod/phase_dynamics.hpp"
#include "wavemod/semigroup.hpp"
#include "wavemod/spectral.hpp"
#include "wavemod/wavetrain.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace wavemod;
namespace sg = wavemod::semigroup;
using sg::Tag;
using bloch::cd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Setup {
  model::RDSystem sys;
  wavetrain::WaveProfile wave;
  wavetrain::WaveFamily family;
  bloch::SpectralCurve curve;
  bloch::ModulationCoefficients mc;
  Grid grid;
  std::unique_ptr<sg::SemigroupKit> kit_ptr;
  sg::SemigroupKit& kit() const { return *kit_ptr; }
};

Setup& setup() {
  static Setup* s = [] {
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
    auto curve = bloch::critical_curve(sys, wave, 2.5, 51, wave.N, copts);
    wavetrain::k_derivatives_of_profile(fam, curve.adjoint0);
    auto mc = bloch::modulation_coefficients(sys, curve, fam, {});
    Grid grid = Grid::centered(60.0, 1200); // 20 points per period
    auto* st = new Setup{std::move(sys), std::move(wave), std::move(fam), std::move(curve),
                         std::move(mc), grid, nullptr};
    sg::KitOptions kopts;
    kopts.panels = 64;
    kopts.stepper_dt = 0.02;
    st->kit_ptr = std::make_unique<sg::SemigroupKit>(st->sys, st->wave, st->curve, st->family,
                                                     st->mc.a.route_b, st->mc.d.route_b, grid,
                                                     kopts);
    return st;
  }();
  return *s;
}

// compactly modulated smooth vector field: bump(x) * (mix of profile harmonics)
std::vector<double> bump_field(const Grid& g, int n, double width = 6.0, double shift = 0.0) {
  std::vector<double> v(static_cast<std::size_t>(n) * g.N, 0.0);
  for (int i = 0; i < g.N; ++i) {
    double x = g.point(i) - shift;
    double env = std::exp(-x * x / (2.0 * width * width));
    for (int c = 0; c < n; ++c)
      v[static_cast<std::size_t>(c) * g.N + i] =
          env * (c == 0 ? 1.0 : 0.6) * std::cos(two_pi * x * (0.04 + 0.02 * c));
  }
  return v;
}

std::vector<double> tiled_dphi(const Setup& s) {
  std::vector<double> v(static_cast<std::size_t>(s.sys.n()) * s.grid.N);
  const int P = s.kit().points_per_period();
  auto dphiP = std::vector<double>(static_cast<std::size_t>(s.sys.n()) * P);
  for (int c = 0; c < s.sys.n(); ++c) {
    std::vector<double> comp(s.wave.dphi.begin() + static_cast<std::size_t>(c) * s.wave.N,
                             s.wave.dphi.begin() + static_cast<std::size_t>(c + 1) * s.wave.N);
    auto r = spectral::resample(comp, P);
    for (int i = 0; i < s.grid.N; ++i)
      v[static_cast<std::size_t>(c) * s.grid.N + i] = r[i % P];
  }
  return v;
}

double sup_window(const std::vector<double>& f, const Grid& g, int comps, double half) {
  double m = 0.0;
  for (int i = 0; i < g.N; ++i) {
    if (std::abs(g.point(i)) > half) continue;
    for (int c = 0; c < comps; ++c)
      m = std::max(m, std::abs(f[static_cast<std::size_t>(c) * g.N + i]));
  }
  return m;
}

} // namespace

TEST_CASE("cutoffs: support, range, sampled C^4 boundedness") {
  sg::CutoffPair cut{0.8};
  CHECK(cut.rho(0.0) == 1.0);
  CHECK(cut.rho(0.39) == 1.0);
  CHECK(cut.rho(0.81) == 0.0);
  CHECK(cut.rho(-0.81) == 0.0);
  CHECK(cut.chi(0.0) == 0.0);
  CHECK(cut.chi(1.0) == 0.0);
  CHECK(cut.chi(2.0) == 1.0);
  for (double xi = -1.0; xi <= 1.0; xi += 0.01) {
    CHECK(cut.rho(xi) >= 0.0);
    CHECK(cut.rho(xi) <= 1.0);
    CHECK(cut.rho(xi) == cut.rho(-xi)); // even
  }
  // sampled 4th difference stays bounded (C^4 with bounded derivatives)
  const double h = 1e-3;
  double max4 = 0.0;
  for (double xi = 0.3; xi <= 0.9; xi += 0.002) {
    double d4 = (cut.rho(xi - 2 * h) - 4 * cut.rho(xi - h) + 6 * cut.rho(xi) -
                 4 * cut.rho(xi + h) + cut.rho(xi + 2 * h)) /
                (h * h * h * h);
    max4 = std::max(max4, std::abs(d4));
  }
  CHECK(max4 < 1e7); // bounded (scale ~ (2/xi0)^4 * sup|step''''|)
}

TEST_CASE("full semigroup: phi0' invariant, generator consistency") {
  auto& s = setup();
  auto v0 = tiled_dphi(s);
  for (double t : {1.0, 5.0}) {
    auto v = s.kit().full_evolve(v0, t);
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(v[i] - v0[i]));
    CHECK(err < 1e-7); // L0 phi0' = 0
  }

  // small-t expansion: ||v(t) - v0 - t L0 v0|| = O(t^2)
  auto w0 = bump_field(s.grid, s.sys.n());
  auto Lw = s.kit().apply_generator(w0);
  auto defect = [&](double t) {
    auto v = s.kit().full_evolve(w0, t);
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      m = std::max(m, std::abs(v[i] - w0[i] - t * Lw[i]));
    return m;
  };
  double e1 = defect(0.02), e2 = defect(0.01);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.0);
}

TEST_CASE("quadrature identity: S_c = (phi0' + k0 dkphi dz) S_p0 + S_r exactly") {
  auto& s = setup();
  auto v0 = bump_field(s.grid, s.sys.n());
  for (double t : {2.0, 7.5}) {
    auto sc = s.kit().apply(Tag::s_c, v0, t);
    auto comp = s.kit().apply(Tag::critical_composed, v0, t);
    auto sr = s.kit().apply(Tag::s_r, v0, t);
    double defect = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < sc.size(); ++i) {
      defect = std::max(defect, std::abs(sc[i] - comp[i] - sr[i]));
      scale = std::max(scale, std::abs(sc[i]));
    }
    CHECK(defect < 1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("S_p0(0) = 0 and S~_r = -S_h on (0,1]") {
  auto& s = setup();
  auto v0 = bump_field(s.grid, s.sys.n());
  auto sp = s.kit().apply(Tag::s_p0, v0, 0.9);
  for (double v : sp) CHECK(v == 0.0);
  auto sp0 = s.kit().apply(Tag::s_p0, v0, 0.0);
  for (double v : sp0) CHECK(v == 0.0);

  for (double t : {0.4, 1.0}) {
    auto str = s.kit().apply(Tag::s_tr0, v0, t);
    auto sh = s.kit().apply(Tag::s_h0, v0, t);
    double defect = 0.0;
    for (std::size_t i = 0; i < str.size(); ++i)
      defect = std::max(defect, std::abs(str[i] + sh[i]));
    CHECK(defect == doctest::Approx(0.0));
  }
}

TEST_CASE("decomposition consistency: full = S_e + S_c by construction; S_e small at late t") {
  auto& s = setup();
  auto v0 = bump_field(s.grid, s.sys.n(), 4.0);
  const double t = 30.0;
  auto full = s.kit().apply(Tag::full, v0, t);
  auto se = s.kit().apply(Tag::s_e, v0, t);
  auto sc = s.kit().apply(Tag::s_c, v0, t);
  double defect = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i)
    defect = std::max(defect, std::abs(full[i] - se[i] - sc[i]));
  CHECK(defect < 1e-12);

  // the residual part has genuinely decayed relative to the initial data
  double n0 = sup_window(v0, s.grid, s.sys.n(), 25.0);
  double ne = 0.0;
  for (double v : se) ne = std::max(ne, std::abs(v));
  CHECK(ne < 0.05 * n0);
}

TEST_CASE("heat-semigroup expansion of S_h0 on products g*v") {
  auto& s = setup();
  const int N = s.grid.N, n = s.sys.n(), P = s.kit().points_per_period();
  // g = phi0' (1-periodic), v = smooth compact scalar
  std::vector<double> v(N);
  for (int i = 0; i < N; ++i) {
    double x = s.grid.point(i);
    v[i] = std::exp(-x * x / 30.0) * (1.0 + 0.4 * std::sin(0.2 * x));
  }
  auto gv = tiled_dphi(s);
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < N; ++i) gv[static_cast<std::size_t>(c) * N + i] *= v[i];

  const double t = 3.0;
  auto lhs = s.kit().apply(Tag::s_h0, gv, t);

  // rhs: e^{(d dzz + a dz)t}(<adj0, g> v - A_h(g) v') + dz e^{(d dzz + a dz)t}(A_h(g) v)
  double ip = wavetrain::inner_l2(s.curve.adjoint0, s.wave.dphi, s.wave.N);
  auto Ah = bloch::antiderivative_operator(s.wave.dphi, s.curve.adjoint0, s.wave.N);
  auto AhP = spectral::resample(Ah, P);
  std::vector<double> vprime(N);
  {
    auto d1 = spectral::derivative(v, 1, s.grid.length());
    vprime = d1;
  }
  std::vector<double> in1(N), in2(N);
  for (int i = 0; i < N; ++i) {
    in1[i] = ip * v[i] - AhP[i % P] * vprime[i];
    in2[i] = AhP[i % P] * v[i];
  }
  phase_dynamics::HeatPropagator prop(s.grid, t, s.kit().drift_a(), s.kit().diffusion_d());
  auto rhs = prop.apply(in1);
  auto rhs2 = prop.apply_derivative(in2);
  double defect = 0.0;
  for (int i = 0; i < N; ++i) {
    if (std::abs(s.grid.point(i)) > 18.0) continue;
    defect = std::max(defect, std::abs(lhs[i] - rhs[i] - rhs2[i]));
  }
  CHECK(defect < 1e-6);
}

TEST_CASE("commutator identities") {
  auto& s = setup();
  auto v0 = bump_field(s.grid, s.sys.n(), 5.0);
  auto defects = sg::commutator_check(s.kit(), v0, {2.0, 10.0});
  CHECK(defects.first < 1e-6);
  CHECK(defects.second < 1e-6);
  // both sides vanish for t <= 1
  auto early = sg::commutator_check(s.kit(), v0, {0.5});
  CHECK(early.first == 0.0);
  CHECK(early.second == 0.0);
}

namespace {

// zero-drift preset for the probe test: beta = 0 removes the group-velocity
// drift so the compact test data stay inside the periodic window
Setup& setup_nodrift() {
  static Setup* s = [] {
    const double rate = 50.0, k0 = 0.4418;
    auto sys = model::preset("lambda-omega", {{"rate", rate}, {"beta", 0.0}});
    double q = two_pi * k0;
    wavetrain::GuessSpec g;
    g.u_bar = {0.0, 0.0};
    g.amplitude = std::sqrt(1.0 - q * q / rate);
    g.cos_direction = std::vector<double>{1.0, 0.0};
    g.sin_direction = std::vector<double>{0.0, 1.0};
    g.omega = 0.0;
    auto wave = wavetrain::solve_wavetrain(sys, k0, g, 64);
    auto fam = wavetrain::continue_family(sys, wave, 5e-4, 3);
    bloch::CurveOptions copts;
    copts.gap_floor_fraction = 0.02;
    auto curve = bloch::critical_curve(sys, wave, 2.5, 51, wave.N, copts);
    wavetrain::k_derivatives_of_profile(fam, curve.adjoint0);
    auto mc = bloch::modulation_coefficients(sys, curve, fam, {});
    Grid grid = Grid::centered(60.0, 1200);
    auto* st = new Setup{std::move(sys), std::move(wave), std::move(fam), std::move(curve),
                         std::move(mc), grid, nullptr};
    sg::KitOptions kopts;
    kopts.panels = 64;
    st->kit_ptr = std::make_unique<sg::SemigroupKit>(st->sys, st->wave, st->curve, st->family,
                                                     st->mc.a.route_b, st->mc.d.route_b, grid,
                                                     kopts);
    return st;
  }();
  return *s;
}

} // namespace

TEST_CASE("decay probes: principal, remainder and exponential parts") {
  auto& s = setup_nodrift();
  // worst-case-seeking family: a front-like modulated step and a random-ish wiggle
  const int N = s.grid.N, n = s.sys.n();
  std::vector<double> front(static_cast<std::size_t>(n) * N);
  for (int i = 0; i < N; ++i) {
    double x = s.grid.point(i);
    double sh = std::tanh(x / 0.8); // sharp front, clears the diffusive onset early
    // taper far below roundoff at the domain edge so the periodic seam is smooth
    double taper = std::exp(-std::pow(x / 18.0, 8.0));
    for (int c = 0; c < n; ++c)
      front[static_cast<std::size_t>(c) * N + i] = (c == 0 ? 0.8 : 0.5) * sh * taper;
  }
  std::vector<std::vector<double>> fams{front, bump_field(s.grid, n, 3.0, 2.0)};

  std::vector<double> ts;
  for (double t = 4.0; t <= 60.0; t *= 1.45) ts.push_back(t);

  sg::ApplyOptions dz1;
  dz1.dz = 1;
  auto p_dz = sg::decay_rate_probe(s.kit(), Tag::s_p0, dz1, fams, ts);
  CHECK(p_dz.slope == doctest::Approx(-0.5).epsilon(0.35));

  sg::ApplyOptions dt1;
  dt1.dt_minus_adz = 1;
  auto p_dt = sg::decay_rate_probe(s.kit(), Tag::s_p0, dt1, fams, ts);
  CHECK(p_dt.slope < -0.75);

  auto p_r = sg::decay_rate_probe(s.kit(), Tag::s_r, {}, fams, ts);
  CHECK(p_r.slope < -0.8);

  auto p_e = sg::decay_rate_probe(s.kit(), Tag::s_e, {}, fams, ts);
  CHECK(p_e.slope < -1.0);
}

TEST_CASE("greens_principal: vanishes for t <= 1, periodic shift invariance") {
  auto& s = setup();
  auto row = s.kit().greens_principal(0, 0.3, -1.2, 0.8);
  for (auto& v : row) CHECK(std::abs(v) == 0.0);

  auto r1 = s.kit().greens_principal(0, 0.3, -1.2, 3.0);
  auto r2 = s.kit().greens_principal(0, 1.3, -0.2, 3.0);
  for (int c = 0; c < s.sys.n(); ++c) CHECK(std::abs(r1[c] - r2[c]) < 1e-8);

  auto r3 = s.kit().greens_principal(1, 0.3, -1.2, 3.0);
  auto r4 = s.kit().greens_principal(1, 1.3, -0.2, 3.0);
  for (int c = 0; c < s.sys.n(); ++c) CHECK(std::abs(r3[c] - r4[c]) < 1e-8);
}

TEST_CASE("oscillatory integral bound") {
  // lambda(xi) = -xi^2 on a table
  std::vector<double> xis;
  std::vector<cd> lams;
  for (int i = -40; i <= 40; ++i) {
    double xi = 0.8 * i / 40.0;
    xis.push_back(xi);
    lams.push_back(cd(-xi * xi, 0.0));
  }
  sg::CutoffPair cut{0.8};
  std::vector<double> xs, ts;
  for (double x = -20.0; x <= 20.0; x += 2.5) xs.push_back(x);
  for (double t = 1.0; t <= 100.0; t *= 2.1) ts.push_back(t);

  auto r1 = sg::oscillatory_bound_check(xis, lams, 0, cut, xs, ts, 1024);
  CHECK(r1.max_ratio > 0.0);
  CHECK(r1.max_ratio < 1e6);
  auto r2 = sg::oscillatory_bound_check(xis, lams, 0, cut, xs, ts, 2048);
  CHECK(std::abs(r1.max_ratio - r2.max_ratio) / r2.max_ratio < 0.2);

  // m = 1 with drift: center x = -a t stays bounded after scaling
  std::vector<cd> lams_a;
  for (double xi : xis) lams_a.push_back(cd(-xi * xi, 0.7 * xi));
  auto r3 = sg::oscillatory_bound_check(xis, lams_a, 1, cut, {0.0}, ts, 1024);
  CHECK(r3.max_ratio < 1e6);

  // hypothesis gate: Re lambda > -mu xi^2 violated
  std::vector<cd> bad;
  for (double xi : xis) bad.push_back(cd(0.01 - xi * xi, 0.0));
  CHECK_THROWS_AS(sg::oscillatory_bound_check(xis, bad, 0, cut, xs, ts, 512),
                  sg::HypothesisError);
}
