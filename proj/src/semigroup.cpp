#include "wavemod/semigroup.hpp"

#include "wavemod/kernels.hpp"
#include "wavemod/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wavemod::semigroup {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double bump_h(double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); }
double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double hs = bump_h(s);
  return hs / (hs + bump_h(1.0 - s));
}

// per-component resample of a component-major field to M points per period
std::vector<double> resample_field(const std::vector<double>& f, int n, int N, int M) {
  std::vector<double> out(static_cast<std::size_t>(n) * M);
  for (int c = 0; c < n; ++c) {
    std::vector<double> comp(f.begin() + static_cast<std::size_t>(c) * N,
                             f.begin() + static_cast<std::size_t>(c + 1) * N);
    auto r = N == M ? comp : spectral::resample(comp, M);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::size_t>(c) * M);
  }
  return out;
}

std::vector<cd> resample_field_c(const std::vector<cd>& f, int n, int N, int M, int deriv) {
  std::vector<cd> out(static_cast<std::size_t>(n) * M);
  for (int c = 0; c < n; ++c) {
    std::vector<cd> comp(f.begin() + static_cast<std::size_t>(c) * N,
                         f.begin() + static_cast<std::size_t>(c + 1) * N);
    if (deriv > 0) comp = spectral::derivative(comp, deriv, 1.0);
    auto r = N == M ? comp : spectral::resample(comp, M);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::size_t>(c) * M);
  }
  return out;
}

} // namespace

FiberPropagator::FiberPropagator(const model::RDSystem& sys,
                                 const wavetrain::WaveProfile& wave, const Grid& domain)
    : grid_(domain), n_(sys.n()) {
  L_ = static_cast<int>(std::llround(grid_.length()));
  if (std::abs(grid_.length() - L_) > 1e-9)
    throw std::invalid_argument("FiberPropagator: domain must span whole periods");
  if (grid_.N % L_ != 0)
    throw std::invalid_argument("FiberPropagator: grid size must be a multiple of L");
  P_ = grid_.N / L_;
  const double dx = grid_.dx;
  const double i0 = grid_.x0 / dx;
  if (std::abs(i0 - std::llround(i0)) > 1e-9)
    throw std::invalid_argument("FiberPropagator: x0 must be a whole number of cells");
  const long long I0 = std::llround(i0);
  const int rot = static_cast<int>(((I0 % P_) + P_) % P_);

  // profile rotated so sample p corresponds to zeta = (x0 + p dx) mod 1
  wavetrain::WaveProfile wp = wave;
  {
    auto phiP = resample_field(wave.phi, n_, wave.N, P_);
    std::vector<double> rotated(phiP.size());
    for (int c = 0; c < n_; ++c)
      for (int p = 0; p < P_; ++p)
        rotated[static_cast<std::size_t>(c) * P_ + p] =
            phiP[static_cast<std::size_t>(c) * P_ + (p + rot) % P_];
    wp.N = P_;
    wp.phi = rotated;
    wp.dphi.clear();
    wp.d2phi.clear();
    wp.d3phi.clear();
  }

  fibers_.resize(L_);
  abscissa_ = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < L_; ++m) {
    int s = m <= L_ / 2 ? m : m - L_;
    double xi = two_pi * s / L_;
    // map to [-pi, pi)
    if (xi >= std::numbers::pi) xi -= two_pi;
    if (xi < -std::numbers::pi) xi += two_pi;
    auto B = bloch::assemble_bloch(sys, wp, xi, P_);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(B.entries, true);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("FiberPropagator: eigensolver failed");
    Fiber f;
    f.lambda = es.eigenvalues();
    f.V = es.eigenvectors();
    f.lu = Eigen::PartialPivLU<Eigen::MatrixXcd>(f.V);
    f.phase.resize(P_);
    for (int p = 0; p < P_; ++p)
      f.phase[p] = std::exp(cd(0.0, xi * (grid_.x0 + p * dx)));
    for (int idx = 0; idx < f.lambda.size(); ++idx) {
      double re = f.lambda[idx].real();
      if (m == 0 && std::abs(f.lambda[idx]) < 1e-6) continue; // translational mode
      abscissa_ = std::max(abscissa_, re);
    }
    fibers_[m] = std::move(f);
  }
}

std::vector<std::vector<double>> FiberPropagator::apply_snapshots(
    const std::vector<double>& v0, const std::vector<double>& ts) const {
  const int N = grid_.N;
  if (static_cast<int>(v0.size()) != n_ * N)
    throw std::invalid_argument("FiberPropagator: v0 has wrong size");

  // fiber decomposition: per class p and component c, FFT over the L periods
  // u_m[c*P+p] = (1/L) e^{-i xi_m (x0 + p dx)} sum_j v[p + jP] e^{-2 pi i m j / L}
  std::vector<Eigen::VectorXcd> coeff(L_, Eigen::VectorXcd(n_ * P_));
  {
    std::vector<cd> line(L_);
    for (int c = 0; c < n_; ++c) {
      for (int p = 0; p < P_; ++p) {
        for (int j = 0; j < L_; ++j)
          line[j] = v0[static_cast<std::size_t>(c) * N + p + j * P_];
        spectral::fft(line, false);
        for (int m = 0; m < L_; ++m)
          coeff[m][c * P_ + p] = line[m] * std::conj(fibers_[m].phase[p]) / double(L_);
      }
    }
  }
  // eigenbasis coordinates once per fiber
  std::vector<Eigen::VectorXcd> modal(L_);
  for (int m = 0; m < L_; ++m) modal[m] = fibers_[m].lu.solve(coeff[m]);

  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  std::vector<cd> line(L_);
  for (double t : ts) {
    std::vector<double> snap(static_cast<std::size_t>(n_) * N);
    std::vector<Eigen::VectorXcd> ut(L_);
    for (int m = 0; m < L_; ++m) {
      Eigen::VectorXcd scaled(n_ * P_);
      for (int idx = 0; idx < n_ * P_; ++idx)
        scaled[idx] = modal[m][idx] * std::exp(fibers_[m].lambda[idx] * t);
      ut[m] = fibers_[m].V * scaled;
    }
    for (int c = 0; c < n_; ++c) {
      for (int p = 0; p < P_; ++p) {
        for (int m = 0; m < L_; ++m) line[m] = ut[m][c * P_ + p] * fibers_[m].phase[p];
        spectral::fft(line, true); // unnormalized inverse: sum_m line_m e^{2 pi i m j/L}
        for (int j = 0; j < L_; ++j)
          snap[static_cast<std::size_t>(c) * N + p + j * P_] = line[j].real();
      }
    }
    out.push_back(std::move(snap));
  }
  return out;
}

std::vector<double> FiberPropagator::apply(const std::vector<double>& v0, double t) const {
  if (t == 0.0) return v0;
  return apply_snapshots(v0, {t}).front();
}

double CutoffPair::rho(double xi) const {
  double ax = std::abs(xi);
  if (ax <= 0.5 * xi0) return 1.0;
  if (ax >= xi0) return 0.0;
  return smoothstep((xi0 - ax) / (0.5 * xi0));
}

double CutoffPair::chi(double t) const {
  if (t <= 1.0) return 0.0;
  if (t >= 2.0) return 1.0;
  return smoothstep(t - 1.0);
}

Tag tag_from_string(const std::string& name) {
  if (name == "full") return Tag::full;
  if (name == "S_e") return Tag::s_e;
  if (name == "S_c") return Tag::s_c;
  if (name == "critical") return Tag::critical_composed;
  if (name == "S_p0") return Tag::s_p0;
  if (name == "S_p1") return Tag::s_p1;
  if (name == "S_p2") return Tag::s_p2;
  if (name == "S_h0") return Tag::s_h0;
  if (name == "S_h1") return Tag::s_h1;
  if (name == "S_h2") return Tag::s_h2;
  if (name == "S_tr0") return Tag::s_tr0;
  if (name == "S_tr1") return Tag::s_tr1;
  if (name == "S_tr2") return Tag::s_tr2;
  if (name == "S_r") return Tag::s_r;
  throw std::invalid_argument("unknown propagator tag: " + name);
}

const char* tag_name(Tag tag) {
  switch (tag) {
    case Tag::full: return "full";
    case Tag::s_e: return "S_e";
    case Tag::s_c: return "S_c";
    case Tag::critical_composed: return "critical";
    case Tag::s_p0: return "S_p0";
    case Tag::s_p1: return "S_p1";
    case Tag::s_p2: return "S_p2";
    case Tag::s_h0: return "S_h0";
    case Tag::s_h1: return "S_h1";
    case Tag::s_h2: return "S_h2";
    case Tag::s_tr0: return "S_tr0";
    case Tag::s_tr1: return "S_tr1";
    case Tag::s_tr2: return "S_tr2";
    case Tag::s_r: return "S_r";
  }
  return "?";
}

bool tag_is_scalar(Tag tag) {
  switch (tag) {
    case Tag::s_p0:
    case Tag::s_p1:
    case Tag::s_p2:
    case Tag::s_h0:
    case Tag::s_h1:
    case Tag::s_h2:
    case Tag::s_tr0:
    case Tag::s_tr1:
    case Tag::s_tr2:
      return true;
    default:
      return false;
  }
}

SemigroupKit::SemigroupKit(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                           const bloch::SpectralCurve& curve,
                           const wavetrain::WaveFamily& family, double a, double d,
                           const Grid& domain, const KitOptions& opts)
    : sys_(&sys), wave_(wave), curve_(curve), grid_(domain), opts_(opts), a_(a), d_(d),
      n_(sys.n()) {
  L_ = static_cast<int>(std::llround(grid_.length()));
  if (std::abs(grid_.length() - L_) > 1e-9)
    throw std::invalid_argument("SemigroupKit: domain must span an integer number of periods");
  if (grid_.N % L_ != 0)
    throw std::invalid_argument("SemigroupKit: grid size must be a multiple of the period count");
  P_ = grid_.N / L_;
  cut_.xi0 = curve.xi0;
  if (!family.has_derivatives)
    throw std::invalid_argument("SemigroupKit: family derivatives missing");

  // composite GL nodes on (0, xi0]; the negative half enters by conjugation
  auto q = spectral::composite_gl(0.0, cut_.xi0, opts.panels, opts.nodes_per_panel);
  const int Q = static_cast<int>(q.x.size());
  node_xi_ = q.x;
  node_w_ = q.w;
  node_rho_.resize(Q);
  node_lambda_.resize(Q);
  node_adj_.resize(Q);
  node_phi_.resize(Q);
  const int Np = curve.N;
  for (int j = 0; j < Q; ++j) {
    node_rho_[j] = cut_.rho(node_xi_[j]);
    node_lambda_[j] = curve.lambda_at(node_xi_[j]);
    auto adj = curve.phi_adj_at(node_xi_[j]);
    for (int i = 0; i < 3; ++i) node_adj_[j][i] = resample_field_c(adj, n_, Np, P_, i);
    node_phi_[j] = resample_field_c(curve.phi_at(node_xi_[j]), n_, Np, P_, 0);
  }

  dphi_P_ = resample_field(wave.dphi, n_, wave.N, P_);
  dkphi_P_ = resample_field(family.dk_phi, n_, wave.N, P_);
  adj0_P_.assign(3, std::vector<std::vector<double>>(n_));
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < n_; ++c) {
      std::vector<double> comp(curve.adjoint0.begin() + static_cast<std::size_t>(c) * Np,
                               curve.adjoint0.begin() + static_cast<std::size_t>(c + 1) * Np);
      auto der = i == 0 ? comp : spectral::derivative(comp, i, 1.0);
      adj0_P_[i][c] = Np == P_ ? der : spectral::resample(der, P_);
    }
  }

  fiber_ = std::make_unique<FiberPropagator>(sys, wave, grid_);
}

NodeWeights SemigroupKit::weights_for(const std::vector<double>& v0) const {
  if (static_cast<int>(v0.size()) != n_ * grid_.N)
    throw std::invalid_argument("weights_for: v0 has wrong size");
  const int Q = static_cast<int>(node_xi_.size());
  NodeWeights w;
  w.w0.resize(Q);
  w.w1.resize(Q);
  w.w2.resize(Q);
  const int N = grid_.N;
  const double dx = grid_.dx;
  for (int q = 0; q < Q; ++q) {
    const double xi = node_xi_[q];
    cd rot = std::exp(cd(0.0, -xi * grid_.x0));
    const cd step = std::exp(cd(0.0, -xi * dx));
    cd s0(0.0), s1(0.0), s2(0.0);
    const auto& A0 = node_adj_[q][0];
    const auto& A1 = node_adj_[q][1];
    const auto& A2 = node_adj_[q][2];
    for (int i = 0; i < N; ++i) {
      const int p = i % P_;
      cd u0(0.0), u1(0.0), u2(0.0);
      for (int c = 0; c < n_; ++c) {
        const double v = v0[static_cast<std::size_t>(c) * N + i];
        u0 += std::conj(A0[static_cast<std::size_t>(c) * P_ + p]) * v;
        u1 += std::conj(A1[static_cast<std::size_t>(c) * P_ + p]) * v;
        u2 += std::conj(A2[static_cast<std::size_t>(c) * P_ + p]) * v;
      }
      s0 += rot * u0;
      s1 += rot * u1;
      s2 += rot * u2;
      rot *= step;
    }
    w.w0[q] = s0 * dx;
    w.w1[q] = s1 * dx;
    w.w2[q] = s2 * dx;
  }
  return w;
}

std::vector<double> SemigroupKit::spectral_dz(const std::vector<double>& field, int order,
                                              int components) const {
  if (order == 0) return field;
  const int N = grid_.N;
  std::vector<double> out(field.size());
  for (int c = 0; c < components; ++c) {
    std::vector<double> comp(field.begin() + static_cast<std::size_t>(c) * N,
                             field.begin() + static_cast<std::size_t>(c + 1) * N);
    auto d = spectral::derivative(comp, order, grid_.length());
    std::copy(d.begin(), d.end(), out.begin() + static_cast<std::size_t>(c) * N);
  }
  return out;
}

std::vector<double> SemigroupKit::heat_part(int i, const std::vector<double>& v0, double t,
                                            const ApplyOptions& o) const {
  const int N = grid_.N;
  std::vector<double> u(N, 0.0);
  for (int x = 0; x < N; ++x) {
    const int p = x % P_;
    double acc = 0.0;
    for (int c = 0; c < n_; ++c)
      acc += adj0_P_[i][c][p] * v0[static_cast<std::size_t>(c) * N + x];
    u[x] = acc;
  }
  // (d_t - a d_z)^j S_h = (d d_zz)^j S_h: raise the derivative order by 2j
  int eff_dz = o.dz + 2 * o.dt_minus_adz;
  double scale = std::pow(d_, o.dt_minus_adz);
  std::vector<double> out;
  if (eff_dz == 0) {
    out = phase_dynamics::HeatPropagator(grid_, t, a_, d_).apply(u);
  } else if (eff_dz == 1) {
    out = phase_dynamics::HeatPropagator(grid_, t, a_, d_).apply_derivative(u);
  } else {
    // compose half-time derivative convolutions
    phase_dynamics::HeatPropagator half(grid_, 0.5 * t, a_, d_);
    out = half.apply_derivative(u);
    for (int k = 1; k < eff_dz; ++k) {
      if (k == eff_dz - 1)
        out = phase_dynamics::HeatPropagator(grid_, 0.5 * t, a_, d_).apply_derivative(out);
      else
        out = half.apply_derivative(out);
    }
  }
  if (scale != 1.0)
    for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> SemigroupKit::apply_quadrature(Tag tag, const NodeWeights& w, double t,
                                                   const ApplyOptions& o) const {
  const int N = grid_.N;
  const int Q = static_cast<int>(node_xi_.size());
  const double chi = cut_.chi(t);
  const bool scalar = tag_is_scalar(tag);
  std::vector<double> out(scalar ? N : static_cast<std::size_t>(n_) * N, 0.0);
  if (chi == 0.0) return out;

  int adj_order = 0;
  if (tag == Tag::s_p1) adj_order = 1;
  if (tag == Tag::s_p2) adj_order = 2;

  // per-node prefactor
  std::vector<cd> pref(Q);
  for (int q = 0; q < Q; ++q) {
    const double xi = node_xi_[q];
    cd f = node_w_[q] * node_rho_[q] * std::exp(node_lambda_[q] * t) * chi / two_pi;
    for (int l = 0; l < o.dz; ++l) f *= cd(0.0, xi);
    for (int j = 0; j < o.dt_minus_adz; ++j) f *= node_lambda_[q] - cd(0.0, a_ * xi);
    pref[q] = f;
  }
  const std::vector<cd>* W = &w.w0;
  if (adj_order == 1) W = &w.w1;
  if (adj_order == 2) W = &w.w2;

  if (scalar) {
    for (int q = 0; q < Q; ++q) {
      const double xi = node_xi_[q];
      const cd coeff = pref[q] * (*W)[q];
      cd rot = std::exp(cd(0.0, xi * grid_.x0));
      const cd step = std::exp(cd(0.0, xi * grid_.dx));
      for (int i = 0; i < N; ++i) {
        out[i] += 2.0 * (coeff * rot).real();
        rot *= step;
      }
    }
    return out;
  }

  // vector tags: S_c and S_r (left dz handled by the caller via spectral_dz)
  if (o.dz != 0 || o.dt_minus_adz != 0)
    throw std::invalid_argument("apply_quadrature: derivatives of vector tags are applied "
                                "spectrally by apply()");
  const double k0 = wave_.k;
  for (int q = 0; q < Q; ++q) {
    const double xi = node_xi_[q];
    const cd coeff = pref[q] * w.w0[q];
    cd rot = std::exp(cd(0.0, xi * grid_.x0));
    const cd step = std::exp(cd(0.0, xi * grid_.dx));
    const auto& Phi = node_phi_[q];
    for (int i = 0; i < N; ++i) {
      const int p = i % P_;
      const cd base = coeff * rot;
      for (int c = 0; c < n_; ++c) {
        cd factor;
        if (tag == Tag::s_c) {
          factor = Phi[static_cast<std::size_t>(c) * P_ + p];
        } else { // s_r
          factor = Phi[static_cast<std::size_t>(c) * P_ + p] -
                   dphi_P_[static_cast<std::size_t>(c) * P_ + p] -
                   cd(0.0, k0 * xi) * dkphi_P_[static_cast<std::size_t>(c) * P_ + p];
        }
        out[static_cast<std::size_t>(c) * N + i] += 2.0 * (base * factor).real();
      }
      rot *= step;
    }
  }
  return out;
}

std::vector<double> SemigroupKit::apply(Tag tag, const std::vector<double>& v0, double t,
                                        const ApplyOptions& o) const {
  switch (tag) {
    case Tag::s_p0:
    case Tag::s_p1:
    case Tag::s_p2: {
      auto w = weights_for(v0);
      return apply_quadrature(tag, w, t, o);
    }
    case Tag::s_h0:
      return heat_part(0, v0, t, o);
    case Tag::s_h1:
      return heat_part(1, v0, t, o);
    case Tag::s_h2:
      return heat_part(2, v0, t, o);
    case Tag::s_tr0:
    case Tag::s_tr1:
    case Tag::s_tr2: {
      int i = tag == Tag::s_tr0 ? 0 : tag == Tag::s_tr1 ? 1 : 2;
      Tag ptag = i == 0 ? Tag::s_p0 : i == 1 ? Tag::s_p1 : Tag::s_p2;
      auto w = weights_for(v0);
      auto sp = apply_quadrature(ptag, w, t, o);
      auto sh = heat_part(i, v0, t, o);
      for (std::size_t m = 0; m < sp.size(); ++m) sp[m] -= sh[m];
      return sp;
    }
    case Tag::s_c:
    case Tag::s_r: {
      auto w = weights_for(v0);
      auto base = apply_quadrature(tag, w, t, {});
      if (o.dz > 0) base = spectral_dz(base, o.dz, n_);
      if (o.dt_minus_adz > 0)
        throw std::invalid_argument("apply: time derivatives of S_c/S_r not supported");
      return base;
    }
    case Tag::critical_composed: {
      auto w = weights_for(v0);
      ApplyOptions o0 = o;
      auto s = apply_quadrature(Tag::s_p0, w, t, o0);
      ++o0.dz;
      auto sx = apply_quadrature(Tag::s_p0, w, t, o0);
      const int N = grid_.N;
      std::vector<double> out(static_cast<std::size_t>(n_) * N);
      const double k0 = wave_.k;
      for (int i = 0; i < N; ++i) {
        const int p = i % P_;
        for (int c = 0; c < n_; ++c)
          out[static_cast<std::size_t>(c) * N + i] =
              dphi_P_[static_cast<std::size_t>(c) * P_ + p] * s[i] +
              k0 * dkphi_P_[static_cast<std::size_t>(c) * P_ + p] * sx[i];
      }
      return out;
    }
    case Tag::full: {
      auto out = full_evolve(v0, t);
      if (o.dz > 0) out = spectral_dz(out, o.dz, n_);
      if (o.dt_minus_adz > 0) {
        auto gen = apply_generator(full_evolve(v0, t));
        auto dz1 = spectral_dz(full_evolve(v0, t), 1, n_);
        for (std::size_t m = 0; m < gen.size(); ++m) gen[m] -= a_ * dz1[m];
        if (o.dz > 0) gen = spectral_dz(gen, o.dz, n_);
        return gen;
      }
      return out;
    }
    case Tag::s_e: {
      ApplyOptions plain;
      auto full = apply(Tag::full, v0, t, plain);
      auto w = weights_for(v0);
      auto sc = apply_quadrature(Tag::s_c, w, t, plain);
      for (std::size_t m = 0; m < full.size(); ++m) full[m] -= sc[m];
      if (o.dz > 0) full = spectral_dz(full, o.dz, n_);
      if (o.dt_minus_adz > 0)
        throw std::invalid_argument("apply: time derivative of S_e not supported here");
      return full;
    }
  }
  throw std::logic_error("apply: unhandled tag");
}

std::vector<std::vector<double>> SemigroupKit::full_evolve_snapshots(
    const std::vector<double>& v0, const std::vector<double>& ts) const {
  return fiber_->apply_snapshots(v0, ts);
}

std::vector<double> SemigroupKit::full_evolve(const std::vector<double>& v0, double t) const {
  return fiber_->apply(v0, t);
}

std::vector<double> SemigroupKit::apply_generator(const std::vector<double>& v) const {
  const int N = grid_.N;
  auto d1 = spectral_dz(v, 1, n_);
  auto d2 = spectral_dz(v, 2, n_);
  auto phiP = resample_field(wave_.phi, n_, wave_.N, P_);
  std::vector<double> out(static_cast<std::size_t>(n_) * N, 0.0);
  const auto& D = sys_->D();
  const double k0 = wave_.k, om = wave_.omega;
  model::Vec u(n_);
  for (int i = 0; i < N; ++i) {
    const int p = i % P_;
    for (int c = 0; c < n_; ++c) u[c] = phiP[static_cast<std::size_t>(c) * P_ + p];
    model::Mat Jm = sys_->df(u);
    for (int c = 0; c < n_; ++c) {
      double acc = om * d1[static_cast<std::size_t>(c) * N + i];
      for (int cc = 0; cc < n_; ++cc) {
        acc += k0 * k0 * D(c, cc) * d2[static_cast<std::size_t>(cc) * N + i];
        acc += Jm(c, cc) * v[static_cast<std::size_t>(cc) * N + i];
      }
      out[static_cast<std::size_t>(c) * N + i] = acc;
    }
  }
  return out;
}

double SemigroupKit::interior_margin(double t) const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sys_->D());
  double dmax = std::max(wave_.k * wave_.k * es.eigenvalues().maxCoeff(), std::abs(d_));
  double drift = std::abs(wave_.omega) + std::abs(a_);
  return drift * t + opts_.diffusion_speed_factor * std::sqrt(dmax * std::max(t, 1.0)) +
         opts_.margin_pad;
}

std::vector<cd> SemigroupKit::greens_principal(int i, double x, double xt, double t,
                                               double tol) const {
  if (i < 0 || i > 2) throw std::invalid_argument("greens_principal: i in {0,1,2}");
  const double chi = cut_.chi(t);
  std::vector<cd> out(n_, cd(0.0));
  if (chi == 0.0) return out;

  const int Np = curve_.N;
  auto evaluate = [&](int panels) {
    auto q = spectral::composite_gl(0.0, cut_.xi0, panels, 10);
    std::vector<cd> acc(n_, cd(0.0));
    for (std::size_t m = 0; m < q.x.size(); ++m) {
      const double xi = q.x[m];
      const double rho = cut_.rho(xi);
      if (rho == 0.0) continue;
      cd lam = curve_.lambda_at(xi);
      cd base = q.w[m] * rho * std::exp(lam * t) * std::exp(cd(0.0, xi * (x - xt)));
      auto adj = curve_.phi_adj_at(xi);
      for (int c = 0; c < n_; ++c) {
        std::vector<cd> comp(adj.begin() + static_cast<std::size_t>(c) * Np,
                             adj.begin() + static_cast<std::size_t>(c + 1) * Np);
        spectral::TrigInterp ti(comp, 1.0);
        cd av = ti.eval_derivative(xt, i);
        // conjugate half mirrored: add base * conj(av) and its conjugate
        acc[c] += base * std::conj(av) + std::conj(base * std::conj(av));
      }
    }
    for (auto& v : acc) v *= chi / two_pi;
    return acc;
  };

  int panels = 8;
  out = evaluate(panels);
  for (int it = 0; it < 6; ++it) {
    auto refined = evaluate(2 * panels);
    double diff = 0.0;
    for (int c = 0; c < n_; ++c) diff = std::max(diff, std::abs(refined[c] - out[c]));
    out = refined;
    panels *= 2;
    if (diff < tol) return out;
  }
  throw std::runtime_error("greens_principal: quadrature did not converge");
}

ProbeResult decay_rate_probe(const SemigroupKit& kit, Tag tag, const ApplyOptions& o,
                             const std::vector<std::vector<double>>& test_functions,
                             const std::vector<double>& t_grid, double noise_floor) {
  ProbeResult res;
  res.ts = t_grid;
  res.norms.assign(t_grid.size(), 0.0);
  const Grid& g = kit.domain();

  // sup over the whole periodic domain: the co-moving drift is a rotation of
  // the circle and leaves the sup norm unchanged; domain length controls the
  // wrap error through the diffusive spreading instead
  auto window_norm = [&](const std::vector<double>& field, double /*t*/, int comps) {
    double sup = 0.0;
    const int N = g.N;
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < comps; ++c)
        sup = std::max(sup, std::abs(field[static_cast<std::size_t>(c) * N + i]));
    return sup;
  };

  auto dz_field = [&](std::vector<double> f, int order) {
    if (order == 0) return f;
    const int N = g.N;
    const int comps = static_cast<int>(f.size()) / N;
    for (int c = 0; c < comps; ++c) {
      std::vector<double> comp(f.begin() + static_cast<std::size_t>(c) * N,
                               f.begin() + static_cast<std::size_t>(c + 1) * N);
      auto d = spectral::derivative(comp, order, g.length());
      std::copy(d.begin(), d.end(), f.begin() + static_cast<std::size_t>(c) * N);
    }
    return f;
  };

  for (const auto& v0 : test_functions) {
    if (tag == Tag::full || tag == Tag::s_e) {
      auto snaps = kit.full_evolve_snapshots(v0, t_grid);
      NodeWeights w = kit.weights_for(v0);
      for (std::size_t m = 0; m < t_grid.size(); ++m) {
        std::vector<double> field = snaps[m];
        if (tag == Tag::s_e) {
          auto sc = kit.apply_quadrature(Tag::s_c, w, t_grid[m], {});
          for (std::size_t q = 0; q < field.size(); ++q) field[q] -= sc[q];
        }
        field = dz_field(std::move(field), o.dz);
        res.norms[m] = std::max(res.norms[m], window_norm(field, t_grid[m], field.size() / g.N));
      }
    } else {
      NodeWeights w = kit.weights_for(v0);
      for (std::size_t m = 0; m < t_grid.size(); ++m) {
        std::vector<double> field;
        if (tag_is_scalar(tag) || tag == Tag::s_c || tag == Tag::s_r) {
          if (tag == Tag::s_tr0 || tag == Tag::s_tr1 || tag == Tag::s_tr2) {
            field = kit.apply(tag, v0, t_grid[m], o);
          } else {
            field = kit.apply_quadrature(tag, w, t_grid[m], o);
          }
        } else {
          field = kit.apply(tag, v0, t_grid[m], o);
        }
        res.norms[m] = std::max(res.norms[m], window_norm(field, t_grid[m], field.size() / g.N));
      }
    }
  }

  // log-log fit over points above the noise floor
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t m = 0; m < t_grid.size(); ++m) {
    if (res.norms[m] <= noise_floor) continue;
    double X = std::log(t_grid[m]);
    double Y = std::log(res.norms[m]);
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++used;
  }
  res.used = used;
  if (used >= 3) {
    res.slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
    res.prefactor = std::exp((sy - res.slope * sx) / used);
    double ybar = sy / used, ss_tot = 0, ss_res = 0;
    for (std::size_t m = 0; m < t_grid.size(); ++m) {
      if (res.norms[m] <= noise_floor) continue;
      double X = std::log(t_grid[m]);
      double Y = std::log(res.norms[m]);
      double fitv = std::log(res.prefactor) + res.slope * X;
      ss_tot += (Y - ybar) * (Y - ybar);
      ss_res += (Y - fitv) * (Y - fitv);
    }
    res.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return res;
}

CommutatorDefects commutator_check(const SemigroupKit& kit, const std::vector<double>& v0,
                                   const std::vector<double>& ts, double window_shrink) {
  const Grid& g = kit.domain();
  const int N = g.N;
  const int n = static_cast<int>(v0.size()) / N;

  // data derivatives (spectral on the periodic domain; v0 is compactly modulated)
  auto dz_data = [&](const std::vector<double>& f, int order) {
    std::vector<double> out(f.size());
    for (int c = 0; c < n; ++c) {
      std::vector<double> comp(f.begin() + static_cast<std::size_t>(c) * N,
                               f.begin() + static_cast<std::size_t>(c + 1) * N);
      auto d = spectral::derivative(comp, order, g.length());
      std::copy(d.begin(), d.end(), out.begin() + static_cast<std::size_t>(c) * N);
    }
    return out;
  };
  auto v1 = dz_data(v0, 1);
  auto v2 = dz_data(v0, 2);
  NodeWeights w0 = kit.weights_for(v0);
  NodeWeights w1 = kit.weights_for(v1);
  NodeWeights w2 = kit.weights_for(v2);

  CommutatorDefects defects;
  const int lo = static_cast<int>(window_shrink * N);
  const int hi = N - lo;
  for (double t : ts) {
    ApplyOptions dz1;
    dz1.dz = 1;
    ApplyOptions dz2;
    dz2.dz = 2;
    auto lhs1 = kit.apply_quadrature(Tag::s_p0, w0, t, dz1);
    auto rhs1a = kit.apply_quadrature(Tag::s_p0, w1, t, {});
    auto rhs1b = kit.apply_quadrature(Tag::s_p1, w0, t, {});
    for (int i = lo; i < hi; ++i)
      defects.first = std::max(defects.first, std::abs(lhs1[i] - rhs1a[i] - rhs1b[i]));

    auto lhs2 = kit.apply_quadrature(Tag::s_p0, w0, t, dz2);
    auto rhs2a = kit.apply_quadrature(Tag::s_p0, w2, t, {});
    auto rhs2b = kit.apply_quadrature(Tag::s_p1, w0, t, dz1);
    auto rhs2c = kit.apply_quadrature(Tag::s_p2, w0, t, {});
    for (int i = lo; i < hi; ++i)
      defects.second = std::max(defects.second,
                                std::abs(lhs2[i] - rhs2a[i] - 2.0 * rhs2b[i] + rhs2c[i]));
  }
  return defects;
}

OscillatoryBoundResult oscillatory_bound_check(const std::vector<double>& xis,
                                               const std::vector<cd>& lambdas, int m,
                                               const CutoffPair& cut,
                                               const std::vector<double>& xs,
                                               const std::vector<double>& ts, int quad_nodes) {
  if (xis.size() != lambdas.size() || xis.size() < 5)
    throw std::invalid_argument("oscillatory_bound_check: bad lambda table");
  spectral::CubicSplineC lam(xis, lambdas);

  // hypothesis gate: Re lambda <= -mu xi^2 with mu > 0, lambda'(0) imaginary
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xis.size(); ++i) {
    if (xis[i] == 0.0) {
      if (std::abs(lambdas[i]) > 1e-10)
        throw HypothesisError("oscillatory_bound_check: lambda(0) != 0");
      continue;
    }
    mu = std::min(mu, -lambdas[i].real() / (xis[i] * xis[i]));
  }
  if (!(mu > 0.0))
    throw HypothesisError("oscillatory_bound_check: Re lambda <= -mu xi^2 fails");
  cd lp0 = lam.derivative(0.0);
  if (std::abs(lp0.real()) > 1e-8 * std::max(1.0, std::abs(lp0)))
    throw HypothesisError("oscillatory_bound_check: lambda'(0) not imaginary");
  const double a = lp0.imag();

  auto q = spectral::composite_gl(-cut.xi0, cut.xi0, std::max(1, quad_nodes / 10), 10);
  OscillatoryBoundResult res;
  res.mu = mu;
  for (double t : ts) {
    for (double x : xs) {
      cd acc(0.0);
      for (std::size_t i = 0; i < q.x.size(); ++i) {
        double xi = q.x[i];
        double rho = cut.rho(xi);
        if (rho == 0.0) continue;
        acc += q.w[i] * rho * std::exp(lam(xi) * t) * std::pow(xi, m) *
               std::exp(cd(0.0, xi * x));
      }
      double integral = std::abs(acc);
      double z = x + a * t;
      double bound = std::pow(t, -(m + 1) / 2.0) / (1.0 + z * z * z * z / (t * t));
      res.ratios.push_back(integral / bound);
      res.max_ratio = std::max(res.max_ratio, integral / bound);
    }
  }
  return res;
}

} // namespace wavemod::semigroup
