#include "wavemod/bloch.hpp"

#include "wavemod/kernels.hpp"
#include "wavemod/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wavemod::bloch {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

MatrixXd diff_matrix(int N, int order) {
  MatrixXd Dm(N, N);
  std::vector<double> e(N, 0.0);
  for (int j = 0; j < N; ++j) {
    e[j] = 1.0;
    auto col = spectral::derivative(e, order, 1.0);
    for (int i = 0; i < N; ++i) Dm(i, j) = col[i];
    e[j] = 0.0;
  }
  return Dm;
}

} // namespace

BlochMatrix assemble_bloch(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                           double xi, int N) {
  if (std::abs(xi) > std::numbers::pi + 1e-12)
    throw std::invalid_argument("assemble_bloch: |xi| must be <= pi");
  const int n = sys.n();
  // resample the profile if the requested resolution differs
  std::vector<double> phi;
  if (N == wave.N) {
    phi = wave.phi;
  } else {
    phi.resize(static_cast<std::size_t>(n) * N);
    for (int c = 0; c < n; ++c) {
      std::vector<double> comp(wave.phi.begin() + static_cast<std::size_t>(c) * wave.N,
                               wave.phi.begin() + static_cast<std::size_t>(c + 1) * wave.N);
      auto r = spectral::resample(comp, N);
      std::copy(r.begin(), r.end(), phi.begin() + static_cast<std::size_t>(c) * N);
    }
  }

  const MatrixXd D1 = diff_matrix(N, 1);
  const MatrixXd D2 = diff_matrix(N, 2);
  const double k0 = wave.k;
  const double om = wave.omega;

  BlochMatrix B;
  B.xi = xi;
  B.N = N;
  B.n = n;
  B.entries = CMat::Zero(N * n, N * n);

  // (d/dz + i xi)^2 = D2 + 2 i xi D1 - xi^2 I
  CMat op2 = D2.cast<cd>();
  op2 += cd(0.0, 2.0 * xi) * D1.cast<cd>();
  for (int i = 0; i < N; ++i) op2(i, i) -= xi * xi;
  CMat op1 = D1.cast<cd>();
  for (int i = 0; i < N; ++i) op1(i, i) += cd(0.0, xi);

  std::vector<double> dfv;
  sys.df_batch(phi, dfv, N);
  const auto& D = sys.D();
  for (int c = 0; c < n; ++c) {
    for (int cc = 0; cc < n; ++cc) {
      auto block = B.entries.block(c * N, cc * N, N, N);
      const double kd = k0 * k0 * D(c, cc);
      if (kd != 0.0) block += kd * op2;
      if (c == cc) block += om * op1;
      for (int i = 0; i < N; ++i)
        block(i, i) += dfv[(static_cast<std::size_t>(c) * n + cc) * N + i];
    }
  }
  return B;
}

std::vector<cd> apply(const BlochMatrix& B, const std::vector<cd>& v) {
  Eigen::Map<const CVec> vv(v.data(), static_cast<Eigen::Index>(v.size()));
  CVec out = B.entries * vv;
  return {out.data(), out.data() + out.size()};
}

cd inner_l2c(const std::vector<cd>& a, const std::vector<cd>& b, int N) {
  cd s(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s / static_cast<double>(N);
}

namespace {

// resolution-matched phi0' samples as a complex vector
std::vector<cd> dphi_complex(const wavetrain::WaveProfile& wave, int N) {
  std::vector<cd> out(static_cast<std::size_t>(wave.n) * N);
  for (int c = 0; c < wave.n; ++c) {
    std::vector<double> comp(wave.phi.begin() + static_cast<std::size_t>(c) * wave.N,
                             wave.phi.begin() + static_cast<std::size_t>(c + 1) * wave.N);
    auto r = N == wave.N ? comp : spectral::resample(comp, N);
    auto d = spectral::derivative(r, 1);
    for (int i = 0; i < N; ++i) out[static_cast<std::size_t>(c) * N + i] = d[i];
  }
  return out;
}

CVec inverse_iteration(const CMat& A, cd shift, CVec seed, int iters = 3) {
  CMat M = A;
  for (int i = 0; i < M.rows(); ++i) M(i, i) -= shift;
  auto lu = M.partialPivLu();
  CVec x = seed.norm() > 0 ? CVec(seed / seed.norm()) : CVec(CVec::Ones(A.rows()));
  for (int it = 0; it < iters; ++it) {
    CVec y = lu.solve(x);
    double nrm = y.norm();
    if (!std::isfinite(nrm) || nrm == 0.0) break; // exactly singular: keep previous
    x = y / nrm;
  }
  return x;
}

struct EigResult {
  CVec values;
  CMat vectors; // empty when not requested
};

EigResult eig_all(const CMat& A, bool vectors) {
  Eigen::ComplexEigenSolver<CMat> es(A, vectors);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("bloch: complex eigensolver failed");
  EigResult r;
  r.values = es.eigenvalues();
  if (vectors) r.vectors = es.eigenvectors();
  return r;
}

int nearest_index(const CVec& values, cd target) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < values.size(); ++i) {
    double d = std::abs(values[i] - target);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

// distance from values[idx] to the nearest other eigenvalue
double gap_to_rest(const CVec& values, int idx) {
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < values.size(); ++i)
    if (i != idx) g = std::min(g, std::abs(values[i] - values[idx]));
  return g;
}

} // namespace

std::vector<double> adjoint_at_zero(const model::RDSystem& sys,
                                    const wavetrain::WaveProfile& wave, int N) {
  BlochMatrix B0 = assemble_bloch(sys, wave, 0.0, N);
  auto dphi = dphi_complex(wave, N);
  CVec seed = CVec::Ones(N * wave.n);
  CVec adj = inverse_iteration(B0.entries.adjoint(), cd(0.0, 0.0), seed, 4);
  std::vector<cd> adjv(adj.data(), adj.data() + adj.size());
  cd ip = inner_l2c(adjv, dphi, N); // <adj, phi0'>
  if (std::abs(ip) < 1e-12)
    throw std::runtime_error("adjoint_at_zero: adjoint orthogonal to phi0' (D3 violated?)");
  std::vector<double> out(adjv.size());
  double im = 0.0, re = 0.0;
  for (std::size_t i = 0; i < adjv.size(); ++i) {
    cd v = adjv[i] / std::conj(ip); // <c*adj, phi0'> = conj(c)<adj, phi0'> = 1
    out[i] = v.real();
    im = std::max(im, std::abs(v.imag()));
    re = std::max(re, std::abs(v.real()));
  }
  // L(0) has real coefficients; a genuinely complex kernel adjoint means trouble
  if (im > 1e-6 * std::max(1.0, re))
    throw std::runtime_error("adjoint_at_zero: adjoint eigenfunction not real");
  return out;
}

StabilityReport stability_report(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                                 int xi_count, int N, const StabilityOptions& opts) {
  if (xi_count < 3) throw std::invalid_argument("stability_report: xi_count too small");
  StabilityReport rep;
  rep.xi_count = xi_count;
  rep.N = N;

  // conjugation symmetry: sweep the half grid [0, pi]
  const int half = xi_count / 2 + 1;
  rep.sweep_xis.resize(half);
  rep.sweep_max_re.resize(half);

  double worst_other = -std::numeric_limits<double>::infinity(); // D1 margin
  double theta = std::numeric_limits<double>::infinity();
  double witness = 0.0;
  bool d2_violated = false;
  double witness_violation = 0.0;

  for (int j = 0; j < half; ++j) {
    double xi = std::numbers::pi * j / (half - 1);
    rep.sweep_xis[j] = xi;
    BlochMatrix B = assemble_bloch(sys, wave, xi, N);
    auto eg = eig_all(B.entries, false);
    double max_re = -std::numeric_limits<double>::infinity();
    if (j == 0) {
      int origin = nearest_index(eg.values, cd(0.0, 0.0));
      rep.lambda0_abs = std::abs(eg.values[origin]);
      rep.origin_count = 0;
      for (int i = 0; i < eg.values.size(); ++i)
        if (std::abs(eg.values[i]) < opts.origin_radius) ++rep.origin_count;
      for (int i = 0; i < eg.values.size(); ++i) {
        if (i == origin) continue;
        max_re = std::max(max_re, eg.values[i].real());
      }
    } else {
      for (int i = 0; i < eg.values.size(); ++i) max_re = std::max(max_re, eg.values[i].real());
      double bound = (-max_re + opts.theta_slack) / (xi * xi);
      if (bound < theta) {
        theta = bound;
        witness = xi;
      }
      if (max_re > opts.theta_slack && xi > witness_violation) witness_violation = xi;
      if (max_re > opts.theta_slack) d2_violated = true;
    }
    rep.sweep_max_re[j] = max_re;
    worst_other = std::max(worst_other, max_re);
  }

  rep.d1_holds = worst_other < 0.0;
  rep.d2_theta = theta;
  if (d2_violated) {
    rep.d2_theta = std::min(theta, 0.0);
    rep.d2_witness_xi = witness_violation;
  } else {
    rep.d2_witness_xi = witness;
  }

  // D3: simplicity of the origin eigenvalue with well-conditioned biorthogonality
  {
    BlochMatrix B0 = assemble_bloch(sys, wave, 0.0, N);
    auto eg = eig_all(B0.entries, true);
    int origin = nearest_index(eg.values, cd(0.0, 0.0));
    CVec right = eg.vectors.col(origin);
    CVec left = inverse_iteration(B0.entries.adjoint(), std::conj(eg.values[origin]),
                                  CVec::Ones(B0.entries.rows()), 4);
    cd prod = left.dot(right); // Eigen's dot conjugates the left factor
    rep.biorth = std::abs(prod) / (left.norm() * right.norm());
    rep.d3_holds = rep.origin_count == 1 && rep.biorth > opts.biorth_floor &&
                   rep.lambda0_abs < opts.origin_radius;
  }

  double margin = -std::numeric_limits<double>::infinity();
  double th = std::max(rep.d2_theta, 0.0);
  for (std::size_t j = 0; j < rep.sweep_xis.size(); ++j)
    margin = std::max(margin, rep.sweep_max_re[j] + th * rep.sweep_xis[j] * rep.sweep_xis[j]);
  rep.spectral_margin = margin;
  return rep;
}

struct SpectralCurve::SplineData {
  spectral::CubicSplineC lambda;
  std::vector<spectral::CubicSplineC> phi, phi_adj;
};

int SpectralCurve::index_of_zero() const {
  for (std::size_t i = 0; i < xis.size(); ++i)
    if (xis[i] == 0.0) return static_cast<int>(i);
  throw std::logic_error("SpectralCurve: grid does not contain 0");
}

void SpectralCurve::build_splines() {
  if (splines_) return;
  auto sd = std::make_shared<SplineData>();
  sd->lambda = spectral::CubicSplineC(xis, lambda);
  const std::size_t dim = Phi.front().size();
  sd->phi.reserve(dim);
  sd->phi_adj.reserve(dim);
  std::vector<cd> col(xis.size());
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t j = 0; j < xis.size(); ++j) col[j] = Phi[j][d];
    sd->phi.emplace_back(xis, col);
    for (std::size_t j = 0; j < xis.size(); ++j) col[j] = Phi_adj[j][d];
    sd->phi_adj.emplace_back(xis, col);
  }
  splines_ = std::move(sd);
}

cd SpectralCurve::lambda_at(double xi) const {
  if (!splines_) throw std::logic_error("SpectralCurve: splines not built");
  return splines_->lambda(xi);
}

std::vector<cd> SpectralCurve::phi_at(double xi) const {
  if (!splines_) throw std::logic_error("SpectralCurve: splines not built");
  std::vector<cd> out(splines_->phi.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = splines_->phi[d](xi);
  return out;
}

std::vector<cd> SpectralCurve::phi_adj_at(double xi) const {
  if (!splines_) throw std::logic_error("SpectralCurve: splines not built");
  std::vector<cd> out(splines_->phi_adj.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = splines_->phi_adj[d](xi);
  return out;
}

SpectralCurve critical_curve(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                             double xi0_request, int xi_count, int N, const CurveOptions& opts) {
  if (xi_count < 5) throw std::invalid_argument("critical_curve: xi_count too small");
  if (xi0_request <= 0.0 || xi0_request > std::numbers::pi)
    throw std::invalid_argument("critical_curve: xi0_request must lie in (0, pi]");
  const int n = sys.n();
  const double k0 = wave.k;

  auto adjoint0 = adjoint_at_zero(sys, wave, N);
  std::vector<cd> adj0c(adjoint0.begin(), adjoint0.end());

  const double dxi = xi0_request / (xi_count - 1);
  std::vector<double> xs;
  std::vector<cd> lams;
  std::vector<std::vector<cd>> Phis, Adjs;

  cd lam_prev(0.0, 0.0), lam_prev2(0.0, 0.0);
  CVec adj_prev;
  double gap0 = 0.0;

  for (int j = 0; j < xi_count; ++j) {
    const double xi = j * dxi;
    BlochMatrix B = assemble_bloch(sys, wave, xi, N);
    auto eg = eig_all(B.entries, true);

    cd predictor = j == 0   ? cd(0.0, 0.0)
                   : j == 1 ? lam_prev
                            : 2.0 * lam_prev - lam_prev2;
    int idx = nearest_index(eg.values, predictor);
    if (j >= 1) {
      double d_best = std::abs(eg.values[idx] - predictor);
      double d_second = std::numeric_limits<double>::infinity();
      for (int i = 0; i < eg.values.size(); ++i) {
        if (i == idx) continue;
        d_second = std::min(d_second, std::abs(eg.values[i] - predictor));
      }
      if (d_second > 0.0 && d_best / d_second > opts.ambiguity_ratio)
        throw ContinuationAmbiguityError("critical_curve: two equidistant eigenvalues at xi = " +
                                         std::to_string(xi));
    }
    const cd lam = eg.values[idx];
    const double gap = gap_to_rest(eg.values, idx);
    if (j == 0) {
      gap0 = gap;
      if (gap0 <= 0.0 || std::abs(lam) > 1e-6)
        throw GapCollapseError("critical_curve: origin eigenvalue not simple/near zero");
    } else if (gap < opts.gap_floor_fraction * gap0) {
      break; // shrink xi0 here
    }

    CVec right = eg.vectors.col(idx);
    CVec left = adj_prev.size() ? adj_prev : CVec(CVec::Ones(right.size()));
    left = inverse_iteration(B.entries.adjoint(), std::conj(lam), left, 3);

    std::vector<cd> rightv(right.data(), right.data() + right.size());
    if (j == 0) {
      // exact kernel direction: phi0' with <adjoint0, phi0'> = 1
      rightv = dphi_complex(wave, N);
    } else {
      // normalize the eigenfunction: <adjoint0, Phi_xi> = 1 + i k0 xi
      cd ip0 = inner_l2c(adj0c, rightv, N);
      double scale_ref = std::sqrt(std::abs(inner_l2c(rightv, rightv, N).real()));
      if (std::abs(ip0) > 0.02 * scale_ref) {
        cd scale = cd(1.0, k0 * xi) / ip0;
        for (auto& v : rightv) v *= scale;
      } else if (!Phis.empty()) {
        // fallback: align phase with the previous eigenfunction
        cd ipp = inner_l2c(Phis.back(), rightv, N);
        cd scale = std::abs(ipp) / ipp;
        for (auto& v : rightv) v *= scale;
      }
    }

    // adjoint scaling: <Phi_adj, Phi> = 1
    std::vector<cd> leftv(left.data(), left.data() + left.size());
    cd ip = inner_l2c(leftv, rightv, N);
    if (std::abs(ip) < 1e-12)
      throw GapCollapseError("critical_curve: degenerate left/right pairing at xi = " +
                             std::to_string(xi));
    cd c = 1.0 / std::conj(ip);
    for (auto& v : leftv) v *= c;

    xs.push_back(xi);
    lams.push_back(lam);
    Phis.push_back(std::move(rightv));
    Adjs.push_back(std::move(leftv));
    lam_prev2 = lam_prev;
    lam_prev = lam;
    adj_prev = left;
  }

  if (xs.size() < 3) throw GapCollapseError("critical_curve: gap closed immediately");

  // mirror to negative xi by conjugation symmetry
  SpectralCurve curve;
  curve.N = N;
  curve.n = n;
  curve.k0 = k0;
  curve.gap0 = gap0;
  curve.xi0 = xs.back();
  curve.adjoint0 = adjoint0;
  const int m = static_cast<int>(xs.size());
  curve.xis.resize(2 * m - 1);
  curve.lambda.resize(2 * m - 1);
  curve.Phi.resize(2 * m - 1);
  curve.Phi_adj.resize(2 * m - 1);
  for (int j = 0; j < m; ++j) {
    curve.xis[m - 1 + j] = xs[j];
    curve.lambda[m - 1 + j] = lams[j];
    curve.Phi[m - 1 + j] = Phis[j];
    curve.Phi_adj[m - 1 + j] = Adjs[j];
    if (j > 0) {
      curve.xis[m - 1 - j] = -xs[j];
      curve.lambda[m - 1 - j] = std::conj(lams[j]);
      std::vector<cd> pc(Phis[j].size()), ac(Adjs[j].size());
      for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = std::conj(Phis[j][i]);
      for (std::size_t i = 0; i < ac.size(); ++i) ac[i] = std::conj(Adjs[j][i]);
      curve.Phi[m - 1 - j] = std::move(pc);
      curve.Phi_adj[m - 1 - j] = std::move(ac);
    }
  }
  curve.build_splines();
  return curve;
}

CurveFit fit_curve(const SpectralCurve& curve, double fit_radius) {
  CurveFit fit;
  double s2 = 0, s4 = 0, s6 = 0, s8 = 0;
  double ri = 0, r3 = 0; // xi*Im, xi^3*Im moments
  double e2 = 0, e4 = 0; // xi^2*Re, xi^4*Re moments
  int used = 0;
  for (std::size_t j = 0; j < curve.xis.size(); ++j) {
    double xi = curve.xis[j];
    if (std::abs(xi) > fit_radius || xi == 0.0) continue;
    double w = std::exp(-4.0 * (xi / fit_radius) * (xi / fit_radius));
    double x2 = xi * xi;
    s2 += w * x2;
    s4 += w * x2 * x2;
    s6 += w * x2 * x2 * x2;
    s8 += w * x2 * x2 * x2 * x2;
    ri += w * xi * curve.lambda[j].imag();
    r3 += w * xi * x2 * curve.lambda[j].imag();
    e2 += w * x2 * curve.lambda[j].real();
    e4 += w * x2 * x2 * curve.lambda[j].real();
    ++used;
  }
  if (used < 4) throw std::invalid_argument("fit_curve: fit window too small");
  // [s2 s4; s4 s6] [a; c3] = [ri; r3]
  double det1 = s2 * s6 - s4 * s4;
  fit.a = (ri * s6 - r3 * s4) / det1;
  fit.c3 = (s2 * r3 - s4 * ri) / det1;
  // [s4 s6; s6 s8] [p; c4] = [e2; e4], d = -p
  double det2 = s4 * s8 - s6 * s6;
  double p = (e2 * s8 - e4 * s6) / det2;
  fit.c4 = (s4 * e4 - s6 * e2) / det2;
  fit.d = -p;
  for (std::size_t j = 0; j < curve.xis.size(); ++j) {
    double xi = curve.xis[j];
    if (std::abs(xi) > fit_radius) continue;
    cd model(p * xi * xi + fit.c4 * xi * xi * xi * xi, fit.a * xi + fit.c3 * xi * xi * xi);
    fit.residual = std::max(fit.residual, std::abs(curve.lambda[j] - model));
  }
  return fit;
}

std::vector<double> compute_fp(const model::RDSystem& sys, const wavetrain::WaveFamily& family,
                               const std::vector<double>& adjoint0, double omega1,
                               double* nu_check) {
  if (!family.has_derivatives)
    throw std::invalid_argument("compute_fp: family derivatives missing");
  const auto& base = family.base;
  const int N = base.N, n = base.n;
  const double k0 = base.k;
  std::vector<double> fp(static_cast<std::size_t>(n) * N, 0.0);
  model::Vec u(n), v(n);
  const auto& D = sys.D();
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < n; ++c) {
      u[c] = base.phi[static_cast<std::size_t>(c) * N + i];
      v[c] = family.dk_phi[static_cast<std::size_t>(c) * N + i];
    }
    model::Vec h = sys.d2f(u, v, v);
    for (int c = 0; c < n; ++c) {
      double diff = 0.0;
      for (int cc = 0; cc < n; ++cc)
        diff += D(c, cc) * (base.d2phi[static_cast<std::size_t>(cc) * N + i] +
                            2.0 * k0 * family.dzzk_phi[static_cast<std::size_t>(cc) * N + i]);
      fp[static_cast<std::size_t>(c) * N + i] =
          0.5 * h[c] + omega1 * family.dzk_phi[static_cast<std::size_t>(c) * N + i] + diff;
    }
  }
  if (nu_check) *nu_check = k0 * k0 * wavetrain::inner_l2(adjoint0, fp, N);
  return fp;
}

std::vector<double> antiderivative_operator(const std::vector<double>& g,
                                            const std::vector<double>& adjoint0, int N,
                                            std::vector<cd>* coeffs) {
  const int n = static_cast<int>(g.size()) / N;
  std::vector<double> u(N, 0.0);
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < N; ++i)
      u[i] += adjoint0[static_cast<std::size_t>(c) * N + i] *
              g[static_cast<std::size_t>(c) * N + i];
  auto c_j = spectral::fourier_coeffs(u);
  std::vector<cd> b(N, cd(0.0));
  for (int j = 1; j < N; ++j) {
    if (N % 2 == 0 && j == N / 2) continue; // drop the unpaired Nyquist mode
    int s = j <= N / 2 ? j : j - N;
    b[j] = c_j[j] / cd(0.0, two_pi * s);
  }
  if (coeffs) *coeffs = b;
  spectral::fft(b, true);
  std::vector<double> out(N);
  for (int i = 0; i < N; ++i) out[i] = b[i].real();
  return out;
}

ModulationCoefficients modulation_coefficients(const model::RDSystem& sys,
                                               const SpectralCurve& curve,
                                               const wavetrain::WaveFamily& family,
                                               const CoefficientOptions& opts) {
  if (!family.has_derivatives)
    throw std::invalid_argument("modulation_coefficients: family derivatives missing");
  ModulationCoefficients mc;
  mc.fit_radius = opts.fit_fraction * curve.xi0;
  CurveFit fit = fit_curve(curve, mc.fit_radius);

  const auto& base = family.base;
  const double k0 = base.k;
  auto disp = wavetrain::dispersion_derivatives(family);

  mc.a.route_a = fit.a;
  mc.a.route_b = base.omega - k0 * disp.omega1;

  // d route B: k0^2 (<adjoint0, D phi0' + 2 k0 D dzk_phi> + omega'(k0)).
  // The omega'(k0) term is required by second-order eigenvalue perturbation
  // under the gauge <adjoint0, dk_phi> = 1; it vanishes for reversible waves.
  const int N = base.N, n = base.n;
  std::vector<double> gvec(static_cast<std::size_t>(n) * N, 0.0);
  const auto& D = sys.D();
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < n; ++c) {
      double val = 0.0;
      for (int cc = 0; cc < n; ++cc)
        val += D(c, cc) * (base.dphi[static_cast<std::size_t>(cc) * N + i] +
                           2.0 * k0 * family.dzk_phi[static_cast<std::size_t>(cc) * N + i]);
      gvec[static_cast<std::size_t>(c) * N + i] = val;
    }
  mc.d.route_a = fit.d;
  mc.d.route_b = k0 * k0 * (wavetrain::inner_l2(curve.adjoint0, gvec, N) + disp.omega1);

  mc.f_p = compute_fp(sys, family, curve.adjoint0, disp.omega1, &mc.nu_fp);
  mc.nu.route_a = mc.nu_fp;
  mc.nu.route_b = -0.5 * k0 * k0 * disp.omega2;

  mc.A_h_fp = antiderivative_operator(mc.f_p, curve.adjoint0, N, &mc.A_h_fp_coeffs);

  auto disc = [&](RouteValue& rv) {
    double denom = std::max({std::abs(rv.route_a), std::abs(rv.route_b), opts.abs_floor});
    rv.discrepancy = std::abs(rv.route_a - rv.route_b) / denom;
  };
  disc(mc.a);
  disc(mc.d);
  disc(mc.nu);
  mc.discrepancy_flagged = mc.a.discrepancy > opts.cross_tol ||
                           mc.d.discrepancy > opts.cross_tol ||
                           mc.nu.discrepancy > opts.cross_tol;
  return mc;
}

} // namespace wavemod::bloch
