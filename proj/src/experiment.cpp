#include "wavemod/experiment.hpp"

#include "wavemod/kernels.hpp"
#include "wavemod/phase_dynamics.hpp"
#include "wavemod/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace wavemod::experiment {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// cubic interpolation on a Fourier-oversampled copy of a periodic field
class Interpolant {
public:
  Interpolant() = default;
  Interpolant(const std::vector<double>& field, const Grid& g, int oversample)
      : x0_(g.x0), len_(g.length()) {
    M_ = g.N * oversample;
    dx_ = len_ / M_;
    fine_ = spectral::resample(field, M_);
  }

  double operator()(double x) const {
    double s = (x - x0_) / dx_;
    double fl = std::floor(s);
    long long j = static_cast<long long>(fl);
    double u = s - fl;
    auto at = [&](long long q) {
      long long idx = (q % M_ + M_) % M_;
      return fine_[idx];
    };
    double fm1 = at(j - 1), f0 = at(j), f1 = at(j + 1), f2 = at(j + 2);
    // 4-point Lagrange
    double a = -u * (u - 1.0) * (u - 2.0) / 6.0;
    double b = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    double c = -u * (u + 1.0) * (u - 2.0) / 2.0;
    double d = u * (u + 1.0) * (u - 1.0) / 6.0;
    return a * fm1 + b * f0 + c * f1 + d * f2;
  }

private:
  double x0_ = 0.0, len_ = 0.0, dx_ = 0.0;
  long long M_ = 0;
  std::vector<double> fine_;
};

double sup_abs_vec(const std::vector<double>& v) {
  return kernels::sup_abs(v.data(), v.size());
}

// least-squares slope of log(y) vs log(1+t), with optional log(2+t) removal
FitResult fit_loglog(const std::vector<double>& ts, const std::vector<double>& ys,
                     double t_min) {
  FitResult out;
  std::vector<double> X, Y, Yl;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < t_min || ys[i] <= 0.0) continue;
    X.push_back(std::log(1.0 + ts[i]));
    Y.push_back(std::log(ys[i]));
    Yl.push_back(std::log(ys[i]) - std::log(std::log(2.0 + ts[i])));
  }
  const int n = static_cast<int>(X.size());
  if (n < 3) return out;
  auto fit = [&](const std::vector<double>& yy, double& slope, double& ci, double& pref) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      sx += X[i];
      sy += yy[i];
      sxx += X[i] * X[i];
      sxy += X[i] * yy[i];
    }
    double denom = n * sxx - sx * sx;
    slope = (n * sxy - sx * sy) / denom;
    double icpt = (sy - slope * sx) / n;
    pref = std::exp(icpt);
    double ss = 0;
    for (int i = 0; i < n; ++i) {
      double r = yy[i] - slope * X[i] - icpt;
      ss += r * r;
    }
    double var = n > 2 ? ss / (n - 2) : 0.0;
    ci = 2.0 * std::sqrt(var * n / denom);
  };
  double pref_l = 0.0;
  fit(Y, out.slope, out.ci, out.prefactor);
  fit(Yl, out.log_slope, out.log_ci, pref_l);
  return out;
}

} // namespace

std::vector<double> snapshot_schedule(double t0, double ratio, double T) {
  std::vector<double> ts{0.0};
  double t = t0;
  while (t < T) {
    ts.push_back(t);
    t *= ratio;
  }
  ts.push_back(T);
  return ts;
}

ExperimentKit::ExperimentKit(const model::RDSystem& sys, const wavetrain::WaveProfile& wave,
                             const wavetrain::WaveFamily& family, const Grid& domain)
    : sys_(&sys), wave_(wave), family_(family), grid_(domain), n_(sys.n()) {
  L_ = static_cast<int>(std::llround(grid_.length()));
  if (std::abs(grid_.length() - L_) > 1e-9)
    throw std::invalid_argument("ExperimentKit: domain must span whole periods");
  if (grid_.N % L_ != 0)
    throw std::invalid_argument("ExperimentKit: grid size must be a multiple of L");
  P_ = grid_.N / L_;
  if (std::abs(grid_.x0 - std::llround(grid_.x0)) > 1e-9)
    throw std::invalid_argument("ExperimentKit: x0 must be an integer (whole periods)");
  if (!family.has_derivatives)
    throw std::invalid_argument("ExperimentKit: family derivatives missing");

  phi0_ = tile(wave.phi, n_);
  dphi_ = tile(wave.dphi, n_);
  d2phi_ = tile(wave.d2phi, n_);
  dkphi_ = tile(family.dk_phi, n_);
  dzkphi_ = tile(family.dzk_phi, n_);
  dkkphi_ = tile(family.dkk_phi, n_);

  const int N = grid_.N;
  f_phi0_.resize(static_cast<std::size_t>(n_) * N);
  df_phi0_.resize(static_cast<std::size_t>(n_) * n_ * N);
  model::Vec u(n_);
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < n_; ++c) u[c] = phi0_[static_cast<std::size_t>(c) * N + i];
    model::Vec fv = sys_->f(u);
    model::Mat J = sys_->df(u);
    for (int c = 0; c < n_; ++c) {
      f_phi0_[static_cast<std::size_t>(c) * N + i] = fv[c];
      for (int cc = 0; cc < n_; ++cc)
        df_phi0_[(static_cast<std::size_t>(c) * n_ + cc) * N + i] = J(c, cc);
    }
  }
  fiber_ = std::make_unique<semigroup::FiberPropagator>(sys, wave, grid_);
}

std::vector<double> ExperimentKit::tile(const std::vector<double>& profile_field,
                                        int comps) const {
  const int Np = static_cast<int>(profile_field.size()) / comps;
  const int N = grid_.N;
  std::vector<double> out(static_cast<std::size_t>(comps) * N);
  for (int c = 0; c < comps; ++c) {
    std::vector<double> comp(profile_field.begin() + static_cast<std::size_t>(c) * Np,
                             profile_field.begin() + static_cast<std::size_t>(c + 1) * Np);
    auto r = Np == P_ ? comp : spectral::resample(comp, P_);
    for (int i = 0; i < N; ++i) out[static_cast<std::size_t>(c) * N + i] = r[i % P_];
  }
  return out;
}

std::vector<double> ExperimentKit::dz(const std::vector<double>& field, int order,
                                      int comps) const {
  if (order == 0) return field;
  const int N = grid_.N;
  std::vector<double> out(field.size());
  for (int c = 0; c < comps; ++c) {
    std::vector<double> comp(field.begin() + static_cast<std::size_t>(c) * N,
                             field.begin() + static_cast<std::size_t>(c + 1) * N);
    auto d = spectral::derivative(comp, order, grid_.length());
    std::copy(d.begin(), d.end(), out.begin() + static_cast<std::size_t>(c) * N);
  }
  return out;
}

InitialData ExperimentKit::build_initial_data(const PerturbationSpec& spec) const {
  const int N = grid_.N;
  InitialData out;

  auto measure = [&](const std::vector<double>& v0) {
    double e = sup_abs_vec(v0);
    e = std::max(e, sup_abs_vec(dz(v0, 1, n_)));
    e = std::max(e, sup_abs_vec(dz(v0, 2, n_)));
    return e;
  };

  auto assemble_front = [&](double gm, double gp) {
    std::vector<double> gamma0(N);
    const double w = spec.interface_width;
    const double Lr = spec.ramp_fraction * grid_.length();
    const double wr = spec.ramp_width_fraction * grid_.length();
    for (int i = 0; i < N; ++i) {
      double z = grid_.point(i);
      gamma0[i] = gm + (gp - gm) * (phase_dynamics::erf_paper(z / w) -
                                    phase_dynamics::erf_paper((z - Lr) / wr));
    }
    return gamma0;
  };

  std::vector<spectral::TrigInterp> phi_interp, dk_interp, dkk_interp;
  for (int c = 0; c < n_; ++c) {
    std::vector<double> comp(wave_.phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                             wave_.phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    phi_interp.emplace_back(comp, 1.0);
    std::vector<double> ck(family_.dk_phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                           family_.dk_phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    dk_interp.emplace_back(ck, 1.0);
    std::vector<double> ckk(family_.dkk_phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                            family_.dkk_phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    dkk_interp.emplace_back(ckk, 1.0);
  }

  auto build_u = [&](const std::vector<double>& gamma0, bool modulate_k) {
    std::vector<double> u0(static_cast<std::size_t>(n_) * N);
    std::vector<double> g1;
    if (modulate_k) g1 = spectral::derivative(gamma0, 1, grid_.length());
    for (int i = 0; i < N; ++i) {
      double z = grid_.point(i) + gamma0[i];
      for (int c = 0; c < n_; ++c) {
        double val = phi_interp[c].eval_real(z);
        if (modulate_k) {
          double dk = wave_.k * g1[i]; // k = k0 (1 + gamma0')
          val += dk * dk_interp[c].eval_real(z) + 0.5 * dk * dk * dkk_interp[c].eval_real(z);
        }
        u0[static_cast<std::size_t>(c) * N + i] = val;
      }
    }
    return u0;
  };

  switch (spec.kind) {
    case PerturbationSpec::Kind::phase_front:
    case PerturbationSpec::Kind::wavenumber_modulated: {
      const bool modk = spec.kind == PerturbationSpec::Kind::wavenumber_modulated;
      double scale = 1.0;
      std::vector<double> gamma0, u0, v0;
      double e0 = 0.0;
      if (spec.amplitude == 0.0) {
        out.u0 = phi0_;
        out.v0.assign(static_cast<std::size_t>(n_) * N, 0.0);
        out.gamma0.assign(N, 0.0);
        out.E0 = 0.0;
        return out;
      }
      for (int it = 0; it < 3; ++it) {
        gamma0 = assemble_front(scale * spec.gamma_minus, scale * spec.gamma_plus);
        u0 = build_u(gamma0, modk);
        v0 = u0;
        for (std::size_t q = 0; q < v0.size(); ++q) v0[q] -= phi0_[q];
        e0 = measure(v0);
        if (std::abs(e0 - spec.amplitude) < 1e-3 * spec.amplitude) break;
        scale *= spec.amplitude / e0;
      }
      out.u0 = std::move(u0);
      out.v0 = std::move(v0);
      out.gamma0 = std::move(gamma0);
      out.E0 = e0;
      break;
    }
    case PerturbationSpec::Kind::additive_random: {
      std::mt19937_64 rng(spec.seed);
      std::normal_distribution<double> dist(0.0, 1.0);
      std::vector<double> v0(static_cast<std::size_t>(n_) * N, 0.0);
      const int mmax = std::max(2, static_cast<int>(grid_.length() / (two_pi * spec.smoothing_width)));
      for (int c = 0; c < n_; ++c) {
        for (int m = 1; m <= mmax; ++m) {
          double kap = two_pi * m / grid_.length();
          double amp = std::exp(-0.5 * kap * kap * spec.smoothing_width * spec.smoothing_width);
          double ac = dist(rng) * amp, bs = dist(rng) * amp;
          for (int i = 0; i < N; ++i) {
            double x = grid_.point(i);
            v0[static_cast<std::size_t>(c) * N + i] +=
                ac * std::cos(kap * x) + bs * std::sin(kap * x);
          }
        }
      }
      double e0 = measure(v0);
      double scale = e0 > 0 ? spec.amplitude / e0 : 0.0;
      for (auto& x : v0) x *= scale;
      out.v0 = v0;
      out.u0 = phi0_;
      for (std::size_t q = 0; q < v0.size(); ++q) out.u0[q] += v0[q];
      out.E0 = measure(out.v0);
      break;
    }
    case PerturbationSpec::Kind::additive_custom: {
      if (static_cast<int>(spec.custom.size()) != n_ * N)
        throw std::invalid_argument("build_initial_data: custom v0 has wrong size");
      out.v0 = spec.custom;
      out.u0 = phi0_;
      for (std::size_t q = 0; q < out.v0.size(); ++q) out.u0[q] += out.v0[q];
      out.E0 = measure(out.v0);
      break;
    }
  }
  if (out.E0 > spec.e0_gate)
    throw std::invalid_argument("build_initial_data: measured E0 exceeds the smallness gate");
  return out;
}

Trajectory ExperimentKit::simulate(const std::vector<double>& u0, double T,
                                   const std::vector<double>& snapshot_times,
                                   const SimOptions& opts) const {
  const int N = grid_.N;
  if (static_cast<int>(u0.size()) != n_ * N)
    throw std::invalid_argument("simulate: u0 has wrong size");

  Trajectory traj;
  traj.grid = grid_;
  traj.n = n_;
  traj.dt = opts.dt;

  // w = u - phi0; quadratic remainder kick + exact linear propagator
  auto remainder = [&](const std::vector<double>& w, std::vector<double>& out) {
    out.assign(w.size(), 0.0);
    model::Vec uu(n_);
    for (int i = 0; i < N; ++i) {
      for (int c = 0; c < n_; ++c)
        uu[c] = phi0_[static_cast<std::size_t>(c) * N + i] +
                w[static_cast<std::size_t>(c) * N + i];
      model::Vec fv = sys_->f(uu);
      for (int c = 0; c < n_; ++c) {
        double lin = f_phi0_[static_cast<std::size_t>(c) * N + i];
        for (int cc = 0; cc < n_; ++cc)
          lin += df_phi0_[(static_cast<std::size_t>(c) * n_ + cc) * N + i] *
                 w[static_cast<std::size_t>(cc) * N + i];
        out[static_cast<std::size_t>(c) * N + i] = fv[c] - lin;
      }
    }
  };

  auto run = [&](double dt, const std::vector<double>& ts_local,
                 std::vector<std::vector<double>>* store, bool* blowup) {
    std::vector<double> w = u0;
    for (std::size_t q = 0; q < w.size(); ++q) w[q] -= phi0_[q];
    double t_cur = 0.0;
    std::vector<double> k1, k2, wm;
    for (double t_target : ts_local) {
      double seg = t_target - t_cur;
      if (seg < -1e-12) throw std::invalid_argument("simulate: snapshot times must ascend");
      if (seg > 1e-12) {
        int steps = std::max(1, static_cast<int>(std::ceil(seg / dt - 1e-12)));
        double h = seg / steps;
        for (int s = 0; s < steps; ++s) {
          // kick(h/2) - exact linear drift(h) - kick(h/2), kicks by midpoint RK2
          remainder(w, k1);
          wm = w;
          kernels::axpy(0.25 * h, k1.data(), wm.data(), wm.size());
          remainder(wm, k2);
          kernels::axpy(0.5 * h, k2.data(), w.data(), w.size());
          w = fiber_->apply(w, h);
          remainder(w, k1);
          wm = w;
          kernels::axpy(0.25 * h, k1.data(), wm.data(), wm.size());
          remainder(wm, k2);
          kernels::axpy(0.5 * h, k2.data(), w.data(), w.size());
          if (sup_abs_vec(w) > opts.blowup_cap) {
            *blowup = true;
            break;
          }
        }
        t_cur = t_target;
      }
      if (*blowup) break;
      if (store) {
        std::vector<double> u = w;
        for (std::size_t q = 0; q < u.size(); ++q) u[q] += phi0_[q];
        store->push_back(std::move(u));
      }
    }
  };

  bool blowup = false;
  std::vector<double> ts;
  for (double t : snapshot_times)
    if (t <= T + 1e-12) ts.push_back(std::min(t, T));
  traj.times = ts;
  run(opts.dt, ts, &traj.snaps, &blowup);
  traj.blowup = blowup;
  if (blowup) {
    traj.times.resize(traj.snaps.size());
    return traj;
  }

  if (opts.record_step_halving) {
    double th = std::min(opts.halving_horizon, T);
    std::vector<std::vector<double>> a, b;
    bool bu = false;
    run(opts.dt, {th}, &a, &bu);
    run(0.5 * opts.dt, {th}, &b, &bu);
    double diff = 0.0;
    for (std::size_t q = 0; q < a[0].size(); ++q)
      diff = std::max(diff, std::abs(a[0][q] - b[0][q]));
    traj.step_halving_error = diff;
  }
  return traj;
}

PhaseDiagnostics ExperimentKit::extract_phase(const Trajectory& traj,
                                              const std::vector<double>* gamma0,
                                              const ExtractOptions& opts) const {
  const int N = grid_.N;
  PhaseDiagnostics diag;
  diag.times = traj.times;

  // first-harmonic coefficients of the profile
  std::vector<std::complex<double>> c1(n_);
  for (int c = 0; c < n_; ++c) {
    std::vector<double> comp(wave_.phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                             wave_.phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    auto coeffs = spectral::fourier_coeffs(comp);
    c1[c] = coeffs[1];
  }

  const int hw = static_cast<int>(std::ceil(opts.window_halfwidth * opts.window_sigma / grid_.dx));
  std::vector<double> winw(2 * hw + 1);
  for (int j = -hw; j <= hw; ++j) {
    double x = j * grid_.dx;
    winw[j + hw] = std::exp(-x * x / (2.0 * opts.window_sigma * opts.window_sigma));
  }

  const std::vector<double>* prev_gamma = nullptr;
  for (std::size_t m = 0; m < traj.snaps.size(); ++m) {
    const auto& u = traj.snaps[m];

    // stage (i): complex order parameter, boxcar over exactly one period
    std::vector<std::complex<double>> w(N);
    for (int i = 0; i < N; ++i) {
      std::complex<double> acc(0.0);
      for (int c = 0; c < n_; ++c)
        acc += std::conj(c1[c]) * u[static_cast<std::size_t>(c) * N + i];
      double x = grid_.point(i);
      w[i] = acc * std::exp(std::complex<double>(0.0, -two_pi * x));
    }
    std::vector<std::complex<double>> mavg(N, 0.0);
    {
      std::complex<double> acc(0.0);
      for (int j = 0; j < P_; ++j) acc += w[j];
      for (int i = 0; i < N; ++i) {
        mavg[i] = acc / static_cast<double>(P_);
        acc -= w[i % N];
        acc += w[(i + P_) % N];
      }
    }
    std::vector<double> coarse(N);
    coarse[0] = std::arg(mavg[0]) / two_pi;
    for (int i = 1; i < N; ++i) {
      double d = std::arg(mavg[i] / mavg[i - 1]) / two_pi;
      coarse[i] = coarse[i - 1] + d;
    }

    // branch anchoring
    double anchor = 0.0;
    const std::vector<double>* target = prev_gamma ? prev_gamma : gamma0;
    if (target) {
      double mean = 0.0;
      for (int i = 0; i < N; ++i) mean += coarse[i] - (*target)[i];
      mean /= N;
      anchor = -std::round(mean);
    } else {
      double mean = 0.0;
      for (int i = 0; i < N; ++i) mean += coarse[i];
      anchor = -std::round(mean / N);
    }
    for (int i = 0; i < N; ++i) coarse[i] += anchor;

    // stage (ii): per-point Gauss-Newton on the windowed orbit distance
    std::vector<Interpolant> ui(n_), uid(n_);
    for (int c = 0; c < n_; ++c) {
      std::vector<double> comp(u.begin() + static_cast<std::size_t>(c) * N,
                               u.begin() + static_cast<std::size_t>(c + 1) * N);
      ui[c] = Interpolant(comp, grid_, opts.oversample);
      uid[c] = Interpolant(spectral::derivative(comp, 1, grid_.length()), grid_, opts.oversample);
    }
    std::vector<double> gamma(N);
    int failures = 0;
    for (int i = 0; i < N; ++i) {
      double gg = coarse[i];
      bool ok = false;
      for (int it = 0; it < opts.newton_iters; ++it) {
        double grad = 0.0, hess = 0.0;
        for (int j = -hw; j <= hw; ++j) {
          int idx = ((i + j) % N + N) % N;
          double zt = grid_.point(i) + j * grid_.dx; // consistent window coordinate
          double wgt = winw[j + hw];
          for (int c = 0; c < n_; ++c) {
            double uv = ui[c](zt - gg);
            double ud = uid[c](zt - gg);
            double diff = uv - phi0_[static_cast<std::size_t>(c) * N + idx];
            grad += wgt * diff * (-ud);
            hess += wgt * ud * ud;
          }
        }
        if (hess <= 0.0) break;
        double step = grad / hess;
        gg -= step;
        if (std::abs(step) < opts.newton_tol) {
          ok = true;
          break;
        }
      }
      if (!ok) ++failures;
      gamma[i] = gg;
    }
    if (failures > opts.max_fail_fraction * N)
      throw std::runtime_error("extract_phase: Newton refinement failed at too many points");
    for (int i = 0; i < N; ++i) {
      int j = (i + 1) % N;
      if (std::abs(gamma[j] - gamma[i]) > opts.jump_threshold && i + 1 < N)
        throw std::runtime_error("extract_phase: phase jump exceeds half a period (unwrap)");
    }

    diag.gamma.push_back(std::move(gamma));
    prev_gamma = &diag.gamma.back();
  }

  // smoothed derivative fields
  for (auto& gm : diag.gamma) {
    std::vector<double> sm = gm;
    if (opts.smooth_sigma > 0.0) {
      std::vector<spectral::cd> coeff(sm.begin(), sm.end());
      spectral::fft(coeff, false);
      for (int j = 0; j < N; ++j) {
        int ss = j <= N / 2 ? j : j - N;
        double kap = two_pi * ss / grid_.length();
        coeff[j] *= std::exp(-0.5 * kap * kap * opts.smooth_sigma * opts.smooth_sigma);
      }
      spectral::fft(coeff, true);
      for (int i = 0; i < N; ++i) sm[i] = coeff[i].real() / N;
    }
    diag.gamma_z.push_back(spectral::derivative(sm, 1, grid_.length()));
    diag.gamma_zz.push_back(spectral::derivative(sm, 2, grid_.length()));
    diag.max_gamma_z = std::max(diag.max_gamma_z, sup_abs_vec(diag.gamma_z.back()));
  }

  // d_t gamma by local quadratic fits over snapshot triples
  diag.gamma_t.resize(diag.gamma.size());
  for (std::size_t m = 0; m < diag.gamma.size(); ++m) {
    std::vector<double> gt(N, 0.0);
    if (m > 0 && m + 1 < diag.gamma.size()) {
      double t0 = diag.times[m - 1], t1 = diag.times[m], t2 = diag.times[m + 1];
      for (int i = 0; i < N; ++i) {
        double y0 = diag.gamma[m - 1][i], y1 = diag.gamma[m][i], y2 = diag.gamma[m + 1][i];
        // derivative at t1 of the quadratic through the three samples
        double d01 = (y1 - y0) / (t1 - t0);
        double d12 = (y2 - y1) / (t2 - t1);
        gt[i] = (d01 * (t2 - t1) + d12 * (t1 - t0)) / (t2 - t0);
      }
    } else if (m + 1 < diag.gamma.size()) {
      double t1 = diag.times[m], t2 = diag.times[m + 1];
      for (int i = 0; i < N; ++i)
        gt[i] = (diag.gamma[m + 1][i] - diag.gamma[m][i]) / (t2 - t1);
    } else if (m > 0) {
      double t0 = diag.times[m - 1], t1 = diag.times[m];
      for (int i = 0; i < N; ++i)
        gt[i] = (diag.gamma[m][i] - diag.gamma[m - 1][i]) / (t1 - t0);
    }
    diag.gamma_t[m] = std::move(gt);
  }
  return diag;
}

namespace {

// sup over the drift-tracking window: |remainder(x - center)| <= half
double window_sup(const std::vector<double>& field, const Grid& g, int comps, double center,
                  double half) {
  double sup = 0.0;
  const int N = g.N;
  for (int i = 0; i < N; ++i) {
    double rel = std::remainder(g.point(i) - center, g.length());
    if (std::abs(rel) > half) continue;
    for (int c = 0; c < comps; ++c)
      sup = std::max(sup, std::abs(field[static_cast<std::size_t>(c) * N + i]));
  }
  return sup;
}

} // namespace

NormSeries ExperimentKit::measure_decay(const Trajectory& traj, const PhaseDiagnostics& diag,
                                        double a, double window_half, double t_min) const {
  const int N = grid_.N;
  NormSeries ns;
  ns.ts = traj.times;
  std::vector<std::string> keys{"mod_phi0", "mod_family", "gamma",  "gamma_z",
                                "gamma_zz", "gamma_t",    "unmod"};
  for (auto& k : keys) ns.series[k] = {};

  for (std::size_t m = 0; m < traj.snaps.size(); ++m) {
    const auto& u = traj.snaps[m];
    const double t = traj.times[m];
    const double center = -a * t;

    std::vector<Interpolant> ui(n_);
    for (int c = 0; c < n_; ++c) {
      std::vector<double> comp(u.begin() + static_cast<std::size_t>(c) * N,
                               u.begin() + static_cast<std::size_t>(c + 1) * N);
      ui[c] = Interpolant(comp, grid_, 16);
    }
    std::vector<double> mod_phi0(static_cast<std::size_t>(n_) * N),
        mod_family(static_cast<std::size_t>(n_) * N), unmod(static_cast<std::size_t>(n_) * N);
    for (int i = 0; i < N; ++i) {
      double g = diag.gamma[m][i];
      double gz = diag.gamma_z[m][i];
      double dk = wave_.k * gz;
      for (int c = 0; c < n_; ++c) {
        double shifted = ui[c](grid_.point(i) - g);
        double fam_state = phi0_[static_cast<std::size_t>(c) * N + i] +
                           dk * dkphi_[static_cast<std::size_t>(c) * N + i] +
                           0.5 * dk * dk * dkkphi_[static_cast<std::size_t>(c) * N + i];
        mod_phi0[static_cast<std::size_t>(c) * N + i] =
            shifted - phi0_[static_cast<std::size_t>(c) * N + i];
        mod_family[static_cast<std::size_t>(c) * N + i] = shifted - fam_state;
        unmod[static_cast<std::size_t>(c) * N + i] =
            u[static_cast<std::size_t>(c) * N + i] - phi0_[static_cast<std::size_t>(c) * N + i];
      }
    }
    ns.series["mod_phi0"].push_back(window_sup(mod_phi0, grid_, n_, center, window_half));
    ns.series["mod_family"].push_back(window_sup(mod_family, grid_, n_, center, window_half));
    ns.series["unmod"].push_back(window_sup(unmod, grid_, n_, center, window_half));
    ns.series["gamma"].push_back(window_sup(diag.gamma[m], grid_, 1, center, window_half));
    ns.series["gamma_z"].push_back(window_sup(diag.gamma_z[m], grid_, 1, center, window_half));
    ns.series["gamma_zz"].push_back(window_sup(diag.gamma_zz[m], grid_, 1, center, window_half));
    ns.series["gamma_t"].push_back(window_sup(diag.gamma_t[m], grid_, 1, center, window_half));
  }
  for (auto& k : keys) ns.fits[k] = fit_loglog(ns.ts, ns.series[k], t_min);
  return ns;
}

HJComparison ExperimentKit::compare_to_hj(const PhaseDiagnostics& diag,
                                          const std::vector<double>& v0,
                                          const std::vector<double>& adjoint0_profile, double a,
                                          double d, double nu, double window_half,
                                          double t_min) const {
  const int N = grid_.N;
  HJComparison cmp;
  cmp.ts = diag.times;

  auto adj0 = tile(adjoint0_profile, n_);
  std::vector<double> breve0(N, 0.0);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < n_; ++c)
      breve0[i] += adj0[static_cast<std::size_t>(c) * N + i] *
                   v0[static_cast<std::size_t>(c) * N + i];

  std::vector<double> y0(N);
  if (nu != 0.0)
    for (int i = 0; i < N; ++i) y0[i] = std::expm1(nu / d * breve0[i]);

  double prev_ratio = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  for (std::size_t m = 0; m < diag.times.size(); ++m) {
    const double t = diag.times[m];
    std::vector<double> breve(N), breve_z(N);
    if (t == 0.0) {
      breve = breve0;
      breve_z = spectral::derivative(breve0, 1, grid_.length());
    } else {
      phase_dynamics::HeatPropagator prop(grid_, t, a, d, 12.0, /*periodic=*/true);
      if (nu == 0.0) {
        breve = prop.apply(breve0);
        breve_z = prop.apply_derivative(breve0);
      } else {
        auto y = prop.apply(y0);
        auto yz = prop.apply_derivative(y0);
        for (int i = 0; i < N; ++i) {
          if (1.0 + y[i] <= 0.0)
            throw phase_dynamics::ColeHopfPositivityError("compare_to_hj: E0 too large");
          breve[i] = d / nu * std::log1p(y[i]);
          breve_z[i] = d / nu * yz[i] / (1.0 + y[i]);
        }
      }
    }
    const double center = -a * t;
    std::vector<double> e0f(N), e1f(N);
    for (int i = 0; i < N; ++i) {
      e0f[i] = diag.gamma[m][i] - breve[i];
      e1f[i] = diag.gamma_z[m][i] - breve_z[i];
    }
    double e0 = window_sup(e0f, grid_, 1, center, window_half);
    double e1 = window_sup(e1f, grid_, 1, center, window_half);
    double gn = window_sup(diag.gamma[m], grid_, 1, center, window_half);
    cmp.err0.push_back(e0);
    cmp.err1.push_back(e1);
    cmp.gamma_norm.push_back(gn);
    if (t >= t_min && gn > 0.0) {
      double ratio = e0 / gn;
      if (ratio > prev_ratio * (1.0 + 1e-9)) decreasing = false;
      prev_ratio = ratio;
    }
  }
  cmp.ratio_decreasing = decreasing;
  return cmp;
}

std::vector<double> ExperimentKit::invert_phase_map(const std::vector<double>& gamma,
                                                    double tol) const {
  const int N = grid_.N;
  Interpolant gi(gamma, grid_, 16);
  std::vector<double> psi_inv(N);
  for (int i = 0; i < N; ++i) {
    double z = grid_.point(i);
    double x = z;
    for (int it = 0; it < 200; ++it) {
      double xn = z + gi(x);
      if (std::abs(xn - x) < tol) {
        x = xn;
        break;
      }
      x = xn;
    }
    psi_inv[i] = x;
  }
  return psi_inv;
}

CorollaryResult ExperimentKit::corollary_check(const Trajectory& traj,
                                               const PhaseDiagnostics& diag, double a,
                                               double window_half, double t_min) const {
  const int N = grid_.N;
  CorollaryResult res;
  res.ts = traj.times;

  std::vector<spectral::TrigInterp> phi_interp, dk_interp, dkk_interp;
  for (int c = 0; c < n_; ++c) {
    std::vector<double> comp(wave_.phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                             wave_.phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    phi_interp.emplace_back(comp, 1.0);
    std::vector<double> ck(family_.dk_phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                           family_.dk_phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    dk_interp.emplace_back(ck, 1.0);
    std::vector<double> ckk(family_.dkk_phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                            family_.dkk_phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    dkk_interp.emplace_back(ckk, 1.0);
  }

  for (std::size_t m = 0; m < traj.snaps.size(); ++m) {
    const auto& u = traj.snaps[m];
    const double t = traj.times[m];
    const double center = -a * t;
    const auto& gamma = diag.gamma[m];
    const auto& gz = diag.gamma_z[m];
    const auto& gzz = diag.gamma_zz[m];

    auto psi_inv = invert_phase_map(gamma);
    Interpolant gi(gamma, grid_, 16);
    Interpolant gzi(gz, grid_, 16);

    double ng = sup_abs_vec(gamma), ngz = sup_abs_vec(gz), ngzz = sup_abs_vec(gzz);
    std::vector<double> tr(static_cast<std::size_t>(n_) * N), fa(static_cast<std::size_t>(n_) * N);
    for (int i = 0; i < N; ++i) {
      double z = grid_.point(i);
      // fixed-point residual
      double r = std::abs(psi_inv[i] - z - gi(psi_inv[i]));
      res.max_fixed_point_residual = std::max(res.max_fixed_point_residual, r);
      // Taylor defects of the proof
      double lhs1 = std::abs(psi_inv[i] - z - gamma[i] * (1.0 + gz[i]));
      double rhs1 = (ngz * ngz + 0.5 * ngzz * ng) * ng;
      res.max_taylor_defect_margin = std::max(res.max_taylor_defect_margin, lhs1 - rhs1);
      double lhs2 = std::abs(gzi(psi_inv[i]) - gz[i]);
      double rhs2 = ngzz * ng;
      res.max_gamma_z_shift_defect = std::max(res.max_gamma_z_shift_defect, lhs2 - rhs2);

      double gv = gamma[i], gzv = gz[i];
      double arg_tr = z + gv;
      double arg_fa = z + gv * (1.0 + gzv);
      double dk = wave_.k * gzv;
      for (int c = 0; c < n_; ++c) {
        double u_val = u[static_cast<std::size_t>(c) * N + i];
        tr[static_cast<std::size_t>(c) * N + i] = u_val - phi_interp[c].eval_real(arg_tr);
        double fam = phi_interp[c].eval_real(arg_fa) + dk * dk_interp[c].eval_real(arg_fa) +
                     0.5 * dk * dk * dkk_interp[c].eval_real(arg_fa);
        fa[static_cast<std::size_t>(c) * N + i] = u_val - fam;
      }
    }
    res.norm_translate.push_back(window_sup(tr, grid_, n_, center, window_half));
    res.norm_family.push_back(window_sup(fa, grid_, n_, center, window_half));
  }
  res.fit_translate = fit_loglog(res.ts, res.norm_translate, t_min);
  res.fit_family = fit_loglog(res.ts, res.norm_family, t_min);
  return res;
}

std::vector<double> ExperimentKit::nonlinearity_eval(NonlinKind kind, const Fields& f,
                                                     double omega1) const {
  const int N = grid_.N;
  const double k0 = wave_.k;
  const auto& D = sys_->D();
  auto gz = spectral::derivative(f.gamma, 1, grid_.length());
  auto gzz = spectral::derivative(f.gamma, 2, grid_.length());
  auto gzzz = spectral::derivative(f.gamma, 3, grid_.length());
  double gzmax = sup_abs_vec(gz);
  if (gzmax > 0.5)
    throw std::invalid_argument("nonlinearity_eval: ||gamma_z|| must be <= 1/2");

  std::vector<double> out(static_cast<std::size_t>(n_) * N, 0.0);
  model::Vec uu(n_), vv(n_), zz(n_), dk(n_);
  const double a = wave_.omega - k0 * omega1;
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < n_; ++c) {
      uu[c] = phi0_[static_cast<std::size_t>(c) * N + i];
      vv[c] = f.v[static_cast<std::size_t>(c) * N + i];
      dk[c] = dkphi_[static_cast<std::size_t>(c) * N + i];
      zz[c] = vv[c] - k0 * dk[c] * gz[i];
    }
    const double gzi = gz[i], gzzi = gzz[i], gzzzi = gzzz[i];
    const double gti = f.gamma_t[i];
    const double gtilde = gti - a * gzi;
    model::Vec fu = sys_->f(uu + vv);
    model::Vec f0 = sys_->f(uu);
    model::Mat J = sys_->df(uu);
    model::Vec quad = fu - f0 - J * vv; // f(phi0+v) - f(phi0) - f'(phi0)v
    model::Vec result = model::Vec::Zero(n_);
    switch (kind) {
      case NonlinKind::Q:
        result = quad * (1.0 - gzi);
        break;
      case NonlinKind::R: {
        model::Vec dphi(n_);
        for (int c = 0; c < n_; ++c) dphi[c] = dphi_[static_cast<std::size_t>(c) * N + i];
        model::Vec inner = gzi * gzi * dphi - gzzi * vv - gzi * gzi / (1.0 - gzi) * vv;
        result = -gti * vv + wave_.omega * gzi * vv + k0 * k0 / (1.0 - gzi) * (D * inner);
        break;
      }
      case NonlinKind::S: {
        model::Vec inner = 2.0 * gzi * vv + gzi * gzi / (1.0 - gzi) * vv;
        result = k0 * k0 * (D * inner);
        break;
      }
      case NonlinKind::Q_p: {
        model::Vec cubic = quad - 0.5 * sys_->d2f(uu, vv, vv);
        model::Vec dphi(n_), dzk(n_);
        for (int c = 0; c < n_; ++c) {
          dphi[c] = dphi_[static_cast<std::size_t>(c) * N + i];
          dzk[c] = dzkphi_[static_cast<std::size_t>(c) * N + i];
        }
        result = quad * gzi + cubic + 0.5 * sys_->d2f(uu, zz, zz) +
                 k0 * gzi * sys_->d2f(uu, zz, dk) +
                 2.0 * k0 * k0 * omega1 * gzi * gzzi * dk +
                 2.0 * k0 * k0 *
                     (D * (gzi * gzzi * (dphi + 4.0 * k0 * dzk) +
                           2.0 * k0 * (gzzi * gzzi + gzi * gzzzi) * dk));
        break;
      }
      case NonlinKind::R_p: {
        model::Vec dphi(n_);
        for (int c = 0; c < n_; ++c) dphi[c] = dphi_[static_cast<std::size_t>(c) * N + i];
        model::Vec inner = gzi * gzi * gzi * dphi - gzzi * vv - gzi * gzi / (1.0 - gzi) * vv;
        result = -gtilde * vv + k0 * omega1 * gzi * zz + k0 * k0 / (1.0 - gzi) * (D * inner);
        break;
      }
      case NonlinKind::S_p: {
        model::Vec inner = 2.0 * gzi * zz + gzi * gzi / (1.0 - gzi) * vv;
        result = k0 * k0 * (D * inner);
        break;
      }
    }
    for (int c = 0; c < n_; ++c) out[static_cast<std::size_t>(c) * N + i] = result[c];
  }
  return out;
}

std::vector<double> ExperimentKit::nonlinearity_full(const Fields& f) const {
  auto Q = nonlinearity_eval(NonlinKind::Q, f, 0.0);
  auto R = nonlinearity_eval(NonlinKind::R, f, 0.0);
  auto S = nonlinearity_eval(NonlinKind::S, f, 0.0);
  auto Rz = dz(R, 1, n_);
  auto Szz = dz(S, 2, n_);
  for (std::size_t q = 0; q < Q.size(); ++q) Q[q] += Rz[q] + Szz[q];
  return Q;
}

double ExperimentKit::modulation_residual_check(const std::vector<double>& gamma,
                                                const std::vector<double>& gamma_t,
                                                double s0) const {
  const int N = grid_.N;
  std::vector<spectral::TrigInterp> phi_interp, dphi_interp;
  for (int c = 0; c < n_; ++c) {
    std::vector<double> comp(wave_.phi.begin() + static_cast<std::size_t>(c) * wave_.N,
                             wave_.phi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    phi_interp.emplace_back(comp, 1.0);
    std::vector<double> dcomp(wave_.dphi.begin() + static_cast<std::size_t>(c) * wave_.N,
                              wave_.dphi.begin() + static_cast<std::size_t>(c + 1) * wave_.N);
    dphi_interp.emplace_back(dcomp, 1.0);
  }
  auto gz = spectral::derivative(gamma, 1, grid_.length());
  auto gzt = spectral::derivative(gamma_t, 1, grid_.length());

  // v from the exact translate u = phi0(. + s0) through the modulated ansatz
  Fields f;
  f.gamma = gamma;
  f.gamma_t = gamma_t;
  f.v.resize(static_cast<std::size_t>(n_) * N);
  std::vector<double> vt(static_cast<std::size_t>(n_) * N);
  for (int i = 0; i < N; ++i) {
    double z = grid_.point(i);
    double arg = z - gamma[i] + s0;
    for (int c = 0; c < n_; ++c) {
      f.v[static_cast<std::size_t>(c) * N + i] =
          phi_interp[c].eval_real(arg) - phi0_[static_cast<std::size_t>(c) * N + i];
      vt[static_cast<std::size_t>(c) * N + i] = -gamma_t[i] * dphi_interp[c].eval_real(arg);
    }
  }

  // LHS: (d_t - L0)[v + phi0' gamma - gamma_z v]
  std::vector<double> combo(static_cast<std::size_t>(n_) * N), combo_t(combo.size());
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < n_; ++c) {
      std::size_t q = static_cast<std::size_t>(c) * N + i;
      combo[q] = f.v[q] + dphi_[q] * gamma[i] - gz[i] * f.v[q];
      combo_t[q] = vt[q] + dphi_[q] * gamma_t[i] - gzt[i] * f.v[q] - gz[i] * vt[q];
    }
  // L0 combo
  auto d1 = dz(combo, 1, n_);
  auto d2v = dz(combo, 2, n_);
  const auto& D = sys_->D();
  const double k0 = wave_.k, om = wave_.omega;
  std::vector<double> lhs(combo.size());
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < n_; ++c) {
      std::size_t q = static_cast<std::size_t>(c) * N + i;
      double acc = om * d1[q];
      for (int cc = 0; cc < n_; ++cc) {
        std::size_t qq = static_cast<std::size_t>(cc) * N + i;
        acc += k0 * k0 * D(c, cc) * d2v[qq] +
               df_phi0_[(static_cast<std::size_t>(c) * n_ + cc) * N + i] * combo[qq];
      }
      lhs[q] = combo_t[q] - acc;
    }
  auto rhs = nonlinearity_full(f);
  double defect = 0.0;
  for (std::size_t q = 0; q < lhs.size(); ++q)
    defect = std::max(defect, std::abs(lhs[q] - rhs[q]));
  return defect;
}

double ExperimentKit::fp_decomposition_check(const Fields& f,
                                             const std::vector<double>& fp_profile,
                                             double omega1, double a) const {
  (void)a;
  const int N = grid_.N;
  auto gz = spectral::derivative(f.gamma, 1, grid_.length());
  auto full = nonlinearity_full(f);
  auto Qp = nonlinearity_eval(NonlinKind::Q_p, f, omega1);
  auto Rp = nonlinearity_eval(NonlinKind::R_p, f, omega1);
  auto Sp = nonlinearity_eval(NonlinKind::S_p, f, omega1);
  auto Rpz = dz(Rp, 1, n_);
  auto Spzz = dz(Sp, 2, n_);
  auto fp = tile(fp_profile, n_);
  const double k0 = wave_.k;
  double defect = 0.0;
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < n_; ++c) {
      std::size_t q = static_cast<std::size_t>(c) * N + i;
      double rhs = k0 * k0 * fp[q] * gz[i] * gz[i] + Qp[q] + Rpz[q] + Spzz[q];
      defect = std::max(defect, std::abs(full[q] - rhs));
    }
  return defect;
}

} // namespace wavemod::experiment
