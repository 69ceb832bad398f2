#include "wavemod/model.hpp"

#include <cmath>
#include <stdexcept>

namespace wavemod::model {

RDSystem::RDSystem(std::string name, Mat diffusion, std::vector<PolyTerm> terms,
                   std::map<std::string, double> params)
    : name_(std::move(name)),
      n_(static_cast<int>(diffusion.rows())),
      D_(std::move(diffusion)),
      terms_(std::move(terms)),
      params_(std::move(params)) {
  if (D_.rows() != D_.cols()) throw std::invalid_argument("diffusion matrix must be square");
  if (!D_.isApprox(D_.transpose(), 1e-14))
    throw std::invalid_argument("diffusion matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(D_);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("diffusion matrix must be positive definite");
  for (const auto& t : terms_) {
    if (t.comp < 0 || t.comp >= n_ || static_cast<int>(t.exps.size()) != n_)
      throw std::invalid_argument("malformed reaction term");
  }
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

} // namespace

Vec RDSystem::f(const Vec& u) const {
  if (u.size() != n_) throw std::invalid_argument("f: state has wrong dimension");
  Vec out = Vec::Zero(n_);
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int j = 0; j < n_; ++j) v *= ipow(u[j], t.exps[j]);
    out[t.comp] += v;
  }
  return out;
}

Mat RDSystem::df(const Vec& u) const {
  if (u.size() != n_) throw std::invalid_argument("df: state has wrong dimension");
  Mat out = Mat::Zero(n_, n_);
  for (const auto& t : terms_) {
    for (int k = 0; k < n_; ++k) {
      if (t.exps[k] == 0) continue;
      double v = t.coeff * t.exps[k] * ipow(u[k], t.exps[k] - 1);
      for (int j = 0; j < n_; ++j)
        if (j != k) v *= ipow(u[j], t.exps[j]);
      out(t.comp, k) += v;
    }
  }
  return out;
}

Vec RDSystem::d2f(const Vec& u, const Vec& v, const Vec& w) const {
  if (u.size() != n_ || v.size() != n_ || w.size() != n_)
    throw std::invalid_argument("d2f: state has wrong dimension");
  Vec out = Vec::Zero(n_);
  // accumulated pairwise so swapping (v, w) is bit-exact
  for (const auto& t : terms_) {
    for (int k = 0; k < n_; ++k) {
      int ek = t.exps[k];
      if (ek >= 2) {
        double c = t.coeff * ek * (ek - 1) * ipow(u[k], ek - 2);
        for (int j = 0; j < n_; ++j)
          if (j != k) c *= ipow(u[j], t.exps[j]);
        out[t.comp] += c * (v[k] * w[k]);
      }
      for (int l = k + 1; l < n_; ++l) {
        int el = t.exps[l];
        if (ek == 0 || el == 0) continue;
        double c = t.coeff * ek * el * ipow(u[k], ek - 1) * ipow(u[l], el - 1);
        for (int j = 0; j < n_; ++j)
          if (j != k && j != l) c *= ipow(u[j], t.exps[j]);
        out[t.comp] += c * (v[k] * w[l] + v[l] * w[k]);
      }
    }
  }
  return out;
}

void RDSystem::f_batch(const std::vector<double>& u, std::vector<double>& out, int N) const {
  out.assign(static_cast<std::size_t>(n_) * N, 0.0);
  for (const auto& t : terms_) {
    double* o = out.data() + static_cast<std::size_t>(t.comp) * N;
    for (int i = 0; i < N; ++i) {
      double v = t.coeff;
      for (int j = 0; j < n_; ++j) {
        double uj = u[static_cast<std::size_t>(j) * N + i];
        v *= ipow(uj, t.exps[j]);
      }
      o[i] += v;
    }
  }
}

void RDSystem::df_batch(const std::vector<double>& u, std::vector<double>& out, int N) const {
  out.assign(static_cast<std::size_t>(n_) * n_ * N, 0.0);
  Vec ui(n_);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < n_; ++j) ui[j] = u[static_cast<std::size_t>(j) * N + i];
    Mat J = df(ui);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c)
        out[(static_cast<std::size_t>(r) * n_ + c) * N + i] = J(r, c);
  }
}

namespace {

double get(const std::map<std::string, double>& params, const std::string& key, double dflt) {
  auto it = params.find(key);
  return it == params.end() ? dflt : it->second;
}

// f(u) = u - |u|^2 u
std::vector<PolyTerm> cubic_gl_terms(double rate, double beta) {
  std::vector<PolyTerm> t;
  auto add = [&](int comp, double c, int e1, int e2) {
    t.push_back({comp, c, {e1, e2}});
  };
  // rate * [(1 - r^2) u + beta r^2 J u],  J = [[0,-1],[1,0]]
  add(0, rate, 1, 0);
  add(0, -rate, 3, 0);
  add(0, -rate, 1, 2);
  add(1, rate, 0, 1);
  add(1, -rate, 2, 1);
  add(1, -rate, 0, 3);
  if (beta != 0.0) {
    add(0, -rate * beta, 2, 1);
    add(0, -rate * beta, 0, 3);
    add(1, rate * beta, 3, 0);
    add(1, rate * beta, 1, 2);
  }
  return t;
}

} // namespace

RDSystem preset(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "real-ginzburg-landau") {
    return RDSystem(name, Mat::Identity(2, 2), cubic_gl_terms(1.0, 0.0));
  }
  if (name == "lambda-omega") {
    double rate = get(params, "rate", 50.0);
    double beta = get(params, "beta", 0.5);
    return RDSystem(name, Mat::Identity(2, 2), cubic_gl_terms(rate, beta),
                    {{"rate", rate}, {"beta", beta}});
  }
  if (name == "brusselator") {
    double a = get(params, "a", 1.0);
    double b = get(params, "b", 1.9);
    double Du = get(params, "Du", 1.0);
    double Dv = get(params, "Dv", 8.0);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = Du;
    D(1, 1) = Dv;
    std::vector<PolyTerm> t;
    t.push_back({0, a, {0, 0}});
    t.push_back({0, -(b + 1.0), {1, 0}});
    t.push_back({0, 1.0, {2, 1}});
    t.push_back({1, b, {1, 0}});
    t.push_back({1, -1.0, {2, 1}});
    return RDSystem(name, D, std::move(t), {{"a", a}, {"b", b}, {"Du", Du}, {"Dv", Dv}});
  }
  if (name == "schnakenberg") {
    double a = get(params, "a", 0.05);
    double b = get(params, "b", 1.4);
    double Du = get(params, "Du", 1.0);
    double Dv = get(params, "Dv", 20.0);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = Du;
    D(1, 1) = Dv;
    std::vector<PolyTerm> t;
    t.push_back({0, a, {0, 0}});
    t.push_back({0, -1.0, {1, 0}});
    t.push_back({0, 1.0, {2, 1}});
    t.push_back({1, b, {0, 0}});
    t.push_back({1, -1.0, {2, 1}});
    return RDSystem(name, D, std::move(t), {{"a", a}, {"b", b}, {"Du", Du}, {"Dv", Dv}});
  }
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"real-ginzburg-landau", "lambda-omega", "brusselator", "schnakenberg"};
}

} // namespace wavemod::model
