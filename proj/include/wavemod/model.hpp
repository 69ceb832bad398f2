#pragma once
// Reaction-diffusion systems du/dt = D u_xx + f(u) with hand-analytic first
// and second derivatives of the reaction term. All built-in presets are
// polynomial, so f, f' and f'' are evaluated exactly from a term list.

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace wavemod::model {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One monomial c * prod_j u_j^{e_j} contributing to component `comp` of f.
struct PolyTerm {
  int comp = 0;
  double coeff = 0.0;
  std::vector<int> exps;
};

class RDSystem {
public:
  RDSystem(std::string name, Mat diffusion, std::vector<PolyTerm> terms,
           std::map<std::string, double> params = {});

  int n() const { return n_; }
  const Mat& D() const { return D_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, double>& params() const { return params_; }

  Vec f(const Vec& u) const;
  Mat df(const Vec& u) const;
  // Bilinear Hessian action f''(u)(v, w); symmetric in (v, w).
  Vec d2f(const Vec& u, const Vec& v, const Vec& w) const;

  // Batched evaluation on component-major sample arrays (length n*N).
  void f_batch(const std::vector<double>& u, std::vector<double>& out, int N) const;
  // Jacobian at every sample, row-major blocks of size n*n per point.
  void df_batch(const std::vector<double>& u, std::vector<double>& out, int N) const;

private:
  std::string name_;
  int n_;
  Mat D_;
  std::vector<PolyTerm> terms_;
  std::map<std::string, double> params_;
};

// name in {real-ginzburg-landau, lambda-omega, brusselator, schnakenberg};
// unknown names throw std::invalid_argument. `params` overrides preset defaults.
RDSystem preset(const std::string& name, const std::map<std::string, double>& params = {});

std::vector<std::string> preset_names();

} // namespace wavemod::model
