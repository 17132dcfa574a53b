#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "polydepth/error.hpp"
#include "polydepth/lcs.hpp"

namespace polydepth {

struct PgsOptions {
  double tolerance = 1e-10;  // scaled by (1 + max|c|)
  int max_sweeps = 200;
  bool record_objective = false;
};

struct PgsSolution {
  Eigen::VectorXd lambda;
  Eigen::VectorXd q;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> objective;  // per sweep, when requested
};

/// Least-norm q with J q >= c via the complementarity problem
///   lambda >= 0,  (1/4) J J^T lambda - c >= 0,  lambda . ((1/4) J J^T lambda - c) = 0,
/// solved by projected Gauss-Seidel from lambda = 0; q = (1/4) J^T lambda.
/// The residual is max_i |min(lambda_i / 4, w_i)| with w = (1/4) J J^T lambda - c.
inline PgsSolution solve_pgs(const Eigen::MatrixXd& J, const Eigen::VectorXd& c, const PgsOptions& opt = {}) {
  const int n = static_cast<int>(J.rows());
  if (n == 0 || c.size() != n) throw Error(ErrorCode::InvalidArgument, "empty or mismatched system");
  const Eigen::MatrixXd M = J * J.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success || M.diagonal().minCoeff() <= 0.0) {
    throw Error(ErrorCode::NotPositiveDefinite, "J J^T is not positive definite");
  }
  const Eigen::VectorXd rhs = 4.0 * c;
  const double tol = opt.tolerance * (1.0 + c.cwiseAbs().maxCoeff());

  PgsSolution sol;
  sol.lambda = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& lam = sol.lambda;
  auto residual = [&]() {
    const Eigen::VectorXd w = 0.25 * (M * lam) - c;
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(std::min(0.25 * lam[i], w[i])));
    return r;
  };
  auto objective = [&]() { return 0.5 * lam.dot(M * lam) - rhs.dot(lam); };

  sol.residual = residual();
  sol.converged = sol.residual <= tol;
  while (!sol.converged && sol.iterations < opt.max_sweeps) {
    for (int i = 0; i < n; ++i) {
      const double mi = M.row(i).dot(lam);
      lam[i] = std::max(0.0, lam[i] + (rhs[i] - mi) / M(i, i));
    }
    ++sol.iterations;
    if (opt.record_objective) sol.objective.push_back(objective());
    sol.residual = residual();
    sol.converged = sol.residual <= tol;
  }
  sol.q = 0.25 * (J.transpose() * lam);
  return sol;
}

inline PgsSolution solve(const LocalContactSpace& lcs, const PgsOptions& opt = {}) {
  return solve_pgs(Eigen::MatrixXd(lcs.J), lcs.c, opt);
}

}  // namespace polydepth
