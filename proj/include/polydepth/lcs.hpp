#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "polydepth/error.hpp"
#include "polydepth/proximity.hpp"

namespace polydepth {

/// Stacked contact planes J q >= c around one contact configuration.
struct LocalContactSpace {
  Eigen::Matrix<double, Eigen::Dynamic, 3> J;
  Eigen::VectorXd c;
  std::vector<ContactFeature> features;  // input list, before rank repair
  std::vector<int> rows;                 // feature index of each kept row

  int n() const { return static_cast<int>(J.rows()); }
};

/// Rows are taken in order; a row is dropped when its incremental Cholesky pivot
/// squared falls below `pivot_tol`, which keeps J J^T positive definite.
inline LocalContactSpace build_lcs(const std::vector<ContactFeature>& features, double pivot_tol = 1e-10) {
  if (features.empty()) throw Error(ErrorCode::EmptyFeatures, "no contact features");
  LocalContactSpace lcs;
  lcs.features = features;
  std::vector<Vec3> kept;
  Eigen::MatrixXd L(3, 3);
  L.setZero();
  for (int i = 0; i < static_cast<int>(features.size()); ++i) {
    const Vec3 j = features[i].normal.normalized();
    const int m = static_cast<int>(kept.size());
    if (m == 3) break;
    Eigen::VectorXd y(m);
    for (int r = 0; r < m; ++r) {
      double s = kept[r].dot(j);
      for (int k = 0; k < r; ++k) s -= L(r, k) * y[k];
      y[r] = s / L(r, r);
    }
    const double pivot2 = j.squaredNorm() - y.squaredNorm();
    if (pivot2 < pivot_tol) continue;
    for (int k = 0; k < m; ++k) L(m, k) = y[k];
    L(m, m) = std::sqrt(pivot2);
    kept.push_back(j);
    lcs.rows.push_back(i);
  }
  const int n = static_cast<int>(kept.size());
  lcs.J.resize(n, 3);
  lcs.c.resize(n);
  for (int r = 0; r < n; ++r) {
    lcs.J.row(r) = kept[r].transpose();
    lcs.c[r] = features[lcs.rows[r]].bias;
  }
  return lcs;
}

}  // namespace polydepth
