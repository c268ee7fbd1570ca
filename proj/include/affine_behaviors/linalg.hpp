#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace ab::linalg {

// Numerical rank with a cut relative to the largest singular value. A matrix
// whose largest singular value is itself below `abs_floor` has rank 0.
template <typename Derived>
int numeric_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol, double abs_floor = 1e-14) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(m.eval());
  const auto& s = svd.singularValues();
  if (s(0) <= abs_floor) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

// Orthonormal basis of the right null space.
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const int r = numeric_rank(m, rel_tol);
  return svd.matrixV().rightCols(n - r);
}

// Orthonormal basis of the column space.
inline Eigen::MatrixXd range_basis(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const int r = numeric_rank(m, rel_tol);
  return svd.matrixU().leftCols(r);
}

// Minimum-norm least-squares solution.
inline Eigen::MatrixXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel_tol) {
  if (a.cols() == 0) return Eigen::MatrixXd(0, b.cols());
  if (a.rows() == 0) return Eigen::MatrixXd::Zero(a.cols(), b.cols());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(rel_tol);
  return cod.solve(b);
}

inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() == 0 || a.cols() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(rel_tol);
  return cod.pseudoInverse();
}

// Lowest-index rows of `m` forming a basis of its row space, scanned in order.
inline std::vector<int> greedy_independent_rows(const Eigen::MatrixXd& m, double rel_tol) {
  std::vector<int> picked;
  if (m.rows() == 0 || m.cols() == 0) return picked;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::MatrixXd basis(0, m.cols());  // orthonormal rows spanning picked rows
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::RowVectorXd v = m.row(i);
    const double vn = v.norm();
    if (vn <= rel_tol * scale) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < basis.rows(); ++k) v -= v.dot(basis.row(k)) * basis.row(k);
    if (v.norm() > 10.0 * rel_tol * std::max(vn, scale)) {
      basis.conservativeResize(basis.rows() + 1, Eigen::NoChange);
      basis.row(basis.rows() - 1) = v / v.norm();
      picked.push_back(static_cast<int>(i));
    }
    if (static_cast<Eigen::Index>(picked.size()) == m.cols()) break;
  }
  return picked;
}

// Eigenvalues of a symmetric matrix, ascending. Empty input gives an empty vector.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return Eigen::VectorXd(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace ab::linalg
