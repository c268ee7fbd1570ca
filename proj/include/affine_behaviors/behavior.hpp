#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "polymat.hpp"

namespace ab {

/// Finite window of a vector signal, samples[i] taken at time start_time + i.
struct TrajectorySegment {
  long start_time = 0;
  std::vector<Eigen::VectorXd> samples;

  std::size_t size() const noexcept { return samples.size(); }
  Eigen::Index dim() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
  long end_time() const noexcept { return start_time + static_cast<long>(samples.size()); }

  const Eigen::VectorXd& at(long t) const {
    if (t < start_time || t >= end_time()) throw DimensionError("trajectory sample out of range");
    return samples[static_cast<std::size_t>(t - start_time)];
  }

  // w_[t, t+len-1] stacked into one vector.
  Eigen::VectorXd window(long t, int len) const {
    if (len < 0 || t < start_time || t + len > end_time()) throw DimensionError("window outside trajectory segment");
    const Eigen::Index q = dim();
    Eigen::VectorXd v(q * len);
    for (int i = 0; i < len; ++i) v.segment(i * q, q) = at(t + i);
    return v;
  }

  void validate() const {
    for (const auto& s : samples)
      if (s.size() != dim()) throw DimensionError("trajectory samples differ in dimension");
  }
};

/// B = { w : R(sigma) w = c } with w split into q to-be-controlled and k
/// control variables (columns [0, q) and [q, q+k) of R).
struct OffsetKernelRep {
  PolyMatrix R;
  Eigen::VectorXd c;
  std::size_t q = 0;
  std::size_t k = 0;

  OffsetKernelRep() = default;
  OffsetKernelRep(PolyMatrix r, Eigen::VectorXd offset) : OffsetKernelRep(r, std::move(offset), r.cols(), 0) {}
  OffsetKernelRep(PolyMatrix r, Eigen::VectorXd offset, std::size_t q_vars, std::size_t k_vars)
      : R(std::move(r)), c(std::move(offset)), q(q_vars), k(k_vars) {
    if (static_cast<std::size_t>(c.size()) != R.rows())
      throw DimensionError("offset length " + std::to_string(c.size()) + " differs from row count " +
                           std::to_string(R.rows()));
    if (q + k != R.cols())
      throw DimensionError("variable split q + k = " + std::to_string(q + k) + " differs from column count " +
                           std::to_string(R.cols()));
  }

  // Linear behavior ker R(sigma) over all columns.
  static OffsetKernelRep linear(PolyMatrix r, std::size_t q_vars, std::size_t k_vars) {
    const auto rows = static_cast<Eigen::Index>(r.rows());
    return {std::move(r), Eigen::VectorXd::Zero(rows), q_vars, k_vars};
  }
  static OffsetKernelRep linear(PolyMatrix r) {
    const std::size_t n = r.cols();
    return linear(std::move(r), n, 0);
  }
  // The free behavior over n variables.
  static OffsetKernelRep free(std::size_t q_vars, std::size_t k_vars = 0) {
    return {PolyMatrix(0, q_vars + k_vars), Eigen::VectorXd(0), q_vars, k_vars};
  }

  std::size_t vars() const noexcept { return R.cols(); }
  std::size_t rows() const noexcept { return R.rows(); }
  bool is_linear() const noexcept { return c.size() == 0 || c.cwiseAbs().maxCoeff() == 0.0; }
};

struct IoCardinality {
  std::size_t m = 0;
  std::size_t p = 0;
};

struct ConstantTrajectory {
  Eigen::VectorXd value;
  bool unique = false;
};

/// Rows of a rep after unimodular reduction, with offsets transformed by U(1).
struct RowReduction {
  PolyMatrix R;
  Eigen::VectorXd c;
  std::vector<int> degrees;  // row degrees measured on the reduced column subset
  bool row_proper = false;
};

/// Affine window set {particular + basis * z} of length-N windows.
struct WindowSpace {
  int length = 0;
  std::size_t vars = 0;
  Eigen::MatrixXd basis;       // orthonormal columns, size vars*N x dim
  Eigen::VectorXd particular;  // minimum-norm window of the affine behavior
  Eigen::Index dim() const noexcept { return basis.cols(); }
};

/// Basis of a window subspace normalized so that the rows listed in
/// `pivots` form the identity: window coordinates are then sample values.
struct CanonicalBasis {
  Eigen::MatrixXd basis;
  std::vector<int> pivots;
};

namespace detail {
inline double offset_scale(const Eigen::VectorXd& c) { return std::max(1.0, c.size() ? c.cwiseAbs().maxCoeff() : 0.0); }

inline void require_nonempty(const OffsetKernelRep& b, const char* op);
}  // namespace detail

/// True iff R(sigma) w = c has no solution: some row annihilated by the
/// compression carries a nonzero transformed offset.
inline bool is_empty(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  if (b.rows() == 0) return false;
  const RowCompression rc = row_compress(b.R, tol);
  if (rc.zero_rows == 0) return false;
  const Eigen::MatrixXd u1 = rc.U.eval_real(1.0);
  const Eigen::VectorXd tc = u1 * b.c;
  const std::size_t r = rc.reduced.rows();
  const double scale = std::max(1.0, u1.cwiseAbs().rowwise().sum().maxCoeff() * detail::offset_scale(b.c));
  for (std::size_t i = r; i < b.rows(); ++i)
    if (std::abs(tc(static_cast<Eigen::Index>(i))) > tol.residual * scale) return true;
  return false;
}

namespace detail {
inline void require_nonempty(const OffsetKernelRep& b, const char* op) {
  if (is_empty(b)) throw EmptyBehaviorError(std::string(op) + ": the behavior is empty");
}
}  // namespace detail

/// Same behavior, full row rank R. Reps that already have full row rank are
/// returned unchanged.
inline OffsetKernelRep minimize(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  if (b.rows() == 0) return b;
  if (rank_generic(b.R, tol) == static_cast<int>(b.rows())) return b;
  const RowCompression rc = row_compress(b.R, tol);
  const Eigen::VectorXd tc = rc.U.eval_real(1.0) * b.c;
  const std::size_t r = rc.reduced.rows();
  const Eigen::MatrixXd u1 = rc.U.eval_real(1.0);
  const double scale = std::max(1.0, u1.cwiseAbs().rowwise().sum().maxCoeff() * detail::offset_scale(b.c));
  for (std::size_t i = r; i < b.rows(); ++i)
    if (std::abs(tc(static_cast<Eigen::Index>(i))) > tol.residual * scale)
      throw EmptyBehaviorError("minimize: the behavior is empty");
  return {rc.reduced, tc.head(static_cast<Eigen::Index>(r)), b.q, b.k};
}

inline OffsetKernelRep difference_behavior(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "difference_behavior");
  (void)tol;
  return OffsetKernelRep::linear(b.R, b.q, b.k);
}

inline IoCardinality io_cardinality(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "io_cardinality");
  const auto p = static_cast<std::size_t>(rank_generic(b.R, tol));
  return {b.vars() - p, p};
}

inline bool is_autonomous(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "is_autonomous");
  return b.vars() > 0 && rank_generic(b.R, tol) == static_cast<int>(b.vars());
}

/// Constant w with R(1) w = c, minimum norm. Absent when no constant solves
/// the offset equations.
inline std::optional<ConstantTrajectory> constant_trajectory(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  const Eigen::MatrixXd r1 = b.R.eval_real(1.0);
  const auto n = static_cast<Eigen::Index>(b.vars());
  if (b.rows() == 0) return ConstantTrajectory{Eigen::VectorXd::Zero(n), n == 0};
  const Eigen::VectorXd w = linalg::min_norm_solve(r1, b.c, tol.rank);
  const double scale = std::max({1.0, b.c.cwiseAbs().maxCoeff(), r1.cwiseAbs().maxCoeff() * w.cwiseAbs().maxCoeff()});
  if ((r1 * w - b.c).cwiseAbs().maxCoeff() > tol.residual * scale) return std::nullopt;
  return ConstantTrajectory{w, linalg::numeric_rank(r1, tol.rank) == n};
}

/// Unimodular row reduction until the leading row coefficient matrix,
/// measured on the columns `cols`, has full row rank. Each step removes the
/// top-degree dependency from the highest-degree participating row (lowest
/// index on ties). `row_proper` is false when some row loses every entry
/// on `cols`.
inline RowReduction row_reduce(const PolyMatrix& r_in, const Eigen::VectorXd& c_in, const std::vector<std::size_t>& cols,
                               const Tolerances& tol = {}) {
  RowReduction out{r_in.cleaned(tol.zero), c_in, {}, false};
  const std::size_t p = out.R.rows();
  const std::size_t n = out.R.cols();
  for (int guard = 0;; ++guard) {
    out.degrees.assign(p, -1);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j : cols) out.degrees[i] = std::max(out.degrees[i], out.R(i, j).degree());
    if (p == 0) {
      out.row_proper = true;
      return out;
    }
    if (std::any_of(out.degrees.begin(), out.degrees.end(), [](int d) { return d < 0; })) return out;
    if (guard > (tol.degree_cap + 1) * static_cast<int>(p) + 4)
      throw NumericalError("row_reduce: reduction did not terminate");

    Eigen::MatrixXd lead(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        lead(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out.R(i, cols[j])[out.degrees[i]];
    if (linalg::numeric_rank(lead, tol.rank) == static_cast<int>(p)) {
      out.row_proper = true;
      return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lead.transpose(), Eigen::ComputeFullV);
    const Eigen::VectorXd alpha = svd.matrixV().col(static_cast<Eigen::Index>(p) - 1);
    const double amax = alpha.cwiseAbs().maxCoeff();
    std::size_t target = p;
    for (std::size_t i = 0; i < p; ++i) {
      if (std::abs(alpha(static_cast<Eigen::Index>(i))) <= 1e-8 * amax) continue;
      if (target == p || out.degrees[i] > out.degrees[target]) target = i;
    }
    const int dt = out.degrees[target];
    const double at = alpha(static_cast<Eigen::Index>(target));
    std::vector<Poly> row(n);
    std::vector<double> scale(n, 0.0);
    double c_new = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double a = alpha(static_cast<Eigen::Index>(i));
      if (std::abs(a) <= 1e-8 * amax) continue;
      const double f = a / at;
      for (std::size_t j = 0; j < n; ++j) {
        const Poly term = f * out.R(i, j).shifted(dt - out.degrees[i]);
        scale[j] = std::max(scale[j], term.max_abs());
        row[j] += term;
      }
      c_new += f * out.c(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> cf = row[j].coeffs();
      if (std::find(cols.begin(), cols.end(), j) != cols.end() && static_cast<int>(cf.size()) > dt)
        cf[static_cast<std::size_t>(dt)] = 0.0;
      out.R(target, j) = Poly(std::move(cf)).cleaned(tol.zero, scale[j]);
    }
    out.c(static_cast<Eigen::Index>(target)) = c_new;
  }
}

inline std::vector<std::size_t> all_columns(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

/// Minimal, row-proper rep of the same behavior.
inline OffsetKernelRep row_proper_form(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  const OffsetKernelRep m = minimize(b, tol);
  const RowReduction rr = row_reduce(m.R, m.c, all_columns(m.vars()), tol);
  if (!rr.row_proper) throw NumericalError("row_proper_form: minimal rep lost a row during reduction");
  return {rr.R, rr.c, m.q, m.k};
}

/// Maximum row degree of a minimal row-proper rep.
inline int lag(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  const OffsetKernelRep rp = row_proper_form(b, tol);
  int l = 0;
  for (std::size_t i = 0; i < rp.rows(); ++i) l = std::max(l, rp.R.row_degree(i));
  return l;
}

/// Banded coefficient matrix stacking every shift of every row of R that
/// fits inside N samples, with the matching offsets.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> window_constraints(const OffsetKernelRep& b, int n) {
  const auto nv = static_cast<Eigen::Index>(b.vars());
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < b.rows(); ++i) {
    const int d = b.R.row_degree(i);
    if (d < 0) continue;
    for (int s = 0; s + d <= n - 1; ++s) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nv * n);
      for (int l = 0; l <= d; ++l)
        for (Eigen::Index j = 0; j < nv; ++j) row((s + l) * nv + j) = b.R(i, static_cast<std::size_t>(j))[l];
      rows.push_back(std::move(row));
      rhs.push_back(b.c(static_cast<Eigen::Index>(i)));
    }
  }
  Eigen::MatrixXd t(static_cast<Eigen::Index>(rows.size()), nv * n);
  Eigen::VectorXd c(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    t.row(static_cast<Eigen::Index>(r)) = rows[r];
    c(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  return {t, c};
}

/// Length-N windows of B: orthonormal basis of the windows of dif(B) plus
/// one particular window of B. Built from the minimal row-proper rep.
inline WindowSpace window_space(const OffsetKernelRep& b, int n, const Tolerances& tol = {}) {
  if (n < 0) throw DimensionError("window length must be nonnegative");
  const OffsetKernelRep rp = row_proper_form(b, tol);
  auto [t, rhs] = window_constraints(rp, n);
  WindowSpace ws;
  ws.length = n;
  ws.vars = rp.vars();
  ws.basis = linalg::null_space(t, tol.rank);
  const auto dimw = static_cast<Eigen::Index>(rp.vars()) * n;
  if (t.rows() == 0) {
    ws.particular = Eigen::VectorXd::Zero(dimw);
    return ws;
  }
  ws.particular = linalg::min_norm_solve(t, rhs, tol.rank);
  const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(), t.cwiseAbs().maxCoeff() * ws.particular.cwiseAbs().maxCoeff()});
  if ((t * ws.particular - rhs).cwiseAbs().maxCoeff() > tol.residual * scale)
    throw EmptyBehaviorError("window_space: inconsistent offset system");
  return ws;
}

/// Re-expresses a window basis in free-sample coordinates: the first
/// independent window entries (in time order) become the coordinates.
inline CanonicalBasis canonical_coordinates(const Eigen::MatrixXd& basis, const Tolerances& tol = {}) {
  CanonicalBasis out;
  out.pivots = linalg::greedy_independent_rows(basis, tol.rank);
  if (static_cast<Eigen::Index>(out.pivots.size()) != basis.cols())
    throw NumericalError("canonical_coordinates: basis is rank deficient");
  Eigen::MatrixXd sel(basis.cols(), basis.cols());
  for (Eigen::Index i = 0; i < basis.cols(); ++i) sel.row(i) = basis.row(out.pivots[static_cast<std::size_t>(i)]);
  out.basis = basis * sel.inverse();
  return out;
}

/// Tests B2 subset-of B1: X R2 = R1 for polynomial X and c1 = X(1) c2.
inline bool includes(const OffsetKernelRep& b1, const OffsetKernelRep& b2, const Tolerances& tol = {}) {
  if (b1.vars() != b2.vars()) throw DimensionError("includes: variable counts differ");
  const OffsetKernelRep m1 = minimize(b1, tol);
  const OffsetKernelRep m2 = minimize(b2, tol);
  const auto x = solve_left_multiple(m2.R, m1.R, tol);
  if (!x) return false;
  if (m1.rows() == 0) return true;
  const Eigen::MatrixXd x1 = x->eval_real(1.0);
  const Eigen::VectorXd predicted = m2.rows() ? Eigen::VectorXd(x1 * m2.c) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m1.rows()));
  const double scale = std::max({1.0, detail::offset_scale(m1.c), x1.cwiseAbs().rowwise().sum().maxCoeff() * detail::offset_scale(m2.c)});
  return (predicted - m1.c).cwiseAbs().maxCoeff() <= 1e2 * tol.residual * scale;
}

/// Mutual inclusion.
inline bool same_behavior(const OffsetKernelRep& a, const OffsetKernelRep& b, const Tolerances& tol = {}) {
  return includes(a, b, tol) && includes(b, a, tol);
}

/// Minimal rep rearranged as [R11 R12; R21 0] with R12 of full row rank,
/// offsets [eta1; eta2].
struct CompressedForm {
  PolyMatrix R11, R12, R21;
  Eigen::VectorXd eta1, eta2;
  PolyMatrix U;
};

inline CompressedForm compress_controls(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  const OffsetKernelRep m = minimize(b, tol);
  const PolyMatrix rw = m.R.block(0, 0, m.rows(), m.q);
  const PolyMatrix rc = m.R.block(0, m.q, m.rows(), m.k);
  const RowCompression comp = row_compress(rc, tol);
  const PolyMatrix urw = (comp.U * rw).cleaned(tol.zero);
  const Eigen::VectorXd uc = m.rows() ? Eigen::VectorXd(comp.U.eval_real(1.0) * m.c) : Eigen::VectorXd(0);
  const std::size_t r = comp.reduced.rows();
  const std::size_t z = comp.zero_rows;
  CompressedForm out;
  out.U = comp.U;
  out.R11 = urw.block(0, 0, r, m.q);
  out.R12 = comp.reduced;
  out.R21 = urw.block(r, 0, z, m.q);
  out.eta1 = uc.head(static_cast<Eigen::Index>(r));
  out.eta2 = uc.tail(static_cast<Eigen::Index>(z));
  return out;
}

/// Elimination of the control variables: pi_w(B) = ker_{eta2} R21(sigma).
inline OffsetKernelRep project_w(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "project_w");
  if (b.k == 0) return minimize(b, tol);
  const CompressedForm cf = compress_controls(b, tol);
  return {cf.R21, cf.eta2, b.q, 0};
}

/// B join C: (w, c) in B with c in C, as the stacked rep [R_w R_c; 0 C].
inline OffsetKernelRep interconnect_join(const OffsetKernelRep& b, const OffsetKernelRep& ctrl) {
  if (ctrl.vars() != b.k)
    throw DimensionError("interconnect_join: controller has " + std::to_string(ctrl.vars()) + " variables, plant has " +
                         std::to_string(b.k) + " control variables");
  PolyMatrix lower(ctrl.rows(), b.vars());
  for (std::size_t i = 0; i < ctrl.rows(); ++i)
    for (std::size_t j = 0; j < b.k; ++j) lower(i, b.q + j) = ctrl.R(i, j);
  Eigen::VectorXd c(static_cast<Eigen::Index>(b.rows() + ctrl.rows()));
  c << b.c, ctrl.c;
  return {vstack(b.R, lower), c, b.q, b.k};
}

/// B || C, the projection of the join onto w. With q = 0 this is B cap C.
inline OffsetKernelRep interconnect_project(const OffsetKernelRep& b, const OffsetKernelRep& ctrl,
                                            const Tolerances& tol = {}) {
  const OffsetKernelRep join = interconnect_join(b, ctrl);
  if (is_empty(join, tol)) throw EmptyBehaviorError("incompatible interconnection: the join is empty");
  const OffsetKernelRep m = minimize(join, tol);
  if (b.q == 0) return m;
  return project_w(m, tol);
}

}  // namespace ab
