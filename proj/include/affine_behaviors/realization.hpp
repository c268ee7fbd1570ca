#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "behavior.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "polymat.hpp"

namespace ab {

/// x(t+1) = A x(t) + E,  y(t) = C x(t) + F.
struct AutonomousRealization {
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  Eigen::VectorXd E;
  Eigen::VectorXd F;
  Eigen::Index n() const noexcept { return A.rows(); }
};

/// x(t+1) = A x + B u + E,  y = C x + D u + F, where u and y are the
/// behavior variables listed in `inputs` and `outputs`.
struct IoRealization {
  Eigen::MatrixXd A, B, C, D;
  Eigen::VectorXd E, F;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;
  Eigen::Index n() const noexcept { return A.rows(); }
  Eigen::Index m() const noexcept { return B.cols(); }
  Eigen::Index p() const noexcept { return C.rows(); }

  // Plain state-space system over (u, y) with inputs listed first.
  static IoRealization state_space(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd d) {
    IoRealization r;
    r.A = std::move(a);
    r.B = std::move(b);
    r.C = std::move(c);
    r.D = std::move(d);
    r.E = Eigen::VectorXd::Zero(r.A.rows());
    r.F = Eigen::VectorXd::Zero(r.C.rows());
    for (Eigen::Index i = 0; i < r.B.cols(); ++i) r.inputs.push_back(static_cast<std::size_t>(i));
    for (Eigen::Index i = 0; i < r.C.rows(); ++i) r.outputs.push_back(static_cast<std::size_t>(r.B.cols() + i));
    return r;
  }
};

/// Stack of C A^j for j = 0 .. L-1.
inline Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c, int len) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = c.rows();
  Eigen::MatrixXd o(p * len, n);
  Eigen::MatrixXd cak = c;
  for (int j = 0; j < len; ++j) {
    o.middleRows(j * p, p) = cak;
    cak = cak * a;
  }
  return o;
}

namespace detail {

// Observer-form realization of R(sigma) w = c with w split into outputs y
// (square block P) and inputs u, R row proper on the output columns and
// deg Q_i <= nu_i. States are tail sums of the rows.
inline IoRealization observer_form(const RowReduction& rr, const std::vector<std::size_t>& outputs,
                                   const std::vector<std::size_t>& inputs) {
  const std::size_t p = outputs.size();
  const auto m = static_cast<Eigen::Index>(inputs.size());
  std::vector<int> offset(p + 1, 0);
  for (std::size_t i = 0; i < p; ++i) offset[i + 1] = offset[i] + rr.degrees[i];
  const Eigen::Index n = offset[p];

  Eigen::MatrixXd phr(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::MatrixXd qhr(static_cast<Eigen::Index>(p), m);
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), n);
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const int nu = rr.degrees[i];
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < p; ++j) phr(ii, static_cast<Eigen::Index>(j)) = rr.R(i, outputs[j])[nu];
    for (Eigen::Index j = 0; j < m; ++j) qhr(ii, j) = -rr.R(i, inputs[static_cast<std::size_t>(j)])[nu];
    if (nu > 0) sel(ii, offset[i] + nu - 1) = 1.0;
    else c0(ii) = rr.c(ii);
  }
  const Eigen::MatrixXd pinv_hr = phr.inverse();

  IoRealization r;
  r.inputs = inputs;
  r.outputs = outputs;
  r.C = pinv_hr * sel;
  r.D = pinv_hr * qhr;
  r.F = pinv_hr * c0;

  // x_{i,k}(t+1) = x_{i,k-1}(t) - P_{i,k-1} y(t) + Q_{i,k-1} u(t), x_{i,0} = c_i
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd pc = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(p));
  Eigen::MatrixXd qc = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd cd = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < p; ++i) {
    for (int k = 1; k <= rr.degrees[i]; ++k) {
      const Eigen::Index row = offset[i] + k - 1;
      if (k >= 2) shift(row, row - 1) = 1.0;
      else cd(row) = rr.c(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < p; ++j) pc(row, static_cast<Eigen::Index>(j)) = rr.R(i, outputs[j])[k - 1];
      for (Eigen::Index j = 0; j < m; ++j) qc(row, j) = -rr.R(i, inputs[static_cast<std::size_t>(j)])[k - 1];
    }
  }
  r.A = shift - pc * r.C;
  r.B = qc - pc * r.D;
  r.E = cd - pc * r.F;
  return r;
}

// Change of state coordinates x' = T x with T the first independent rows of
// the observability matrix: states become sample values y_i(t + j).
inline IoRealization to_observability_form(IoRealization r, const Tolerances& tol) {
  const Eigen::Index n = r.n();
  if (n == 0) return r;
  const Eigen::MatrixXd o = observability_matrix(r.A, r.C, static_cast<int>(n));
  const std::vector<int> piv = linalg::greedy_independent_rows(o, tol.rank);
  if (static_cast<Eigen::Index>(piv.size()) != n) throw NumericalError("realization is not observable");
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) t.row(i) = o.row(piv[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd ti = t.inverse();
  r.A = t * r.A * ti;
  r.B = t * r.B;
  r.C = r.C * ti;
  r.E = t * r.E;
  return r;
}

inline bool is_proper(const RowReduction& rr, const std::vector<std::size_t>& inputs) {
  for (std::size_t i = 0; i < rr.R.rows(); ++i)
    for (std::size_t j : inputs)
      if (rr.R(i, j).degree() > rr.degrees[i]) return false;
  return true;
}

inline std::vector<std::vector<std::size_t>> combinations(const std::vector<std::size_t>& pool, std::size_t m) {
  std::vector<std::vector<std::size_t>> out;
  if (m > pool.size()) return out;
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  while (true) {
    std::vector<std::size_t> pick;
    for (std::size_t i : idx) pick.push_back(pool[i]);
    out.push_back(pick);
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == pool.size() - m + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace detail

/// Observability-form realization of an autonomous behavior: states are
/// the first independent samples y_i(t + j), n = deg det R.
inline AutonomousRealization realize_autonomous(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  if (!is_autonomous(b, tol)) throw PreconditionError("realize_autonomous: behavior is not autonomous");
  const OffsetKernelRep mb = minimize(b, tol);
  const auto outs = all_columns(mb.vars());
  const RowReduction rr = row_reduce(mb.R, mb.c, outs, tol);
  if (!rr.row_proper) throw NumericalError("realize_autonomous: row reduction failed");
  const IoRealization r = detail::to_observability_form(detail::observer_form(rr, outs, {}), tol);
  return {r.A, r.C, r.E, r.F};
}

/// Input/output realization with the input set chosen among size-m subsets
/// of `allowed` (all columns when empty): det P must be nonzero and the
/// transfer proper; the best-conditioned leading coefficient matrix of P
/// wins, earlier subsets on ties.
inline IoRealization realize_io(const OffsetKernelRep& b, const std::vector<std::size_t>& allowed = {},
                                const Tolerances& tol = {}) {
  const OffsetKernelRep mb = minimize(b, tol);
  const std::size_t nv = mb.vars();
  const std::size_t p = mb.rows();
  const std::size_t m = nv - p;
  if (m == 0) throw PreconditionError("realize_io: behavior has no inputs (m = 0)");
  const std::vector<std::size_t> pool = allowed.empty() ? all_columns(nv) : allowed;

  double best = -1.0;
  IoRealization chosen;
  std::string tried;
  for (const auto& inputs : detail::combinations(pool, m)) {
    std::vector<std::size_t> outputs;
    for (std::size_t j = 0; j < nv; ++j)
      if (std::find(inputs.begin(), inputs.end(), j) == inputs.end()) outputs.push_back(j);
    tried += " {";
    for (std::size_t j : inputs) tried += std::to_string(j) + (j == inputs.back() ? "" : ",");
    tried += "}";
    if (rank_generic(mb.R.select_cols(outputs), tol) != static_cast<int>(p)) continue;
    const RowReduction rr = row_reduce(mb.R, mb.c, outputs, tol);
    if (!rr.row_proper || !detail::is_proper(rr, inputs)) continue;
    Eigen::MatrixXd phr(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        phr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rr.R(i, outputs[j])[rr.degrees[i]];
    double cond = 1.0;
    if (p > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(phr);
      const auto& s = svd.singularValues();
      cond = s(s.size() - 1) / s(0);
    }
    if (cond > best * (1.0 + 1e-12)) {
      best = cond;
      chosen = detail::observer_form(rr, outputs, inputs);
    }
  }
  if (best < 0.0) throw PreconditionError("realize_io: no proper input partition; tried" + tried);
  return detail::to_observability_form(chosen, tol);
}

/// S = pinv(O_L), so that x(t) = S w_[t, t+L-1] on the linear behavior.
inline Eigen::MatrixXd state_from_window(const AutonomousRealization& r, int len, const Tolerances& tol = {}) {
  const Eigen::MatrixXd o = observability_matrix(r.A, r.C, len);
  if (linalg::numeric_rank(o, tol.rank) < r.n())
    throw PreconditionError("state_from_window: window too short (observability matrix of length " +
                            std::to_string(len) + " is rank deficient)");
  return linalg::pinv(o, tol.rank);
}

/// Solves A^T P A - P = -Q through the Kronecker-vectorized system.
inline Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, const Tolerances& tol = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) throw DimensionError("lyapunov_solve: shape mismatch");
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const double rho = linalg::spectral_radius(a);
  if (rho >= 1.0 - tol.schur_margin)
    throw PreconditionError("lyapunov_solve: A is not Schur (spectral radius " + std::to_string(rho) + ")");
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(A^T P A) = (A^T kron A^T) vec(P) with column-major vec
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k.block(i * n, j * n, n, n) = a(j, i) * a.transpose();
  k -= Eigen::MatrixXd::Identity(n * n, n * n);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
  const Eigen::VectorXd x = k.fullPivLu().solve(rhs);
  Eigen::MatrixXd pm = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  pm = 0.5 * (pm + pm.transpose());
  const double res = (a.transpose() * pm * a - pm + q).norm();
  if (res > 1e-9 * std::max(1.0, pm.norm()))
    throw NumericalError("lyapunov_solve: Stein residual " + std::to_string(res));
  return pm;
}

/// Kernel rep over (inputs, outputs) in the realization's column order:
/// the state is eliminated through the observability indices of (C, A).
inline OffsetKernelRep ss_to_kernel(const IoRealization& r, const Tolerances& tol = {}) {
  const Eigen::Index m = r.m();
  const Eigen::Index p = r.p();
  const std::size_t nv = static_cast<std::size_t>(m + p);
  if (r.inputs.size() != static_cast<std::size_t>(m) || r.outputs.size() != static_cast<std::size_t>(p))
    throw DimensionError("ss_to_kernel: column assignment does not match B and C");

  // observable quotient
  Eigen::MatrixXd a = r.A, b = r.B, c = r.C;
  Eigen::VectorXd e = r.E.size() ? r.E : Eigen::VectorXd::Zero(r.n());
  const Eigen::VectorXd f = r.F.size() ? r.F : Eigen::VectorXd::Zero(p);
  if (r.n() > 0) {
    const Eigen::MatrixXd o = observability_matrix(a, c, static_cast<int>(r.n()));
    const Eigen::MatrixXd w = linalg::range_basis(o.transpose(), tol.rank).transpose();
    a = w * a * w.transpose();
    b = w * b;
    c = c * w.transpose();
    e = w * e;
  }
  const Eigen::Index n = a.rows();

  // greedy time-major pivots (output i, shift j)
  std::vector<int> mu(static_cast<std::size_t>(p), -1);
  std::vector<std::pair<Eigen::Index, int>> pivots;  // (output, shift)
  Eigen::MatrixXd basis(0, n);
  std::vector<Eigen::RowVectorXd> rows_cak(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) rows_cak[static_cast<std::size_t>(i)] = c.row(i);

  // Markov data: y_i(t+j) = C_i A^j x + sum_l C_i A^{j-1-l} B u(t+l) + D_i u(t+j) + g_i^j
  auto u_poly = [&](Eigen::Index i, int j) {
    std::vector<Eigen::MatrixXd> coeffs(static_cast<std::size_t>(j) + 1, Eigen::MatrixXd::Zero(1, m));
    Eigen::RowVectorXd cak = c.row(i);
    for (int l = j - 1; l >= 0; --l) {
      coeffs[static_cast<std::size_t>(l)] = cak * b;
      cak = cak * a;
    }
    coeffs[static_cast<std::size_t>(j)] = r.D.row(i);
    return coeffs;
  };
  auto offset_term = [&](Eigen::Index i, int j) {
    double g = f(i);
    Eigen::RowVectorXd cak = c.row(i);
    for (int l = 0; l < j; ++l) {
      g += cak.dot(e);
      cak = cak * a;
    }
    return g;
  };

  PolyMatrix kr(static_cast<std::size_t>(p), nv);
  Eigen::VectorXd kc = Eigen::VectorXd::Zero(p);
  const double scale = c.size() ? std::max(1.0, c.cwiseAbs().maxCoeff()) : 1.0;
  std::size_t done = 0;
  for (int j = 0; done < static_cast<std::size_t>(p); ++j) {
    if (j > n + 1) throw NumericalError("ss_to_kernel: observability indices did not close");
    for (Eigen::Index i = 0; i < p; ++i) {
      if (mu[static_cast<std::size_t>(i)] >= 0) continue;
      const Eigen::RowVectorXd v = rows_cak[static_cast<std::size_t>(i)];
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pivots.size()));
      bool dependent = true;
      if (basis.rows() > 0) {
        beta = linalg::min_norm_solve(basis.transpose(), v.transpose(), tol.rank);
        dependent = (basis.transpose() * beta - v.transpose()).norm() <= 1e-9 * std::max(scale, v.norm());
      } else {
        dependent = v.norm() <= 1e-12 * scale;
      }
      if (!dependent) {
        basis.conservativeResize(basis.rows() + 1, Eigen::NoChange);
        basis.row(basis.rows() - 1) = v;
        pivots.emplace_back(i, j);
        rows_cak[static_cast<std::size_t>(i)] = v * a;
        continue;
      }
      // sigma^j y_i - sum beta sigma^s y_r = (u terms) + offsets
      mu[static_cast<std::size_t>(i)] = j;
      ++done;
      const auto ui = static_cast<std::size_t>(i);
      kr(ui, r.outputs[ui]) += Poly::monomial(j);
      auto upoly = u_poly(i, j);
      double off = offset_term(i, j);
      for (std::size_t k = 0; k < pivots.size(); ++k) {
        const double bk = beta(static_cast<Eigen::Index>(k));
        if (bk == 0.0) continue;
        const auto [rr, s] = pivots[k];
        kr(ui, r.outputs[static_cast<std::size_t>(rr)]) -= Poly::monomial(s, bk);
        const auto ur = u_poly(rr, s);
        for (int l = 0; l <= s; ++l) upoly[static_cast<std::size_t>(l)] -= bk * ur[static_cast<std::size_t>(l)];
        off -= bk * offset_term(rr, s);
      }
      for (Eigen::Index col = 0; col < m; ++col) {
        std::vector<double> cf;
        for (const auto& mk : upoly) cf.push_back(-mk(0, col));
        kr(ui, r.inputs[static_cast<std::size_t>(col)]) += Poly(cf);
      }
      kc(i) = off;
    }
  }
  return {kr.cleaned(tol.zero), kc};
}

}  // namespace ab
