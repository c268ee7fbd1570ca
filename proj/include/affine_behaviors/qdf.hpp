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
#include "realization.hpp"

namespace ab {

/// Q_Phi(w)(t) = w_[t, t+W-1]^T Phi w_[t, t+W-1] with Phi of size q*W.
struct Qdf {
  Eigen::MatrixXd phi;
  std::size_t q = 0;
  int W = 0;

  Qdf() = default;
  Qdf(Eigen::MatrixXd m, std::size_t vars) : phi(std::move(m)), q(vars) {
    if (q == 0) throw DimensionError("Qdf: variable count must be positive");
    if (phi.rows() != phi.cols() || phi.rows() % static_cast<Eigen::Index>(q) != 0)
      throw DimensionError("Qdf: Phi must be square with size a multiple of q");
    W = static_cast<int>(phi.rows() / static_cast<Eigen::Index>(q));
    const double asym = phi.size() ? (phi - phi.transpose()).cwiseAbs().maxCoeff() : 0.0;
    if (asym > 1e-12 * std::max(1.0, phi.cwiseAbs().maxCoeff())) throw DimensionError("Qdf: Phi is not symmetric");
    phi = 0.5 * (phi + phi.transpose());
  }
};

inline double evaluate(const Qdf& f, const TrajectorySegment& w, long t) {
  if (static_cast<std::size_t>(w.dim()) != f.q) throw DimensionError("evaluate: signal dimension differs from q");
  const Eigen::VectorXd v = w.window(t, f.W);
  return v.dot(f.phi * v);
}

/// The (W+1)-window form of Q(t+1) - Q(t).
inline Qdf increment(const Qdf& f) {
  const auto n = f.phi.rows();
  const auto q = static_cast<Eigen::Index>(f.q);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + q, n + q);
  d.bottomRightCorner(n, n) += f.phi;
  d.topLeftCorner(n, n) -= f.phi;
  return {d, f.q};
}

/// Strips all-zero boundary q-blocks. `shift` receives the number of
/// leading blocks removed: Q_reduced(w)(t + shift) = Q(w)(t).
inline Qdf degree_reduce(const Qdf& f, int* shift = nullptr) {
  const auto q = static_cast<Eigen::Index>(f.q);
  auto block_zero = [&](int k) {
    return f.phi.middleRows(k * q, q).isZero(0.0) && f.phi.middleCols(k * q, q).isZero(0.0);
  };
  int lo = 0, hi = f.W;
  while (lo < hi && block_zero(lo)) ++lo;
  while (hi > lo && block_zero(hi - 1)) --hi;
  if (shift) *shift = lo;
  if (lo == hi) return {Eigen::MatrixXd::Zero(q, q), f.q};
  return {f.phi.block(lo * q, lo * q, (hi - lo) * q, (hi - lo) * q), f.q};
}

/// Psi = [dPhi, -dPhi s; -s^T dPhi, s^T dPhi s] with s = wbar stacked W+1 times.
inline Eigen::MatrixXd build_psi(const Qdf& f, const Eigen::VectorXd& wbar) {
  if (static_cast<std::size_t>(wbar.size()) != f.q) throw DimensionError("build_psi: wbar length differs from q");
  const Eigen::MatrixXd d = increment(f).phi;
  const Eigen::VectorXd s = wbar.replicate(f.W + 1, 1);
  const Eigen::VectorXd ds = d * s;
  const auto n = d.rows();
  Eigen::MatrixXd psi(n + 1, n + 1);
  psi.topLeftCorner(n, n) = d;
  psi.topRightCorner(n, 1) = -ds;
  psi.bottomLeftCorner(1, n) = -ds.transpose();
  psi(n, n) = s.dot(ds);
  return psi;
}

/// Outcome of verify_contraction_form / verify_lyapunov.
struct FormCheck {
  bool passed = false;
  bool nonnegative = false;   // Phi PSD, or restricted PSD for the Lyapunov variant
  bool nonincreasing = false;  // restricted increment NSD
  bool strict = false;         // increment vanishes identically only on w = 0
  double phi_min_eig = 0.0;
  double increment_max_eig = 0.0;
  // Restricted increment in sample coordinates: the first independent
  // entries of the length W+1 window.
  Eigen::MatrixXd restricted_increment;
  std::vector<int> coordinate_rows;
  Eigen::VectorXd restricted_increment_eigenvalues;
  std::string reason;
};

struct PsiCheck {
  bool passed = false;
  bool phi_psd = false;
  bool nonpositive = false;
  bool equality_at_wbar = false;
  bool unique_equality = false;
  double max_value = 0.0;
  std::string reason;
};

struct ContractionCertificate {
  Qdf phi;
  Eigen::VectorXd wbar;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd lyapunov_P;  // state-space P with Phi = S^T P S
  FormCheck form;
  FormCheck lyapunov;
  PsiCheck psi_check;
};

namespace detail {

inline double eig_scale(const Eigen::VectorXd& ev) { return ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0; }

// Rows spanning the range of a symmetric matrix.
inline Eigen::MatrixXd range_rows(const Eigen::MatrixXd& g, double rel_tol) {
  if (g.rows() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  const double s = eig_scale(es.eigenvalues());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > rel_tol * s && s > 0.0) keep.push_back(i);
  Eigen::MatrixXd h(static_cast<Eigen::Index>(keep.size()), g.rows());
  for (std::size_t k = 0; k < keep.size(); ++k) h.row(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]).transpose();
  return h;
}

// For a linear autonomous behavior and a symmetric window form D (window
// length N) that is NSD on the behavior: do the trajectories with
// w_[t,t+N-1]^T D w_[t,t+N-1] = 0 for all t reduce to w = 0? Decided on a
// realization: x(t) must stay in ker(O_N^T D O_N), and the largest
// A-invariant subspace there is the unobservable space of (range rows, A).
inline bool zero_locus_trivial(const AutonomousRealization& r, const Eigen::MatrixXd& d, int n_window,
                               const Tolerances& tol) {
  const Eigen::Index n = r.n();
  if (n == 0) return true;
  const Eigen::MatrixXd o = observability_matrix(r.A, r.C, n_window);
  const Eigen::MatrixXd g = o.transpose() * d * o;
  const Eigen::MatrixXd h = range_rows(g, tol.form);
  if (h.rows() == 0) return false;
  return linalg::numeric_rank(observability_matrix(r.A, h, static_cast<int>(n)), tol.rank) == n;
}

inline OffsetKernelRep linear_part(const OffsetKernelRep& b) { return OffsetKernelRep::linear(b.R, b.q, b.k); }

inline void require_autonomous(const OffsetKernelRep& b, const Tolerances& tol, const char* op) {
  if (!is_autonomous(b, tol)) throw PreconditionError(std::string(op) + ": behavior is not autonomous");
}

// Restricted increment check (b) and strictness (c), shared by both verifiers.
inline void check_increment(const OffsetKernelRep& dif, const Qdf& f, FormCheck& out, const Tolerances& tol) {
  const Eigen::MatrixXd d = increment(f).phi;
  const WindowSpace ws = window_space(dif, f.W + 1, tol);
  const Eigen::MatrixXd m = ws.basis.transpose() * d * ws.basis;
  const Eigen::VectorXd ev = linalg::sym_eigenvalues(m);
  out.increment_max_eig = ev.size() ? ev.maxCoeff() : 0.0;
  out.nonincreasing = out.increment_max_eig <= tol.form * eig_scale(ev);
  if (ws.dim() > 0) {
    const CanonicalBasis cb = canonical_coordinates(ws.basis, tol);
    out.restricted_increment = cb.basis.transpose() * d * cb.basis;
    out.restricted_increment = 0.5 * (out.restricted_increment + out.restricted_increment.transpose());
    out.coordinate_rows = cb.pivots;
    out.restricted_increment_eigenvalues = linalg::sym_eigenvalues(out.restricted_increment);
  } else {
    out.restricted_increment = Eigen::MatrixXd(0, 0);
    out.restricted_increment_eigenvalues = Eigen::VectorXd(0);
  }
  if (!out.nonincreasing) {
    out.reason = "increment is positive on some window of the difference behavior (max restricted eigenvalue " +
                 std::to_string(out.increment_max_eig) + ")";
    return;
  }
  const AutonomousRealization real = realize_autonomous(dif, tol);
  out.strict = zero_locus_trivial(real, d, f.W + 1, tol);
  if (!out.strict) out.reason = "increment vanishes identically on a nonzero trajectory difference";
}

}  // namespace detail

/// Contraction-form test: Phi PSD, restricted increment NSD on windows of
/// dif(B), and the increment vanishing identically only on w = 0.
inline FormCheck verify_contraction_form(const OffsetKernelRep& b, const Qdf& f, const Tolerances& tol = {}) {
  if (f.q != b.vars()) throw DimensionError("verify_contraction_form: Phi variable count differs from the behavior");
  detail::require_autonomous(b, tol, "verify_contraction_form");
  FormCheck out;
  const Eigen::VectorXd pe = linalg::sym_eigenvalues(f.phi);
  out.phi_min_eig = pe.size() ? pe.minCoeff() : 0.0;
  out.nonnegative = out.phi_min_eig >= -tol.form * std::max(1.0, detail::eig_scale(pe));
  if (!out.nonnegative) {
    out.reason = "Phi is not positive semidefinite (min eigenvalue " + std::to_string(out.phi_min_eig) + ")";
    return out;
  }
  detail::check_increment(detail::linear_part(minimize(b, tol)), f, out, tol);
  out.passed = out.nonnegative && out.nonincreasing && out.strict;
  return out;
}

/// Lyapunov-function test on a linear autonomous behavior: Q >= 0 and
/// increment <= 0 on the behavior's windows, increment == 0 only at w = 0.
inline FormCheck verify_lyapunov(const OffsetKernelRep& blin, const Qdf& f, const Tolerances& tol = {}) {
  if (f.q != blin.vars()) throw DimensionError("verify_lyapunov: Phi variable count differs from the behavior");
  if (!blin.is_linear()) throw PreconditionError("verify_lyapunov: behavior must be linear");
  detail::require_autonomous(blin, tol, "verify_lyapunov");
  FormCheck out;
  const OffsetKernelRep lin = minimize(blin, tol);
  const WindowSpace ws = window_space(lin, f.W, tol);
  const Eigen::VectorXd pe = linalg::sym_eigenvalues(ws.basis.transpose() * f.phi * ws.basis);
  out.phi_min_eig = pe.size() ? pe.minCoeff() : 0.0;
  out.nonnegative = out.phi_min_eig >= -tol.form * std::max(detail::eig_scale(pe), 1e-300);
  if (!out.nonnegative) {
    out.reason = "Q is negative on some window of the behavior (min restricted eigenvalue " +
                 std::to_string(out.phi_min_eig) + ")";
    return out;
  }
  detail::check_increment(lin, f, out, tol);
  out.passed = out.nonnegative && out.nonincreasing && out.strict;
  return out;
}

/// Affine certificate test: [w; 1]^T Psi [w; 1] <= 0 on every length W+1
/// window of B, with equality exactly along the constant trajectory wbar.
inline PsiCheck verify_psi_certificate(const OffsetKernelRep& b, const Eigen::MatrixXd& psi, const Qdf& f,
                                       const Tolerances& tol = {}) {
  if (f.q != b.vars()) throw DimensionError("verify_psi_certificate: Phi variable count differs from the behavior");
  const Eigen::MatrixXd d = increment(f).phi;
  const auto n = d.rows();
  if (psi.rows() != n + 1 || psi.cols() != n + 1) throw DimensionError("verify_psi_certificate: Psi has the wrong size");
  const double dscale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if ((psi.topLeftCorner(n, n) - d).cwiseAbs().maxCoeff() > 1e-9 * dscale)
    throw PreconditionError("verify_psi_certificate: Psi11 does not match the increment of Phi");
  detail::require_autonomous(b, tol, "verify_psi_certificate");

  PsiCheck out;
  const Eigen::VectorXd pe = linalg::sym_eigenvalues(f.phi);
  out.phi_psd = (pe.size() ? pe.minCoeff() : 0.0) >= -tol.form * std::max(1.0, detail::eig_scale(pe));

  const OffsetKernelRep mb = minimize(b, tol);
  const WindowSpace ws = window_space(mb, f.W + 1, tol);
  const Eigen::MatrixXd& v = ws.basis;
  const Eigen::VectorXd& p = ws.particular;
  const Eigen::MatrixXd p11 = 0.5 * (psi.topLeftCorner(n, n) + psi.topLeftCorner(n, n).transpose());
  const Eigen::VectorXd p12 = 0.5 * (psi.topRightCorner(n, 1) + psi.bottomLeftCorner(1, n).transpose());
  const double p22 = psi(n, n);
  // f(z) = z^T H z + 2 g^T z + c0 on windows p + V z
  const Eigen::MatrixXd h = v.transpose() * p11 * v;
  const Eigen::VectorXd g = v.transpose() * (p11 * p + p12);
  const double c0 = p.dot(p11 * p) + 2.0 * p12.dot(p) + p22;
  const Eigen::VectorXd he = linalg::sym_eigenvalues(h);
  const double hs = detail::eig_scale(he);
  const double scale = std::max({1.0, hs, psi.cwiseAbs().maxCoeff() * std::max(1.0, p.squaredNorm())});
  const bool nsd = (he.size() ? he.maxCoeff() : 0.0) <= tol.form * std::max(hs, 1e-300);
  Eigen::VectorXd zstar = Eigen::VectorXd::Zero(v.cols());
  bool in_range = true;
  if (v.cols() > 0) {
    zstar = linalg::min_norm_solve(h, -g, tol.form);
    in_range = (h * zstar + g).norm() <= 1e-7 * std::max({1.0, g.norm(), hs * zstar.norm()});
  }
  out.max_value = c0 + g.dot(zstar);
  out.nonpositive = nsd && in_range && out.max_value <= 1e-7 * scale;
  if (!out.nonpositive) {
    out.reason = !nsd        ? "quadratic part of the Psi form is not negative semidefinite on the windows of B"
                 : !in_range ? "Psi form is unbounded above on the windows of B"
                             : "Psi form is positive on some window of B (max " + std::to_string(out.max_value) + ")";
    return out;
  }
  const auto wbar = constant_trajectory(mb, tol);
  if (!wbar || !wbar->unique) {
    out.reason = "B has no unique constant trajectory";
    return out;
  }
  // equality locus = zstar + ker H, and it must hold the window of wbar
  const Eigen::VectorXd wwin = wbar->value.replicate(f.W + 1, 1);
  const Eigen::VectorXd zw = v.transpose() * (wwin - p);
  const double val = zw.dot(h * zw) + 2.0 * g.dot(zw) + c0;
  out.equality_at_wbar = std::abs(val) <= 1e-7 * scale && std::abs(out.max_value) <= 1e-7 * scale;
  if (!out.equality_at_wbar) {
    out.reason = "equality does not hold along the constant trajectory";
    return out;
  }
  const OffsetKernelRep dif = detail::linear_part(mb);
  out.unique_equality = detail::zero_locus_trivial(realize_autonomous(dif, tol), p11, f.W + 1, tol);
  if (!out.unique_equality) out.reason = "equality holds along more than one trajectory";
  out.passed = out.phi_psd && out.nonpositive && out.equality_at_wbar && out.unique_equality;
  if (out.passed) out.reason.clear();
  else if (out.reason.empty()) out.reason = "Phi is not positive semidefinite";
  return out;
}

/// Certificate by Lyapunov pullback: realize dif(B), solve the Stein
/// equation with Q = I, and pull P back to windows of length lag(B).
inline ContractionCertificate synthesize_contraction_form(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "synthesize_contraction_form");
  detail::require_autonomous(b, tol, "synthesize_contraction_form");
  const OffsetKernelRep mb = minimize(b, tol);
  const SchurTest st = is_schur(mb.R, tol);
  if (!st.schur) {
    std::string rs;
    for (const auto& z : st.roots) rs += " " + std::to_string(z.real()) + (z.imag() >= 0 ? "+" : "") + std::to_string(z.imag()) + "i";
    throw NotContractiveError("not contractive: det R has roots on or outside the unit circle:" + rs, st.roots);
  }
  const OffsetKernelRep dif = detail::linear_part(mb);
  const AutonomousRealization real = realize_autonomous(dif, tol);
  const int l = std::max(lag(mb, tol), 1);
  const auto q = static_cast<Eigen::Index>(mb.vars());

  ContractionCertificate cert;
  if (real.n() == 0) {
    cert.phi = Qdf(Eigen::MatrixXd::Zero(q * l, q * l), mb.vars());
    cert.lyapunov_P = Eigen::MatrixXd(0, 0);
  } else {
    cert.lyapunov_P = lyapunov_solve(real.A, Eigen::MatrixXd::Identity(real.n(), real.n()), tol);
    const Eigen::MatrixXd s = state_from_window(real, l, tol);
    Eigen::MatrixXd phi = s.transpose() * cert.lyapunov_P * s;
    cert.phi = Qdf(0.5 * (phi + phi.transpose()), mb.vars());
  }
  const auto wbar = constant_trajectory(mb, tol);
  if (!wbar || !wbar->unique) throw NumericalError("synthesize_contraction_form: no unique constant trajectory");
  cert.wbar = wbar->value;
  cert.psi = build_psi(cert.phi, cert.wbar);
  cert.form = verify_contraction_form(mb, cert.phi, tol);
  cert.lyapunov = verify_lyapunov(dif, cert.phi, tol);
  cert.psi_check = verify_psi_certificate(mb, cert.psi, cert.phi, tol);
  if (!cert.form.passed || !cert.lyapunov.passed || !cert.psi_check.passed)
    throw NumericalError("synthesize_contraction_form: synthesized certificate failed verification: " +
                         cert.form.reason + cert.lyapunov.reason + cert.psi_check.reason);
  return cert;
}

}  // namespace ab
