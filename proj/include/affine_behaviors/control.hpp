#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "behavior.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "polymat.hpp"
#include "qdf.hpp"
#include "realization.hpp"
#include "stability.hpp"

namespace ab {

/// Controller over the k control variables of a plant.
struct ControllerRep {
  OffsetKernelRep rep;
  bool linear = true;

  ControllerRep() = default;
  explicit ControllerRep(OffsetKernelRep r) : rep(std::move(r)), linear(rep.c.size() == 0 || rep.c.isZero(0.0)) {}
};

struct SynthesisResult {
  ControllerRep controller;
  OffsetKernelRep closed_loop;
  bool regular = false;
  ContractionCertificate certificate;
  Eigen::VectorXd achieved_wbar;
};

struct ImplementabilityVerdict {
  bool implementable = false;
  bool within_projection = false;  // R subset of pi_w(B)
  bool contains_slice = false;     // dif(B)||0 subset of dif(R)
  std::string reason;
  explicit operator bool() const noexcept { return implementable; }
};

struct RegularityCheck {
  bool regular = false;
  std::size_t m_join = 0;
  std::size_t m_plant = 0;
  std::size_t p_controller = 0;
  explicit operator bool() const noexcept { return regular; }
};

inline ImplementabilityVerdict is_implementable(const OffsetKernelRep& b, const OffsetKernelRep& ref,
                                                const Tolerances& tol = {}) {
  if (ref.vars() != b.q)
    throw DimensionError("is_implementable: reference has " + std::to_string(ref.vars()) + " variables, plant has q = " +
                         std::to_string(b.q));
  detail::require_nonempty(b, "is_implementable");
  detail::require_nonempty(ref, "is_implementable");
  ImplementabilityVerdict out;
  out.within_projection = includes(project_w(b, tol), ref, tol);
  const PolyMatrix rw = b.R.block(0, 0, b.rows(), b.q);
  out.contains_slice = includes(OffsetKernelRep::linear(ref.R), OffsetKernelRep::linear(rw), tol);
  out.implementable = out.within_projection && out.contains_slice;
  if (!out.within_projection) out.reason = "R is not contained in pi_w(B)";
  if (!out.contains_slice) out.reason += std::string(out.reason.empty() ? "" : "; ") + "dif(B)||0 is not contained in dif(R)";
  return out;
}

namespace detail {

/// Lowers the row degrees of x modulo the row module of n.
inline PolyMatrix reduce_modulo(PolyMatrix x, const PolyMatrix& n, const Tolerances& tol) {
  if (n.rows() == 0 || x.rows() == 0) return x;
  const RowReduction rr = row_reduce(n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n.rows())),
                                     all_columns(n.cols()), tol);
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < rr.R.rows(); ++i)
    if (rr.degrees[i] >= 0) live.push_back(i);
  const auto cols = static_cast<Eigen::Index>(n.cols());
  for (std::size_t row = 0; row < x.rows(); ++row) {
    for (int guard = 0; guard < 4 * (tol.degree_cap + 1); ++guard) {
      const int d = x.row_degree(row);
      if (d < 0) break;
      std::vector<std::size_t> cand;
      for (std::size_t i : live)
        if (rr.degrees[i] <= d) cand.push_back(i);
      if (cand.empty()) break;
      Eigen::MatrixXd lead(static_cast<Eigen::Index>(cand.size()), cols);
      for (std::size_t j = 0; j < cand.size(); ++j)
        for (Eigen::Index c = 0; c < cols; ++c)
          lead(static_cast<Eigen::Index>(j), c) = rr.R(cand[j], static_cast<std::size_t>(c))[rr.degrees[cand[j]]];
      Eigen::RowVectorXd v(cols);
      for (Eigen::Index c = 0; c < cols; ++c) v(c) = x(row, static_cast<std::size_t>(c))[d];
      const Eigen::VectorXd a = linalg::min_norm_solve(lead.transpose(), v.transpose(), tol.rank);
      if ((lead.transpose() * a - v.transpose()).norm() > 1e-9 * std::max(1.0, v.norm())) break;
      for (std::size_t j = 0; j < cand.size(); ++j) {
        const Poly f = Poly::monomial(d - rr.degrees[cand[j]], a(static_cast<Eigen::Index>(j)));
        for (std::size_t c = 0; c < n.cols(); ++c) x(row, c) -= f * rr.R(cand[j], c);
      }
      for (std::size_t c = 0; c < n.cols(); ++c) {
        std::vector<double> co = x(row, c).coeffs();
        if (static_cast<int>(co.size()) > d) co.resize(static_cast<std::size_t>(d));
        x(row, c) = Poly(std::move(co)).cleaned(tol.zero, std::max(1.0, v.norm()));
      }
    }
  }
  return x;
}

}  // namespace detail

/// Controller ker_{X(1) eta - zeta} (X R2)(sigma) with X R1 = R_ref.
inline ControllerRep synthesize_controller(const OffsetKernelRep& b, const OffsetKernelRep& ref,
                                           const Tolerances& tol = {}) {
  const ImplementabilityVerdict v = is_implementable(b, ref, tol);
  if (!v.implementable) throw PreconditionError("synthesize_controller: not implementable: " + v.reason);
  const OffsetKernelRep mb = minimize(b, tol);
  const OffsetKernelRep mr = minimize(ref, tol);
  const PolyMatrix r1 = mb.R.block(0, 0, mb.rows(), mb.q);
  const PolyMatrix r2 = mb.R.block(0, mb.q, mb.rows(), mb.k);

  PolyMatrix x(mr.rows(), mb.rows());
  if (mr.rows() > 0) {
    const RowCompression rc = row_compress(r1, tol);
    const std::size_t r = rc.reduced.rows();
    const auto y = solve_left_multiple(rc.reduced, mr.R, tol);
    if (!y) throw NumericalError("synthesize_controller: X R1 = R_ref has no polynomial solution");
    x = (*y * rc.U.block(0, 0, r, mb.rows())).cleaned(tol.zero);
    x = detail::reduce_modulo(x, rc.U.block(r, 0, rc.zero_rows, mb.rows()), tol);
  }
  const PolyMatrix cr = (x * r2).cleaned(tol.zero);
  Eigen::VectorXd cc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mr.rows()));
  if (mr.rows() > 0 && mb.rows() > 0) cc = x.eval_real(1.0) * mb.c;
  if (mr.rows() > 0) cc -= mr.c;
  OffsetKernelRep ctrl = minimize(OffsetKernelRep(cr, cc, mb.k, 0), tol);
  for (Eigen::Index i = 0; i < ctrl.c.size(); ++i)
    if (std::abs(ctrl.c(i)) <= tol.residual * detail::offset_scale(ctrl.c)) ctrl.c(i) = 0.0;

  const OffsetKernelRep closed = interconnect_project(b, ctrl, tol);
  if (!same_behavior(closed, ref, tol))
    throw NumericalError("synthesize_controller: the interconnection does not reproduce the reference");
  return ControllerRep(std::move(ctrl));
}

inline RegularityCheck is_regular(const OffsetKernelRep& b, const OffsetKernelRep& ctrl, const Tolerances& tol = {}) {
  const OffsetKernelRep join = interconnect_join(b, ctrl);
  if (is_empty(join, tol)) throw EmptyBehaviorError("is_regular: the interconnection of B and C is empty");
  RegularityCheck out;
  out.m_join = io_cardinality(join, tol).m;
  out.m_plant = io_cardinality(b, tol).m;
  out.p_controller = ctrl.rows() ? io_cardinality(ctrl, tol).p : 0;
  out.regular = out.m_join + out.p_controller == out.m_plant;
  return out;
}

inline RegularityCheck is_regular(const OffsetKernelRep& b, const ControllerRep& ctrl, const Tolerances& tol = {}) {
  return is_regular(b, ctrl.rep, tol);
}

namespace detail {

/// Single-input deadbeat gain by Ackermann's formula: A + b k nilpotent.
inline std::optional<Eigen::RowVectorXd> ackermann_deadbeat(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd ctrb(n, n);
  Eigen::VectorXd col = b;
  for (Eigen::Index j = 0; j < n; ++j) {
    ctrb.col(j) = col;
    col = a * col;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0 || s(n - 1) / s(0) < 1e-10) return std::nullopt;
  Eigen::MatrixXd an = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index j = 0; j < n; ++j) an = an * a;
  const Eigen::RowVectorXd en = Eigen::RowVectorXd::Unit(n, n - 1);
  const Eigen::RowVectorXd k = -(en * ctrb.fullPivLu().inverse()) * an;
  return k;
}

/// K with the controllable modes of A + B K at zero. Throws when an
/// uncontrollable mode lies on or outside the unit circle.
inline Eigen::MatrixXd deadbeat_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Tolerances& tol,
                                     const char* what) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, n);
  if (n == 0) return k;
  Eigen::MatrixXd ctrb(n, n * m);
  Eigen::MatrixXd blk = b;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (m > 0) ctrb.block(0, j * m, n, m) = blk;
    blk = a * blk;
  }
  const Eigen::MatrixXd v = m > 0 ? linalg::range_basis(ctrb, tol.rank) : Eigen::MatrixXd(n, 0);
  const Eigen::Index r = v.cols();
  if (r < n) {
    const Eigen::MatrixXd vp = linalg::null_space(v.transpose(), tol.rank);
    const Eigen::MatrixXd a22 = vp.transpose() * a * vp;
    const double rho = linalg::spectral_radius(a22);
    if (rho >= 1.0 - tol.schur_margin)
      throw PreconditionError(std::string(what) + " (mode of modulus " + std::to_string(rho) + ")");
  }
  if (r == 0) return k;
  const Eigen::MatrixXd ac = v.transpose() * a * v;
  const Eigen::MatrixXd bc = v.transpose() * b;

  std::mt19937_64 rng(kDefaultSeed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(m, r);
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(m);
    if (attempt < m) {
      dir(attempt) = 1.0;
    } else {
      for (Eigen::Index i = 0; i < m; ++i) dir(i) = g(rng);
      if (attempt >= 2 * m)
        for (Eigen::Index i = 0; i < k0.size(); ++i) k0(i) = 0.5 * g(rng);
    }
    const Eigen::MatrixXd a0 = ac + bc * k0;
    const auto kc = ackermann_deadbeat(a0, bc * dir);
    if (!kc) continue;
    const Eigen::MatrixXd kfull = k0 + dir * *kc;
    return kfull * v.transpose();
  }
  throw NumericalError("deadbeat_gain: no cyclic single-input reduction found");
}

inline std::vector<std::size_t> control_columns(const OffsetKernelRep& b) {
  std::vector<std::size_t> out;
  for (std::size_t j = b.q; j < b.vars(); ++j) out.push_back(j);
  return out;
}

}  // namespace detail

/// Regular stabilizing controller through an observer-based deadbeat
/// compensator on dif(B); affine when a target equilibrium is given.
inline SynthesisResult synthesize_stabilizing_controller(const OffsetKernelRep& b,
                                                         const std::optional<Eigen::VectorXd>& target = std::nullopt,
                                                         const Tolerances& tol = {}) {
  detail::require_nonempty(b, "synthesize_stabilizing_controller");
  detail::require_controls(b, "synthesize_stabilizing_controller");
  if (!is_detectable(b, tol))
    throw PreconditionError("not detectable: R_w(lambda) loses column rank for some |lambda| >= 1");
  if (!is_offset_stabilizable(project_w(b, tol), tol).stabilizable)
    throw PreconditionError("not stabilizable: pi_w(B) is not offset stabilizable (rank R21(lambda) drops for some |lambda| >= 1)");

  const OffsetKernelRep mb = minimize(b, tol);
  const auto q = static_cast<Eigen::Index>(mb.q);
  const auto k = static_cast<Eigen::Index>(mb.k);

  // constant control c_bar for the requested equilibrium
  Eigen::VectorXd cbar = Eigen::VectorXd::Zero(k);
  if (target) {
    if (target->size() != q) throw DimensionError("synthesize_stabilizing_controller: target has wrong length");
    if (mb.rows() > 0) {
      const Eigen::MatrixXd r1 = mb.R.eval_real(1.0);
      const Eigen::VectorXd rhs = mb.c - r1.leftCols(q) * *target;
      cbar = linalg::min_norm_solve(r1.rightCols(k), rhs, tol.rank);
      const double scale = std::max({1.0, rhs.cwiseAbs().maxCoeff(), r1.cwiseAbs().maxCoeff()});
      if ((r1.rightCols(k) * cbar - rhs).cwiseAbs().maxCoeff() > 1e2 * tol.residual * scale)
        throw PreconditionError("target: no constant trajectory (wbar, cbar) of B with the requested wbar");
    }
  }

  const OffsetKernelRep dif = OffsetKernelRep::linear(mb.R, mb.q, mb.k);
  OffsetKernelRep lin_ctrl;
  if (io_cardinality(dif, tol).m == 0) {
    lin_ctrl = OffsetKernelRep::free(mb.k);
  } else {
    const IoRealization r = realize_io(dif, detail::control_columns(mb), tol);
    std::vector<Eigen::Index> meas;
    for (std::size_t i = 0; i < r.outputs.size(); ++i)
      if (r.outputs[i] >= mb.q) meas.push_back(static_cast<Eigen::Index>(i));
    const auto nm = static_cast<Eigen::Index>(meas.size());
    Eigen::MatrixXd cm(nm, r.n()), dm(nm, r.m());
    for (Eigen::Index i = 0; i < nm; ++i) {
      cm.row(i) = r.C.row(meas[static_cast<std::size_t>(i)]);
      dm.row(i) = r.D.row(meas[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd kf = detail::deadbeat_gain(r.A, r.B, tol, "not stabilizable: uncontrollable unstable mode");
    const Eigen::MatrixXd lo =
        detail::deadbeat_gain(r.A.transpose(), cm.transpose(), tol, "not detectable: unobservable unstable mode")
            .transpose();

    IoRealization comp;
    comp.A = r.A + r.B * kf + lo * cm + lo * dm * kf;
    comp.B = -lo;
    comp.C = kf;
    comp.D = Eigen::MatrixXd::Zero(r.m(), nm);
    comp.E = Eigen::VectorXd::Zero(r.n());
    comp.F = Eigen::VectorXd::Zero(r.m());
    for (Eigen::Index i : meas) comp.inputs.push_back(r.outputs[static_cast<std::size_t>(i)] - mb.q);
    for (std::size_t j : r.inputs) comp.outputs.push_back(j - mb.q);
    lin_ctrl = minimize(ss_to_kernel(comp, tol), tol);
    lin_ctrl.q = mb.k;
    lin_ctrl.k = 0;
  }

  Eigen::VectorXd zeta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lin_ctrl.rows()));
  if (target && lin_ctrl.rows() > 0) zeta = lin_ctrl.R.eval_real(1.0) * cbar;
  SynthesisResult out;
  out.controller = ControllerRep(OffsetKernelRep(lin_ctrl.R, zeta, mb.k, 0));

  const RegularityCheck reg = is_regular(b, out.controller.rep, tol);
  out.regular = reg.regular;
  if (!out.regular)
    throw NumericalError("synthesize_stabilizing_controller: interconnection is not regular (m(join) = " +
                         std::to_string(reg.m_join) + ", m(B) = " + std::to_string(reg.m_plant) +
                         ", p(C) = " + std::to_string(reg.p_controller) + ")");
  out.closed_loop = interconnect_project(b, out.controller.rep, tol);
  const StabilityReport sr = is_contractive(out.closed_loop, tol);
  if (!sr.contractive)
    throw NumericalError("synthesize_stabilizing_controller: closed loop is not contractive (margin " +
                         std::to_string(sr.margin) + ")");
  out.certificate = synthesize_contraction_form(out.closed_loop, tol);
  out.achieved_wbar = *sr.wbar;
  if (target && (out.achieved_wbar - *target).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, target->cwiseAbs().maxCoeff()))
    throw NumericalError("synthesize_stabilizing_controller: closed loop settles away from the target");
  return out;
}

}  // namespace ab
