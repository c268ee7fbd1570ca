#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "behavior.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "polymat.hpp"

namespace ab {

struct StabilityReport {
  bool contractive = false;
  bool offset_stable = false;
  std::optional<Eigen::VectorXd> wbar;
  std::vector<std::complex<double>> det_roots;
  double margin = 0.0;  // 1 - max root modulus
};

struct OffsetStabilizability {
  bool stabilizable = false;
  std::optional<Eigen::VectorXd> wbar;
};

/// Rank of A(lambda) on the closed exterior of the unit disk.
struct ExteriorRank {
  int generic_rank = 0;
  bool constant = true;  // no rank drop at any |lambda| >= 1
  std::vector<std::complex<double>> drop_roots;
};

struct DetectabilityReport {
  bool detectable = false;         // direct: w-columns of full column rank for |lambda| >= 1
  bool offset_stabilizable = false;  // direct: pi_w(B) offset stabilizable
  std::optional<Eigen::VectorXd> wbar;
  ExteriorRank w_columns;
  // block-rank statements on [R11 R12; R21 0]
  ExteriorRank r12;
  ExteriorRank r21;
  std::size_t k = 0;
  bool block_detectable = false;     // rank R12(lambda) = k for |lambda| >= 1
  bool block_stabilizable = false;   // rank R21(lambda) constant for |lambda| >= 1
  bool disagreement = false;
  std::string diagnostic;
};

/// Roots of the invariant factors of A, i.e. the points where A(lambda)
/// drops below its generic rank.
inline ExteriorRank exterior_rank(const PolyMatrix& a, const Tolerances& tol = {}) {
  ExteriorRank out;
  if (a.empty()) return out;
  out.generic_rank = rank_generic(a, tol);
  const SmithDecomposition s = smith_form(a, tol);
  for (const Poly& f : s.invariant_factors()) {
    if (f.degree() <= 0) continue;
    for (const auto& z : roots(f)) {
      out.drop_roots.push_back(z);
      if (std::abs(z) >= 1.0 - tol.schur_margin) out.constant = false;
    }
  }
  return out;
}

inline StabilityReport is_contractive(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "is_contractive");
  if (!is_autonomous(b, tol))
    throw PreconditionError(
        "is_contractive: the behavior is not autonomous; use is_detectable / detectability_stabilizability_report");
  const OffsetKernelRep mb = minimize(b, tol);
  const SchurTest st = is_schur(mb.R, tol);
  StabilityReport out;
  out.det_roots = st.roots;
  out.margin = 1.0 - st.max_modulus;
  out.contractive = st.schur;
  out.offset_stable = st.schur;
  if (st.schur) {
    const auto ct = constant_trajectory(mb, tol);
    if (!ct || !ct->unique) throw NumericalError("is_contractive: Schur rep without a unique constant trajectory");
    out.wbar = ct->value;
  }
  return out;
}

/// R(lambda) of full row rank for every |lambda| >= 1.
inline bool is_zero_stabilizable(const OffsetKernelRep& blin, const Tolerances& tol = {}) {
  if (!blin.is_linear()) throw PreconditionError("is_zero_stabilizable: behavior must be linear");
  const OffsetKernelRep mb = minimize(blin, tol);
  if (mb.rows() == 0) return true;
  return exterior_rank(mb.R, tol).constant;
}

inline OffsetStabilizability is_offset_stabilizable(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  OffsetStabilizability out;
  out.stabilizable = is_zero_stabilizable(difference_behavior(b, tol), tol);
  if (out.stabilizable) {
    const auto ct = constant_trajectory(minimize(b, tol), tol);
    if (!ct) throw NumericalError("is_offset_stabilizable: no constant trajectory although R(1) has full row rank");
    out.wbar = ct->value;
  }
  return out;
}

namespace detail {
inline void require_controls(const OffsetKernelRep& b, const char* op) {
  if (b.k == 0) throw PreconditionError(std::string(op) + ": no control variables (k = 0); use is_contractive");
}

inline ExteriorRank w_column_rank(const OffsetKernelRep& b, const Tolerances& tol) {
  const OffsetKernelRep mb = minimize(b, tol);
  return exterior_rank(mb.R.block(0, 0, mb.rows(), mb.q), tol);
}
}  // namespace detail

/// (w, 0) in dif(B) forces w -> 0.
inline bool is_detectable(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "is_detectable");
  detail::require_controls(b, "is_detectable");
  if (b.q == 0) return true;
  const ExteriorRank er = detail::w_column_rank(b, tol);
  return er.generic_rank == static_cast<int>(b.q) && er.constant;
}

inline DetectabilityReport detectability_stabilizability_report(const OffsetKernelRep& b, const Tolerances& tol = {}) {
  detail::require_nonempty(b, "detectability_stabilizability_report");
  detail::require_controls(b, "detectability_stabilizability_report");
  DetectabilityReport out;
  out.k = b.k;
  out.detectable = is_detectable(b, tol);
  if (b.q > 0) out.w_columns = detail::w_column_rank(b, tol);
  const auto os = is_offset_stabilizable(project_w(b, tol), tol);
  out.offset_stabilizable = os.stabilizable;
  out.wbar = os.wbar;

  const CompressedForm cf = compress_controls(b, tol);
  out.r12 = exterior_rank(cf.R12, tol);
  out.r21 = exterior_rank(cf.R21, tol);
  out.block_detectable = out.r12.generic_rank == static_cast<int>(b.k) && out.r12.constant;
  out.block_stabilizable = out.r21.constant;

  std::string d;
  if (out.block_detectable != out.detectable)
    d += "detectability: block test rank R12 = k gives " + std::string(out.block_detectable ? "true" : "false") +
         ", w-column test gives " + (out.detectable ? "true" : "false") + ". ";
  if (out.block_stabilizable != out.offset_stabilizable)
    d += "stabilizability: block test on R21 gives " + std::string(out.block_stabilizable ? "true" : "false") +
         ", direct test on pi_w(B) gives " + (out.offset_stabilizable ? "true" : "false") + ". ";
  out.disagreement = !d.empty();
  if (out.disagreement) d += "The direct tests are normative.";
  out.diagnostic = d;
  return out;
}

}  // namespace ab
