#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "poly.hpp"
#include "poly_matrix.hpp"

namespace ab {

inline Eigen::MatrixXcd eval(const PolyMatrix& a, std::complex<double> lambda) { return a.eval(lambda); }

/// Numerical rank of A(lambda).
inline int rank_at(const PolyMatrix& a, std::complex<double> lambda, const Tolerances& tol = {}) {
  return linalg::numeric_rank(a.eval(lambda), tol.rank);
}

namespace detail {
// Fixed sample points in the annulus 0.6 < |z| < 1.6, away from the real
// axis and from the unit circle.
inline constexpr std::array<std::complex<double>, 3> kGenericPoints{
    std::complex<double>{0.7123, 0.4567}, std::complex<double>{-0.8231, 0.9137},
    std::complex<double>{1.3171, -0.5519}};
}  // namespace detail

/// Rank over the field of rational functions: the largest rank of A(lambda)
/// over a fixed set of generic sample points.
inline int rank_generic(const PolyMatrix& a, const Tolerances& tol = {}) {
  if (a.empty()) return 0;
  int r = 0;
  for (const auto& z : detail::kGenericPoints) r = std::max(r, rank_at(a, z, tol));
  return r;
}

/// U * A * V = D with U, V unimodular and D diagonal-rectangular carrying
/// the monic invariant factors d_1 | d_2 | ...
struct SmithDecomposition {
  PolyMatrix U;
  PolyMatrix D;
  PolyMatrix V;

  std::vector<Poly> invariant_factors() const {
    std::vector<Poly> out;
    for (std::size_t i = 0; i < std::min(D.rows(), D.cols()); ++i)
      if (!D(i, i).is_zero()) out.push_back(D(i, i));
    return out;
  }
  int rank() const { return static_cast<int>(invariant_factors().size()); }
};

namespace detail {
// Pivot quality among entries of equal degree: a leading coefficient that is
// small against the rest of the entry means large quotients downstream.
inline double lead_ratio(const Poly& p) { return std::abs(p.lead()) / p.max_abs(); }

// Orders candidate pivots: lower degree first, then larger lead ratio; exact
// ties keep the earlier candidate.
inline bool better_pivot(const Poly& cand, const Poly& best) {
  if (best.is_zero()) return true;
  if (cand.degree() != best.degree()) return cand.degree() < best.degree();
  return lead_ratio(cand) > lead_ratio(best) * (1.0 + 1e-12);
}

inline void check_degree_cap(const PolyMatrix& m, const Tolerances& tol, const char* what) {
  if (m.degree() > tol.degree_cap)
    throw NumericalError(std::string(what) + ": degree exceeded cap " + std::to_string(tol.degree_cap) +
                         " (ill-conditioned input)");
}
}  // namespace detail

/// Smith form by gcd-driven row/column reduction. The pivot is always a
/// minimum-degree nonzero entry of the trailing block; among those the one
/// with the largest leading-coefficient ratio wins, then the smallest
/// (row, col).
inline SmithDecomposition smith_form(const PolyMatrix& a, const Tolerances& tol = {}) {
  const std::size_t p = a.rows();
  const std::size_t q = a.cols();
  PolyMatrix d = a.cleaned(tol.zero);
  PolyMatrix u = PolyMatrix::identity(p);
  PolyMatrix v = PolyMatrix::identity(q);

  for (std::size_t k = 0; k < std::min(p, q); ++k) {
    bool exhausted = false;
    for (int guard = 0;; ++guard) {
      if (guard > 10 * (tol.degree_cap + 1) * static_cast<int>(p + q))
        throw NumericalError("smith_form: reduction did not terminate");
      // pivot search
      std::size_t pi = p, pj = q;
      for (std::size_t i = k; i < p; ++i)
        for (std::size_t j = k; j < q; ++j)
          if (!d(i, j).is_zero() && (pi == p || detail::better_pivot(d(i, j), d(pi, pj)))) {
            pi = i;
            pj = j;
          }
      if (pi == p) {
        exhausted = true;
        break;
      }
      d.swap_rows(k, pi);
      u.swap_rows(k, pi);
      d.swap_cols(k, pj);
      v.swap_cols(k, pj);

      bool clean = true;
      for (std::size_t i = k + 1; i < p; ++i) {
        if (d(i, k).is_zero()) continue;
        auto [quot, rem] = divmod(d(i, k), d(k, k), tol.zero);
        d.sub_row_multiple(i, quot, k, tol.zero);
        u.sub_row_multiple(i, quot, k, tol.zero);
        d(i, k) = rem;
        if (!rem.is_zero()) clean = false;
      }
      for (std::size_t j = k + 1; j < q; ++j) {
        if (d(k, j).is_zero()) continue;
        auto [quot, rem] = divmod(d(k, j), d(k, k), tol.zero);
        d.sub_col_multiple(j, quot, k, tol.zero);
        v.sub_col_multiple(j, quot, k, tol.zero);
        d(k, j) = rem;
        if (!rem.is_zero()) clean = false;
      }
      detail::check_degree_cap(u, tol, "smith_form");
      detail::check_degree_cap(v, tol, "smith_form");
      if (!clean) continue;

      // divisibility of the trailing block by the pivot
      std::size_t bad_row = p;
      for (std::size_t i = k + 1; i < p && bad_row == p; ++i)
        for (std::size_t j = k + 1; j < q; ++j)
          if (!divides(d(k, k), d(i, j), tol.zero)) {
            bad_row = i;
            break;
          }
      if (bad_row == p) break;
      d.sub_row_multiple(k, Poly(-1.0), bad_row, tol.zero);
      u.sub_row_multiple(k, Poly(-1.0), bad_row, tol.zero);
    }
    if (exhausted) break;
    const double l = d(k, k).lead();
    d.scale_row(k, 1.0 / l);
    u.scale_row(k, 1.0 / l);
    d(k, k) = d(k, k).monic();
  }
  return {u, d, v};
}

/// U * A = [reduced; 0] with `reduced` of full row rank.
struct RowCompression {
  PolyMatrix U;
  PolyMatrix reduced;
  std::size_t zero_rows = 0;
};

/// Polynomial row echelon form by Euclidean row operations, column by
/// column, pivoting as in smith_form.
inline RowCompression row_compress(const PolyMatrix& a, const Tolerances& tol = {}) {
  const std::size_t p = a.rows();
  const std::size_t q = a.cols();
  PolyMatrix d = a.cleaned(tol.zero);
  PolyMatrix u = PolyMatrix::identity(p);
  std::size_t r = 0;
  for (std::size_t c = 0; c < q && r < p; ++c) {
    for (int guard = 0;; ++guard) {
      if (guard > 10 * (tol.degree_cap + 1) * static_cast<int>(p + 1))
        throw NumericalError("row_compress: reduction did not terminate");
      std::size_t pi = p;
      for (std::size_t i = r; i < p; ++i)
        if (!d(i, c).is_zero() && (pi == p || detail::better_pivot(d(i, c), d(pi, c)))) pi = i;
      if (pi == p) break;
      d.swap_rows(r, pi);
      u.swap_rows(r, pi);
      bool done = true;
      for (std::size_t i = r + 1; i < p; ++i) {
        if (d(i, c).is_zero()) continue;
        auto [quot, rem] = divmod(d(i, c), d(r, c), tol.zero);
        d.sub_row_multiple(i, quot, r, tol.zero);
        u.sub_row_multiple(i, quot, r, tol.zero);
        d(i, c) = rem;
        if (!rem.is_zero()) done = false;
      }
      detail::check_degree_cap(u, tol, "row_compress");
      if (done) {
        ++r;
        break;
      }
    }
  }
  // Rows below r can only hold cancellation residue at this point.
  return {u, d.block(0, 0, r, q), p - r};
}

/// Determinant by evaluation at roots of unity followed by inverse DFT.
inline Poly det(const PolyMatrix& a, const Tolerances& tol = {}) {
  if (a.rows() != a.cols()) throw DimensionError("det requires a square polynomial matrix");
  const std::size_t n = a.rows();
  if (n == 0) return Poly(1.0);
  int row_bound = 0, col_bound = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int rd = a.row_degree(i);
    const int cd = a.col_degree(i);
    if (rd < 0 || cd < 0) return {};
    row_bound += rd;
    col_bound += cd;
  }
  const int deg = std::min(row_bound, col_bound);
  const int npts = deg + 1;
  std::vector<std::complex<double>> values(static_cast<std::size_t>(npts));
  double scale = 0.0;
  for (int k = 0; k < npts; ++k) {
    const double th = 2.0 * std::numbers::pi * k / npts;
    const std::complex<double> z{std::cos(th), std::sin(th)};
    const Eigen::MatrixXcd m = a.eval(z);
    values[static_cast<std::size_t>(k)] = m.partialPivLu().determinant();
    scale = std::max(scale, std::abs(values[static_cast<std::size_t>(k)]));
  }
  std::vector<double> coeffs(static_cast<std::size_t>(npts), 0.0);
  for (int j = 0; j < npts; ++j) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < npts; ++k) {
      const double th = -2.0 * std::numbers::pi * j * k / npts;
      acc += values[static_cast<std::size_t>(k)] * std::complex<double>{std::cos(th), std::sin(th)};
    }
    coeffs[static_cast<std::size_t>(j)] = acc.real() / npts;
  }
  // Bound the noise by the size of the sampled determinant values.
  double product_scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double rs = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (double c : a(i, j).coeffs()) rs += std::abs(c);
    product_scale *= std::max(rs, 1e-300);
  }
  const double cut = std::max(tol.zero * 1e-3 * scale, 1e-14 * static_cast<double>(n) * product_scale);
  return Poly(std::move(coeffs)).cleaned(1.0, cut);
}

struct SchurTest {
  bool schur = false;
  Poly determinant;
  std::vector<std::complex<double>> roots;
  double max_modulus = 0.0;
};

/// Schur test: every root of det A lies strictly inside the unit disk, with
/// the configured margin.
inline SchurTest is_schur(const PolyMatrix& a, const Tolerances& tol = {}) {
  SchurTest out;
  out.determinant = det(a, tol);
  if (out.determinant.is_zero()) throw PreconditionError("singular matrix polynomial: det is identically zero");
  out.roots = roots(out.determinant);
  for (const auto& z : out.roots) out.max_modulus = std::max(out.max_modulus, std::abs(z));
  out.schur = out.max_modulus < 1.0 - tol.schur_margin;
  return out;
}

/// Solves X * A = B for polynomial X, A of full row rank. Returns nullopt
/// when B is not a left multiple of A.
inline std::optional<PolyMatrix> solve_left_multiple(const PolyMatrix& a, const PolyMatrix& b,
                                                     const Tolerances& tol = {}) {
  if (a.cols() != b.cols()) throw DimensionError("solve_left_multiple: column counts differ");
  const std::size_t p = a.rows();
  const std::size_t m = b.rows();
  if (p == 0) {
    if (!b.cleaned(tol.zero).is_zero()) return std::nullopt;
    return PolyMatrix(m, 0);
  }
  if (rank_generic(a, tol) != static_cast<int>(p))
    throw PreconditionError("solve_left_multiple: A must have full row rank");

  const SmithDecomposition s = smith_form(a, tol);
  // X U^{-1} D = B V  ->  Y = X U^{-1} has column j equal to (BV)_j / d_j.
  const PolyMatrix bv = b * s.V;
  const double scale = std::max(b.max_abs(), 1.0) * std::max(s.V.max_abs(), 1.0);
  PolyMatrix y(m, p);
  for (std::size_t j = 0; j < bv.cols(); ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const Poly e = bv(i, j).cleaned(tol.zero, scale);
      if (j >= p) {
        if (!e.is_zero()) return std::nullopt;
        continue;
      }
      auto [quot, rem] = divmod(e, s.D(j, j), tol.zero);
      if (!rem.cleaned(tol.zero, scale).is_zero()) return std::nullopt;
      y(i, j) = quot;
    }
  }
  PolyMatrix x = (y * s.U).cleaned(tol.zero);
  const PolyMatrix resid = x * a - b;
  const double rscale = std::max({b.max_abs(), x.max_abs() * a.max_abs(), 1e-300});
  if (resid.max_abs() > 1e3 * tol.zero * rscale)
    throw NumericalError("solve_left_multiple: residual check failed after Smith reduction");
  return x;
}

}  // namespace ab
