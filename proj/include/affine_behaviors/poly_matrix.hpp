#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "poly.hpp"

namespace ab {

/// Dense matrix over R[xi], stored row-major.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols) {}
  PolyMatrix(std::initializer_list<std::initializer_list<Poly>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    entries_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw DimensionError("ragged PolyMatrix initializer");
      entries_.insert(entries_.end(), row.begin(), row.end());
    }
  }

  static PolyMatrix identity(std::size_t n) {
    PolyMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static PolyMatrix constant(const Eigen::MatrixXd& a) {
    PolyMatrix m(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()));
    for (std::size_t i = 0; i < m.rows_; ++i)
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return m;
  }
  // sum_k coeffs[k] xi^k, all coefficient matrices of one shape.
  static PolyMatrix from_coefficients(const std::vector<Eigen::MatrixXd>& coeffs) {
    if (coeffs.empty()) return {};
    const auto r = static_cast<std::size_t>(coeffs[0].rows());
    const auto c = static_cast<std::size_t>(coeffs[0].cols());
    PolyMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        std::vector<double> v;
        for (const auto& ck : coeffs) {
          if (static_cast<std::size_t>(ck.rows()) != r || static_cast<std::size_t>(ck.cols()) != c)
            throw DimensionError("coefficient matrices differ in shape");
          v.push_back(ck(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        m(i, j) = Poly(std::move(v));
      }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  Poly& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const Poly& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  int degree() const noexcept {
    int d = -1;
    for (const auto& p : entries_) d = std::max(d, p.degree());
    return d;
  }
  int row_degree(std::size_t i) const noexcept {
    int d = -1;
    for (std::size_t j = 0; j < cols_; ++j) d = std::max(d, (*this)(i, j).degree());
    return d;
  }
  int col_degree(std::size_t j) const noexcept {
    int d = -1;
    for (std::size_t i = 0; i < rows_; ++i) d = std::max(d, (*this)(i, j).degree());
    return d;
  }
  bool is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](const Poly& p) { return p.is_zero(); });
  }
  bool row_is_zero(std::size_t i) const noexcept { return row_degree(i) < 0; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& p : entries_) m = std::max(m, p.max_abs());
    return m;
  }

  // Coefficient matrix of xi^k.
  Eigen::MatrixXd coefficient(int k) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)[k];
    return m;
  }

  Eigen::MatrixXcd eval(std::complex<double> z) const {
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)(z);
    return m;
  }
  Eigen::MatrixXd eval_real(double x) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)(x);
    return m;
  }

  PolyMatrix transpose() const {
    PolyMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  PolyMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionError("PolyMatrix block out of range");
    PolyMatrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }
  PolyMatrix select_rows(const std::vector<std::size_t>& idx) const {
    PolyMatrix b(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols_; ++j) b(i, j) = (*this)(idx[i], j);
    return b;
  }
  PolyMatrix select_cols(const std::vector<std::size_t>& idx) const {
    PolyMatrix b(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) b(i, j) = (*this)(i, idx[j]);
    return b;
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
  }
  void scale_row(std::size_t i, double s) {
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) *= s;
  }
  // row_dst -= f * row_src, zeroing cancellation noise.
  void sub_row_multiple(std::size_t dst, const Poly& f, std::size_t src, double tol) {
    for (std::size_t j = 0; j < cols_; ++j) {
      const Poly& s = (*this)(src, j);
      if (s.is_zero()) continue;
      const Poly prod = f * s;
      Poly& d = (*this)(dst, j);
      const double scale = std::max(d.max_abs(), prod.max_abs());
      d = (d - prod).cleaned(tol, scale);
    }
  }
  // col_dst -= col_src * f
  void sub_col_multiple(std::size_t dst, const Poly& f, std::size_t src, double tol) {
    for (std::size_t i = 0; i < rows_; ++i) {
      const Poly& s = (*this)(i, src);
      if (s.is_zero()) continue;
      const Poly prod = s * f;
      Poly& d = (*this)(i, dst);
      const double scale = std::max(d.max_abs(), prod.max_abs());
      d = (d - prod).cleaned(tol, scale);
    }
  }

  PolyMatrix& operator+=(const PolyMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
    return *this;
  }
  PolyMatrix& operator-=(const PolyMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= o.entries_[k];
    return *this;
  }
  friend PolyMatrix operator+(PolyMatrix a, const PolyMatrix& b) { return a += b; }
  friend PolyMatrix operator-(PolyMatrix a, const PolyMatrix& b) { return a -= b; }
  friend PolyMatrix operator*(const PolyMatrix& a, const PolyMatrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("PolyMatrix product shape mismatch");
    PolyMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const Poly& aik = a(i, k);
        if (aik.is_zero()) continue;
        for (std::size_t j = 0; j < b.cols_; ++j)
          if (!b(k, j).is_zero()) c(i, j) += aik * b(k, j);
      }
    return c;
  }
  friend PolyMatrix operator*(double s, PolyMatrix m) {
    for (auto& p : m.entries_) p *= s;
    return m;
  }

  PolyMatrix cleaned(double tol) const {
    PolyMatrix r = *this;
    const double scale = max_abs();
    for (auto& p : r.entries_) p = p.cleaned(tol, scale);
    return r;
  }

  friend bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

 private:
  void check_same_shape(const PolyMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("PolyMatrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Poly> entries_;
};

inline PolyMatrix hstack(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("hstack: row counts differ");
  PolyMatrix r(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) r(i, a.cols() + j) = b(i, j);
  }
  return r;
}

inline PolyMatrix vstack(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw DimensionError("vstack: column counts differ");
  PolyMatrix r(a.rows() + b.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) r(a.rows() + i, j) = b(i, j);
  return r;
}

inline std::ostream& operator<<(std::ostream& os, const PolyMatrix& m) {
  os << "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
  }
  return os << "]";
}

}  // namespace ab
