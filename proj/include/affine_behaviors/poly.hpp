#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace ab {

/// Real univariate polynomial, coefficients ascending by degree.
///
/// The stored coefficient list never ends in an exact zero; the zero
/// polynomial is the empty list and has degree -1.
class Poly {
 public:
  Poly() = default;
  Poly(double constant) {  // NOLINT(google-explicit-constructor)
    if (constant != 0.0) coeffs_.push_back(constant);
  }
  Poly(std::initializer_list<double> coeffs) : coeffs_(coeffs) { canonicalize(); }
  explicit Poly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { canonicalize(); }

  static Poly monomial(int degree, double coeff = 1.0) {
    if (coeff == 0.0) return {};
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Poly(std::move(c));
  }
  // The indeterminate xi.
  static Poly xi() { return monomial(1); }

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  bool is_constant() const noexcept { return coeffs_.size() <= 1; }
  double lead() const noexcept { return coeffs_.empty() ? 0.0 : coeffs_.back(); }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  double operator[](int i) const noexcept {
    return (i >= 0 && i < static_cast<int>(coeffs_.size())) ? coeffs_[static_cast<std::size_t>(i)] : 0.0;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  template <typename Scalar>
  Scalar operator()(const Scalar& x) const {
    Scalar acc{0.0};
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + Scalar{*it};
    return acc;
  }

  Poly operator-() const {
    Poly r = *this;
    for (double& c : r.coeffs_) c = -c;
    return r;
  }

  Poly& operator+=(const Poly& o) {
    if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
    for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    canonicalize();
    return *this;
  }
  Poly& operator-=(const Poly& o) { return *this += -o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }
  Poly& operator*=(double s) {
    if (s == 0.0) {
      coeffs_.clear();
      return *this;
    }
    for (double& c : coeffs_) c *= s;
    return *this;
  }

  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Poly(std::move(c));
  }
  friend Poly operator*(double s, Poly p) { return p *= s; }
  friend Poly operator*(Poly p, double s) { return p *= s; }

  friend bool operator==(const Poly& a, const Poly& b) { return a.coeffs_ == b.coeffs_; }

  // Multiplication by xi^k.
  Poly shifted(int k) const {
    if (is_zero() || k == 0) return *this;
    std::vector<double> c(static_cast<std::size_t>(k), 0.0);
    c.insert(c.end(), coeffs_.begin(), coeffs_.end());
    return Poly(std::move(c));
  }

  Poly monic() const {
    if (is_zero()) return {};
    Poly r = *this;
    const double l = lead();
    for (double& c : r.coeffs_) c /= l;
    r.coeffs_.back() = 1.0;
    return r;
  }

  // Zero every coefficient with |c| <= tol * scale, then drop trailing zeros.
  // A non-positive scale means "relative to this polynomial's own size".
  Poly cleaned(double tol, double scale = -1.0) const {
    if (scale <= 0.0) scale = max_abs();
    const double cut = tol * scale;
    Poly r = *this;
    for (double& c : r.coeffs_)
      if (std::abs(c) <= cut) c = 0.0;
    r.canonicalize();
    return r;
  }

  std::string to_string(const char* var = "s") const {
    if (is_zero()) return "0";
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (int i = degree(); i >= 0; --i) {
      const double c = coeffs_[static_cast<std::size_t>(i)];
      if (c == 0.0) continue;
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << "-";
      const double a = std::abs(c);
      if (i == 0 || a != 1.0) os << a;
      if (i >= 1) os << var;
      if (i >= 2) os << "^" << i;
      first = false;
    }
    return os.str();
  }

 private:
  void canonicalize() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
  }

  std::vector<double> coeffs_;
};

inline std::ostream& operator<<(std::ostream& os, const Poly& p) { return os << p.to_string(); }

/// Euclidean division a = quot * b + rem with deg rem < deg b. Remainder
/// coefficients that are cancellation noise relative to the operands are
/// zeroed.
inline std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b, double tol = 1e-9) {
  if (b.is_zero()) throw Error("polynomial division by zero");
  const int db = b.degree();
  if (a.degree() < db) return {Poly{}, a};
  std::vector<double> rem = a.coeffs();
  std::vector<double> quot(static_cast<std::size_t>(a.degree() - db) + 1, 0.0);
  const double lb = b.lead();
  for (int k = a.degree() - db; k >= 0; --k) {
    const double f = rem[static_cast<std::size_t>(k + db)] / lb;
    quot[static_cast<std::size_t>(k)] = f;
    for (int j = 0; j <= db; ++j) rem[static_cast<std::size_t>(k + j)] -= f * b[j];
    rem[static_cast<std::size_t>(k + db)] = 0.0;
  }
  rem.resize(static_cast<std::size_t>(db));
  Poly q(std::move(quot));
  const double scale = std::max(a.max_abs(), q.max_abs() * b.max_abs());
  return {q, Poly(std::move(rem)).cleaned(tol, scale)};
}

/// True when b divides a up to the cancellation tolerance.
inline bool divides(const Poly& b, const Poly& a, double tol = 1e-9) {
  if (a.is_zero()) return true;
  if (b.is_zero()) return false;
  return divmod(a, b, tol).second.is_zero();
}

/// Complex roots as eigenvalues of the companion matrix of the monic
/// normalization, each refined by a guarded Newton step.
inline std::vector<std::complex<double>> roots(const Poly& p) {
  if (p.is_zero()) throw Error("roots of the zero polynomial are undefined");
  const int n = p.degree();
  std::vector<std::complex<double>> out;
  if (n <= 0) return out;
  const Poly m = p.monic();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -m[i];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalue iteration failed");

  std::vector<double> dcoeffs;
  for (int i = 1; i <= n; ++i) dcoeffs.push_back(i * m[i]);
  const Poly dm(std::move(dcoeffs));
  for (int i = 0; i < n; ++i) {
    std::complex<double> z = es.eigenvalues()(i);
    for (int it = 0; it < 3; ++it) {
      const auto f = m(z);
      const auto df = dm(z);
      if (std::abs(df) == 0.0) break;
      const auto cand = z - f / df;
      if (std::abs(m(cand)) < std::abs(f)) z = cand;
      else break;
    }
    out.push_back(z);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

}  // namespace ab
