#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace ab {
namespace {

using testing::mat_near;
using testing::poly_near;
using cd = std::complex<double>;

const Poly kExample{9.0, 18.0, 10.0};

TEST(Poly, CanonicalZeroAndDegree) {
  EXPECT_EQ(Poly({0.0, 0.0}).degree(), -1);
  EXPECT_TRUE(Poly({0.0}).is_zero());
  EXPECT_EQ(Poly({1.0, 2.0, 0.0}).degree(), 1);
  EXPECT_EQ(kExample.degree(), 2);
}

TEST(Poly, DivmodRecombines) {
  const Poly a{-1.0, 0.0, 0.0, 1.0};
  const Poly b{-1.0, 1.0};
  auto [q, r] = divmod(a, b);
  EXPECT_TRUE(r.is_zero());
  EXPECT_TRUE(poly_near(q, Poly{1.0, 1.0, 1.0}, 1e-14));
  EXPECT_FALSE(divides(Poly{0.0, 1.0}, Poly{1.0}));
}

TEST(Poly, RootsOfExample) {
  const auto rs = roots(kExample);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_NEAR(std::abs(rs[0] - cd(-0.9, -0.3)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(rs[1] - cd(-0.9, 0.3)), 0.0, 1e-12);
}

TEST(Eval, ExampleAtOneAndAtRoot) {
  const PolyMatrix a{{kExample}};
  EXPECT_NEAR(std::abs(eval(a, 1.0)(0, 0) - 37.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(eval(a, cd(-0.9, 0.3))(0, 0)), 0.0, 1e-13);
  // xi^2 at the root, by hand: (-0.9 + 0.3i)^2 = 0.72 - 0.54i
  EXPECT_NEAR(std::abs(cd(-0.9, 0.3) * cd(-0.9, 0.3) - cd(0.72, -0.54)), 0.0, 1e-15);
  EXPECT_TRUE(PolyMatrix(2, 2).eval(cd(0.3, 2.0)).isZero());
}

TEST(Rank, GenericAndPointwise) {
  const Poly xi = Poly::xi();
  EXPECT_EQ(rank_generic(PolyMatrix{{xi - 1.0}}), 1);
  EXPECT_EQ(rank_generic(PolyMatrix{{xi, 1.0}, {xi * xi, xi}}), 1);
  EXPECT_EQ(rank_generic(PolyMatrix::identity(2)), 2);
  EXPECT_EQ(rank_at(PolyMatrix{{xi - 1.0}}, 1.0), 0);
  EXPECT_EQ(rank_at(PolyMatrix{{xi - 1.0}}, 0.0), 1);
  EXPECT_EQ(rank_at(PolyMatrix{{xi, 1.0}, {0.0, xi}}, 0.0), 1);
}

TEST(Smith, SpecCases) {
  const Poly xi = Poly::xi();
  {
    const PolyMatrix a{{xi, 0.0}, {0.0, xi * xi}};
    const auto s = smith_form(a);
    EXPECT_EQ(s.D, a);
    EXPECT_EQ(s.U, PolyMatrix::identity(2));
    EXPECT_EQ(s.V, PolyMatrix::identity(2));
  }
  {
    const auto s = smith_form(PolyMatrix{{1.0, xi}, {0.0, 1.0}});
    EXPECT_EQ(s.D, PolyMatrix::identity(2));
  }
  {
    const auto s = smith_form(PolyMatrix{{xi, xi * xi}});
    EXPECT_EQ(s.D, (PolyMatrix{{xi, 0.0}}));
  }
}

TEST(Smith, RandomReconstructionAndDivisibility) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = static_cast<std::size_t>(dim(rng));
    const auto q = static_cast<std::size_t>(dim(rng));
    const PolyMatrix a = testing::random_poly_matrix(rng, p, q, 4);
    const auto s = smith_form(a);
    const double scale = std::max(1.0, s.U.max_abs() * a.max_abs() * s.V.max_abs());
    EXPECT_LT(testing::max_coeff_diff(s.U * a * s.V, s.D) / scale, 1e-9) << a;
    // U and V unimodular: constant nonzero determinant
    const Poly du = det(s.U);
    const Poly dv = det(s.V);
    EXPECT_LE(du.degree(), 0);
    EXPECT_LE(dv.degree(), 0) << a << "\nV=" << s.V << "\ndetV=" << dv;
    EXPECT_FALSE(du.is_zero());
    EXPECT_FALSE(dv.is_zero());
    const auto f = s.invariant_factors();
    for (std::size_t i = 0; i + 1 < f.size(); ++i) EXPECT_TRUE(divides(f[i], f[i + 1], 1e-6));
    for (const auto& d : f) EXPECT_DOUBLE_EQ(d.lead(), 1.0);
  }
}

TEST(RowCompress, SpecCases) {
  const Poly xi = Poly::xi();
  {
    const PolyMatrix a{{xi, 1.0}, {0.0, xi}};
    const auto rc = row_compress(a);
    EXPECT_EQ(rc.zero_rows, 0u);
  }
  {
    const auto rc = row_compress(PolyMatrix{{xi}, {xi}});
    EXPECT_EQ(rc.zero_rows, 1u);
    EXPECT_EQ(rc.reduced, (PolyMatrix{{xi}}));
  }
  {
    const auto rc = row_compress(PolyMatrix(3, 2));
    EXPECT_EQ(rc.zero_rows, 3u);
    EXPECT_EQ(rc.reduced.rows(), 0u);
  }
}

TEST(RowCompress, RandomReconstructionAndRank) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = static_cast<std::size_t>(dim(rng));
    const auto q = static_cast<std::size_t>(dim(rng));
    PolyMatrix a = testing::random_poly_matrix(rng, p, q, 3);
    if (trial % 3 == 0 && p >= 2) {
      // plant a dependent row
      for (std::size_t j = 0; j < q; ++j) a(p - 1, j) = Poly{1.0, -0.5} * a(0, j);
    }
    const auto rc = row_compress(a);
    const PolyMatrix ua = rc.U * a;
    const double scale = std::max(1.0, rc.U.max_abs() * a.max_abs());
    PolyMatrix expect(p, q);
    for (std::size_t i = 0; i < rc.reduced.rows(); ++i)
      for (std::size_t j = 0; j < q; ++j) expect(i, j) = rc.reduced(i, j);
    EXPECT_LT(testing::max_coeff_diff(ua, expect) / scale, 1e-9) << a;
    EXPECT_EQ(static_cast<int>(rc.reduced.rows()), rank_generic(a)) << a;
    EXPECT_EQ(rank_generic(rc.reduced), static_cast<int>(rc.reduced.rows()));
  }
}

TEST(RankGeneric, AgreesWithSmithCount) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = static_cast<std::size_t>(dim(rng));
    const auto q = static_cast<std::size_t>(dim(rng));
    PolyMatrix a = testing::random_poly_matrix(rng, p, q, 3);
    if (p >= 2 && trial % 2)
      for (std::size_t j = 0; j < q; ++j) a(p - 1, j) = Poly{0.5, 1.0} * a(0, j);
    const int r = rank_generic(a);
    EXPECT_EQ(r, smith_form(a).rank()) << a;
    const cd z = std::polar(1.7, ang(rng));
    EXPECT_EQ(rank_at(a, z), r) << a;
  }
}

TEST(Det, SpecCases) {
  const Poly xi = Poly::xi();
  EXPECT_TRUE(poly_near(det(PolyMatrix{{kExample}}), kExample, 1e-12));
  EXPECT_TRUE(poly_near(det(PolyMatrix::identity(3)), Poly(1.0), 1e-14));
  EXPECT_TRUE(poly_near(det(PolyMatrix{{xi, 1.0}, {1.0, xi}}), Poly{-1.0, 0.0, 1.0}, 1e-14));
  EXPECT_THROW(det(PolyMatrix(2, 3)), DimensionError);
}

TEST(Det, RandomAgainstPointEvaluation) {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<std::size_t>(dim(rng));
    const PolyMatrix a = testing::random_poly_matrix(rng, n, n, 3, 0.1);
    const Poly d = det(a);
    for (cd z : {cd(0.3, -0.2), cd(-1.1, 0.4), cd(0.0, 1.3)}) {
      const cd ref = a.eval(z).determinant();
      EXPECT_NEAR(std::abs(d(z) - ref), 0.0, 1e-9 * std::max(1.0, std::abs(ref))) << a;
    }
  }
}

TEST(Schur, SpecCases) {
  const Poly xi = Poly::xi();
  const auto ex = is_schur(PolyMatrix{{kExample}});
  EXPECT_TRUE(ex.schur);
  ASSERT_EQ(ex.roots.size(), 2u);
  for (const auto& z : ex.roots) {
    EXPECT_NEAR(std::norm(z), 0.9, 1e-12);
    EXPECT_NEAR(std::abs(kExample(z)), 0.0, 1e-6 * 10.0);
  }
  EXPECT_FALSE(is_schur(PolyMatrix{{xi - 1.0}}).schur);
  const auto half = is_schur(PolyMatrix{{2.0 * xi - 1.0}});
  EXPECT_TRUE(half.schur);
  EXPECT_NEAR(half.roots.at(0).real(), 0.5, 1e-14);
  EXPECT_THROW(is_schur(PolyMatrix{{xi, xi}, {xi, xi}}), PreconditionError);
}

// Number of zeros of det A inside |z| < radius by the argument principle.
int winding_count(const PolyMatrix& a, double radius, int samples, double* min_abs) {
  double total = 0.0;
  cd prev = a.eval(cd(radius, 0.0)).determinant();
  *min_abs = std::abs(prev);
  for (int k = 1; k <= samples; ++k) {
    const double th = 2.0 * std::numbers::pi * k / samples;
    const cd cur = a.eval(std::polar(radius, th)).determinant();
    *min_abs = std::min(*min_abs, std::abs(cur));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

TEST(Schur, AgreesWithArgumentPrinciple) {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> dim(1, 3);
  int checked = 0;
  for (int trial = 0; checked < 50 && trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(dim(rng));
    PolyMatrix a = testing::random_poly_matrix(rng, n, n, 2, 0.2);
    // bias toward stable cases: dominant leading diagonal
    for (std::size_t i = 0; i < n; ++i) a(i, i) += Poly::monomial(2, 4.0);
    double m1 = 0.0, mbig = 0.0;
    const int inside = winding_count(a, 1.0, 4096, &m1);
    const int total = winding_count(a, 100.0, 4096, &mbig);
    if (m1 < 1e-3 || det(a).is_zero()) continue;
    ++checked;
    EXPECT_EQ(is_schur(a).schur, inside == total) << a;
  }
  EXPECT_EQ(checked, 50);
}

TEST(SolveLeftMultiple, SpecCases) {
  const Poly xi = Poly::xi();
  {
    const auto x = solve_left_multiple(PolyMatrix{{xi}}, PolyMatrix{{xi * xi}});
    ASSERT_TRUE(x);
    EXPECT_TRUE(poly_near((*x)(0, 0), xi, 1e-14));
  }
  EXPECT_FALSE(solve_left_multiple(PolyMatrix{{xi}}, PolyMatrix{{1.0}}));
  {
    const auto x = solve_left_multiple(PolyMatrix{{xi - 1.0, -1.0}}, PolyMatrix{{xi * xi - 1.0, -xi - 1.0}});
    ASSERT_TRUE(x);
    EXPECT_TRUE(poly_near((*x)(0, 0), xi + 1.0, 1e-12));
  }
  EXPECT_THROW(solve_left_multiple(PolyMatrix{{xi}, {xi}}, PolyMatrix{{xi}}), PreconditionError);
}

TEST(SolveLeftMultiple, RandomProducts) {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<int> dim(1, 3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = static_cast<std::size_t>(dim(rng));
    const auto q = p + static_cast<std::size_t>(dim(rng)) - 1;
    const auto m = static_cast<std::size_t>(dim(rng));
    const PolyMatrix a = testing::random_poly_matrix(rng, p, q, 2, 0.2);
    if (rank_generic(a) != static_cast<int>(p)) continue;
    const PolyMatrix x0 = testing::random_poly_matrix(rng, m, p, 2, 0.2);
    const PolyMatrix b = x0 * a;
    const auto x = solve_left_multiple(a, b);
    ASSERT_TRUE(x) << a << " " << b;
    const double scale = std::max({1.0, b.max_abs(), x->max_abs() * a.max_abs()});
    EXPECT_LT(testing::max_coeff_diff(*x * a, b) / scale, 1e-9);
  }
}

}  // namespace
}  // namespace ab
