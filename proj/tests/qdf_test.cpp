#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace ab {
namespace {

using testing::mat_near;

const Poly xi = Poly::xi();
const Poly kExample{9.0, 18.0, 10.0};

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

OffsetKernelRep example() { return {PolyMatrix{{kExample}}, Eigen::VectorXd::Constant(1, 20.0)}; }
const Qdf kExamplePhi{mat({{9.0, 9.0}, {9.0, 10.0}}), 1};

TrajectorySegment scalar_signal(std::initializer_list<double> v) {
  TrajectorySegment s;
  for (double x : v) s.samples.push_back(Eigen::VectorXd::Constant(1, x));
  return s;
}

TEST(Qdf, RejectsBadShapes) {
  EXPECT_THROW(Qdf(mat({{1.0, 2.0}, {0.0, 1.0}}), 1), DimensionError);
  EXPECT_THROW(Qdf(Eigen::MatrixXd::Identity(3, 3), 2), DimensionError);
}

TEST(Evaluate, SpecCases) {
  EXPECT_DOUBLE_EQ(evaluate(kExamplePhi, scalar_signal({1.0, 1.0}), 0), 37.0);
  EXPECT_DOUBLE_EQ(evaluate(kExamplePhi, scalar_signal({0.0, 0.0}), 0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate(Qdf(Eigen::MatrixXd::Identity(2, 2), 1), scalar_signal({3.0, 4.0}), 0), 25.0);
  EXPECT_THROW(evaluate(kExamplePhi, scalar_signal({1.0, 1.0}), 1), DimensionError);
}

TEST(Increment, SpecCases) {
  EXPECT_TRUE(mat_near(increment(kExamplePhi).phi, mat({{-9, -9, 0}, {-9, -1, 9}, {0, 9, 10}}), 0.0));
  EXPECT_TRUE(increment(Qdf(Eigen::MatrixXd::Zero(2, 2), 1)).phi.isZero(0.0));
  EXPECT_TRUE(mat_near(increment(Qdf(mat({{1.0}}), 1)).phi, mat({{-1, 0}, {0, 1}}), 0.0));
}

TEST(Increment, IdentityOnRandomSignals) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t q = 1 + trial % 3;
    const int w = 1 + trial % 4;
    const auto n = static_cast<Eigen::Index>(q) * w;
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = g(rng);
    const Qdf f(a + a.transpose(), q);
    const Qdf d = increment(f);
    TrajectorySegment s;
    for (int t = 0; t < w + 12; ++t) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(q));
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
      s.samples.push_back(v);
    }
    for (long t = 0; t < 10; ++t) {
      const double lhs = evaluate(f, s, t + 1) - evaluate(f, s, t);
      EXPECT_NEAR(lhs, evaluate(d, s, t), 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(DegreeReduce, SpecCases) {
  Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(4, 4);
  padded.block(1, 1, 2, 2) = kExamplePhi.phi;
  int shift = -1;
  const Qdf r = degree_reduce(Qdf(padded, 1), &shift);
  EXPECT_EQ(shift, 1);
  EXPECT_TRUE(mat_near(r.phi, kExamplePhi.phi, 0.0));
  EXPECT_TRUE(mat_near(degree_reduce(kExamplePhi).phi, kExamplePhi.phi, 0.0));

  const Qdf tail(mat({{0.0, 0.0}, {0.0, 1.0}}), 1);
  const Qdf t1 = degree_reduce(tail, &shift);
  EXPECT_EQ(shift, 1);
  EXPECT_TRUE(mat_near(t1.phi, mat({{1.0}}), 0.0));
  const auto s = scalar_signal({2.0, -3.0, 5.0});
  for (long t = 0; t < 2; ++t) EXPECT_DOUBLE_EQ(evaluate(tail, s, t), evaluate(t1, s, t + shift));
}

TEST(BuildPsi, SpecCases) {
  const Eigen::MatrixXd d = increment(kExamplePhi).phi;
  const Eigen::MatrixXd z = build_psi(kExamplePhi, Eigen::VectorXd::Zero(1));
  EXPECT_TRUE(mat_near(z.topLeftCorner(3, 3), d, 0.0));
  EXPECT_TRUE(z.col(3).isZero(0.0));
  EXPECT_TRUE(z.row(3).isZero(0.0));

  const double wb = 20.0 / 37.0;
  const Eigen::MatrixXd p = build_psi(kExamplePhi, Eigen::VectorXd::Constant(1, wb));
  EXPECT_TRUE(mat_near(p.topRightCorner(3, 1), -wb * d * Eigen::Vector3d::Ones(), 1e-14));
  // constant windows are annihilated by the increment: 1^T dPhi 1 = 0
  EXPECT_NEAR(p(3, 3), 0.0, 1e-13);
  EXPECT_NEAR(Eigen::Vector3d::Ones().dot(d * Eigen::Vector3d::Ones()), 0.0, 0.0);
  EXPECT_TRUE(build_psi(Qdf(Eigen::MatrixXd::Zero(2, 2), 1), Eigen::VectorXd::Constant(1, 3.0)).isZero(0.0));
  EXPECT_THROW(build_psi(kExamplePhi, Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST(VerifyContractionForm, KnownPhiOnExample) {
  const FormCheck fc = verify_contraction_form(example(), kExamplePhi);
  EXPECT_TRUE(fc.passed) << fc.reason;
  EXPECT_TRUE(mat_near(fc.restricted_increment, -mat({{0.9, 0.9}, {0.9, 1.0}}), 1e-9));
  EXPECT_EQ(fc.coordinate_rows, (std::vector<int>{0, 1}));
  EXPECT_LT(fc.restricted_increment_eigenvalues.maxCoeff(), 0.0);
}

TEST(VerifyContractionForm, Failures) {
  const FormCheck zero = verify_contraction_form(example(), Qdf(Eigen::MatrixXd::Zero(2, 2), 1));
  EXPECT_FALSE(zero.passed);
  EXPECT_TRUE(zero.nonincreasing);
  EXPECT_FALSE(zero.strict);

  const OffsetKernelRep marginal = OffsetKernelRep::linear(PolyMatrix{{xi - 1.0}});
  const FormCheck m = verify_contraction_form(marginal, Qdf(mat({{1.0}}), 1));
  EXPECT_FALSE(m.passed);
  EXPECT_TRUE(m.nonincreasing);
  EXPECT_FALSE(m.strict);

  EXPECT_FALSE(verify_contraction_form(example(), Qdf(-kExamplePhi.phi, 1)).passed);
  EXPECT_THROW(verify_contraction_form(OffsetKernelRep::linear(PolyMatrix{{xi, 1.0}}), Qdf(mat({{1.0, 0}, {0, 1.0}}), 2)),
               PreconditionError);
}

TEST(VerifyLyapunov, SpecCases) {
  EXPECT_TRUE(verify_lyapunov(difference_behavior(example()), kExamplePhi).passed);
  EXPECT_TRUE(verify_lyapunov(OffsetKernelRep::linear(PolyMatrix{{xi}}), Qdf(mat({{1.0}}), 1)).passed);
  const FormCheck neg = verify_lyapunov(OffsetKernelRep::linear(PolyMatrix{{xi}}), Qdf(mat({{-1.0}}), 1));
  EXPECT_FALSE(neg.passed);
  EXPECT_FALSE(neg.nonnegative);
  EXPECT_THROW(verify_lyapunov(example(), kExamplePhi), PreconditionError);
}

TEST(VerifyPsi, SpecCases) {
  const Eigen::VectorXd wb = Eigen::VectorXd::Constant(1, 20.0 / 37.0);
  const PsiCheck ok = verify_psi_certificate(example(), build_psi(kExamplePhi, wb), kExamplePhi);
  EXPECT_TRUE(ok.passed) << ok.reason;
  EXPECT_NEAR(ok.max_value, 0.0, 1e-9);

  const Qdf zero(Eigen::MatrixXd::Zero(2, 2), 1);
  const PsiCheck z = verify_psi_certificate(example(), Eigen::MatrixXd::Zero(4, 4), zero);
  EXPECT_FALSE(z.passed);
  EXPECT_TRUE(z.nonpositive);
  EXPECT_FALSE(z.unique_equality);

  Eigen::MatrixXd corner = Eigen::MatrixXd::Zero(4, 4);
  corner(3, 3) = 1.0;
  const PsiCheck c = verify_psi_certificate(example(), corner, zero);
  EXPECT_FALSE(c.passed);
  EXPECT_FALSE(c.nonpositive);

  // off-center Psi: equality sits at the wrong constant
  const PsiCheck off = verify_psi_certificate(example(), build_psi(kExamplePhi, Eigen::VectorXd::Constant(1, 1.0)), kExamplePhi);
  EXPECT_FALSE(off.passed);
  EXPECT_THROW(verify_psi_certificate(example(), Eigen::MatrixXd::Zero(4, 4), kExamplePhi), PreconditionError);
}

TEST(Synthesize, SecondOrderExample) {
  const auto cert = synthesize_contraction_form(example());
  EXPECT_EQ(cert.phi.W, 2);
  EXPECT_NEAR(cert.wbar(0), 20.0 / 37.0, 1e-15);
  EXPECT_TRUE(cert.form.passed);
  EXPECT_TRUE(cert.lyapunov.passed);
  EXPECT_TRUE(cert.psi_check.passed);
  EXPECT_GE(linalg::sym_eigenvalues(cert.phi.phi).minCoeff(), -1e-9);
  EXPECT_TRUE(mat_near(cert.psi.topLeftCorner(3, 3), increment(cert.phi).phi, 1e-12));
}

TEST(Synthesize, DeadbeatAndMarginal) {
  const auto cert = synthesize_contraction_form({PolyMatrix{{xi}}, Eigen::VectorXd::Zero(1)});
  EXPECT_TRUE(mat_near(cert.phi.phi, mat({{1.0}}), 1e-14));
  try {
    synthesize_contraction_form({PolyMatrix{{xi - 1.0}}, Eigen::VectorXd::Zero(1)});
    FAIL() << "expected NotContractiveError";
  } catch (const NotContractiveError& e) {
    ASSERT_EQ(e.roots().size(), 1u);
    EXPECT_NEAR(std::abs(e.roots()[0] - 1.0), 0.0, 1e-14);
  }
}

TEST(Synthesize, TrivialBehaviorGivesZeroForm) {
  const auto cert = synthesize_contraction_form({PolyMatrix::identity(2), Eigen::Vector2d(1.0, -2.0)});
  EXPECT_TRUE(cert.phi.phi.isZero(0.0));
  EXPECT_TRUE(mat_near(cert.wbar, Eigen::Vector2d(1.0, -2.0), 0.0));
}

// Random Schur R: diagonal monic factors with roots inside |z| < 0.9 plus a
// small strictly lower coupling.
OffsetKernelRep random_contractive(std::mt19937_64& rng, std::size_t q) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> deg(1, 2);
  PolyMatrix r(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    std::vector<std::complex<double>> rs;
    const int d = deg(rng);
    if (d == 2 && u(rng) > 0.0) {
      const auto z = std::polar(0.85 * std::abs(u(rng)), 3.0 * u(rng));
      rs = {z, std::conj(z)};
    } else {
      for (int k = 0; k < d; ++k) rs.emplace_back(0.85 * u(rng), 0.0);
    }
    r(i, i) = testing::poly_from_roots(rs, 1.0 + std::abs(u(rng)));
    for (std::size_t j = 0; j < i; ++j) r(i, j) = Poly{u(rng), u(rng)};
  }
  Eigen::VectorXd c(static_cast<Eigen::Index>(q));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = 3.0 * u(rng);
  return {r, c};
}

TEST(Properties, SynthesisSoundnessAndMonotonicity) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const OffsetKernelRep b = random_contractive(rng, 1 + trial % 2);
    const auto cert = synthesize_contraction_form(b);
    EXPECT_TRUE(cert.form.passed) << b.R;
    EXPECT_TRUE(verify_lyapunov(difference_behavior(b), cert.phi).passed) << b.R;
    EXPECT_TRUE(verify_psi_certificate(b, cert.psi, cert.phi).passed) << b.R;
    EXPECT_EQ(cert.phi.W, std::max(lag(b), 1));

    // Q_Phi(w1 - w2) along two realized trajectories is nonincreasing
    const auto real = realize_autonomous(b);
    Eigen::VectorXd x1(real.n()), x2(real.n());
    for (Eigen::Index i = 0; i < real.n(); ++i) {
      x1(i) = u(rng);
      x2(i) = u(rng);
    }
    TrajectorySegment diff;
    for (int t = 0; t < 80; ++t) {
      diff.samples.push_back(real.C * (x1 - x2));
      x1 = real.A * x1 + real.E;
      x2 = real.A * x2 + real.E;
    }
    double prev = evaluate(cert.phi, diff, 0);
    for (long t = 1; t + cert.phi.W <= 80; ++t) {
      const double cur = evaluate(cert.phi, diff, t);
      EXPECT_LE(cur, prev + 1e-9);
      prev = cur;
    }
    EXPECT_LT(prev, 1e-6);
  }
}

}  // namespace
}  // namespace ab
