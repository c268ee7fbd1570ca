#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace ab {
namespace {

const Poly xi = Poly::xi();

OffsetKernelRep example() { return {PolyMatrix{{Poly{9.0, 18.0, 10.0}}}, Eigen::VectorXd::Constant(1, 20.0)}; }

TrajectorySegment scalars(std::initializer_list<double> v) {
  TrajectorySegment s;
  for (double x : v) s.samples.push_back(Eigen::VectorXd::Constant(1, x));
  return s;
}

TEST(Simulate, SecondOrderExampleConverges) {
  const SimRun r = simulate(example(), scalars({0.0, 0.0}), 300);
  const auto& tr = r.trajectories.front();
  ASSERT_EQ(tr.size(), 302u);
  // hand recursion 10 w(t+2) = 20 - 18 w(t+1) - 9 w(t)
  double a = 0.0, b = 0.0;
  for (std::size_t t = 2; t < 12; ++t) {
    const double c = (20.0 - 18.0 * b - 9.0 * a) / 10.0;
    EXPECT_NEAR(tr.samples[t](0), c, 1e-12);
    a = b;
    b = c;
  }
  EXPECT_TRUE(r.converged);
  ASSERT_TRUE(r.limit);
  EXPECT_NEAR((*r.limit)(0), 20.0 / 37.0, 1e-6);
  for (double res : r.residuals) EXPECT_LT(res, 1e-8);
}

TEST(Simulate, TrivialCases) {
  const SimRun d = simulate({PolyMatrix{{xi}}, Eigen::VectorXd::Zero(1)}, scalars({5.0}), 3);
  ASSERT_EQ(d.trajectories.front().size(), 4u);
  EXPECT_EQ(d.trajectories.front().samples[0](0), 5.0);
  for (std::size_t t = 1; t < 4; ++t) EXPECT_EQ(d.trajectories.front().samples[t](0), 0.0);

  const SimRun c = simulate({PolyMatrix{{xi - 1.0}}, Eigen::VectorXd::Zero(1)}, scalars({3.0}), 50);
  EXPECT_TRUE(c.converged);
  EXPECT_EQ((*c.limit)(0), 3.0);
  const SimRun c2 = simulate({PolyMatrix{{xi - 1.0}}, Eigen::VectorXd::Zero(1)}, scalars({-1.0}), 50);
  EXPECT_NE((*c2.limit)(0), (*c.limit)(0));

  // static behavior w = 4
  const SimRun s = simulate({PolyMatrix{{Poly(2.0)}}, Eigen::VectorXd::Constant(1, 8.0)}, {}, 3);
  for (const auto& v : s.trajectories.front().samples) EXPECT_EQ(v(0), 4.0);
}

TEST(Simulate, Errors) {
  EXPECT_THROW(simulate(example(), scalars({0.0}), 5), DimensionError);
  EXPECT_THROW(simulate(OffsetKernelRep::linear(PolyMatrix{{xi, Poly(1.0)}}), {}, 5), PreconditionError);
  // lag 2 in the second variable, lag 0 row pins w1 = w2: init must respect it
  const OffsetKernelRep b({PolyMatrix{{Poly(1.0), Poly(-1.0)}, {Poly(), xi * xi - 0.25}}}, Eigen::Vector2d::Zero());
  TrajectorySegment bad;
  bad.samples = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 0.0)};
  EXPECT_THROW(simulate(b, bad, 5), PreconditionError);
  TrajectorySegment good;
  good.samples = {Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(2.0, 2.0)};
  const SimRun r = simulate(b, good, 4);
  EXPECT_NEAR(r.trajectories.front().samples[2](0), 0.25, 1e-15);
  EXPECT_NEAR(r.trajectories.front().samples[3](1), 0.5, 1e-15);
}

TEST(SimulateForced, SpecCases) {
  const OffsetKernelRep integ = OffsetKernelRep::linear(PolyMatrix{{xi - 1.0, Poly(-1.0)}}, 1, 1);
  TrajectorySegment zero;
  for (int t = 0; t < 20; ++t) zero.samples.push_back(Eigen::VectorXd::Zero(1));
  const SimRun r = simulate_forced(integ, zero, scalars({1.0}));
  for (const auto& v : r.trajectories.front().samples) EXPECT_EQ(v(0), 1.0);

  EXPECT_THROW(simulate_forced(integ, TrajectorySegment{}, scalars({1.0})), DimensionError);
  EXPECT_THROW(simulate_forced(integ, zero, scalars({1.0, 2.0})), DimensionError);
}

TEST(SimulateForced, OfflineFeedbackMatchesClosedLoop) {
  // u = 1 - w/2 fed back by hand against the interconnection recursion
  const OffsetKernelRep integ = OffsetKernelRep::linear(PolyMatrix{{xi - 1.0, Poly(-1.0)}}, 1, 1);
  const OffsetKernelRep ctrl({PolyMatrix{{Poly(1.0)}}}, Eigen::VectorXd::Ones(1), 1, 0);
  const OffsetKernelRep plant_y = OffsetKernelRep::linear(PolyMatrix{{xi - 1.0, Poly(-1.0), Poly()}, {Poly(1.0), Poly(), Poly(-1.0)}}, 1, 2);
  const OffsetKernelRep feedback({PolyMatrix{{Poly(1.0), Poly(0.5)}}}, Eigen::VectorXd::Ones(1), 2, 0);
  const OffsetKernelRep closed = interconnect_project(plant_y, feedback);
  const SimRun cl = simulate(closed, scalars({3.0}), 40);

  TrajectorySegment u;
  double w = 3.0;
  for (int t = 0; t < 41; ++t) {
    u.samples.push_back(Eigen::VectorXd::Constant(1, 1.0 - 0.5 * w));
    w = w + (1.0 - 0.5 * w);
  }
  const SimRun forced = simulate_forced(integ, u, scalars({3.0}));
  for (std::size_t t = 0; t < 41; ++t)
    EXPECT_NEAR(forced.trajectories.front().samples[t](0), cl.trajectories.front().samples[t](0), 1e-12);
  (void)ctrl;
}

TEST(SimulateForced, RejectsNonAutonomousW) {
  const OffsetKernelRep b = OffsetKernelRep::linear(PolyMatrix{{Poly(), Poly(1.0)}}, 1, 1);
  TrajectorySegment zero;
  zero.samples.assign(5, Eigen::VectorXd::Zero(1));
  EXPECT_THROW(simulate_forced(b, zero, {}), PreconditionError);
}

TEST(EmpiricalContraction, SpecCases) {
  const auto e = empirical_contraction(example(), 20, 300, 1e-6);
  EXPECT_TRUE(e.contractive);
  EXPECT_LT(e.worst_final_gap, 1e-6);
  EXPECT_FALSE(empirical_contraction({PolyMatrix{{xi - 1.0}}, Eigen::VectorXd::Zero(1)}, 20, 300, 1e-6).contractive);
  const auto h = empirical_contraction({PolyMatrix{{2.0 * xi - 1.0}}, Eigen::VectorXd::Ones(1)}, 20, 300, 1e-6);
  EXPECT_TRUE(h.contractive);
  ASSERT_TRUE(h.common_limit);
  EXPECT_NEAR((*h.common_limit)(0), 1.0, 1e-9);
}

TEST(EmpiricalContraction, SeedReproducible) {
  const auto a = empirical_contraction(example(), 3, 10, 1e-6, 99);
  const auto b = empirical_contraction(example(), 3, 10, 1e-6, 99);
  EXPECT_EQ(a.worst_gap, b.worst_gap);
}

TEST(Csv, Formats) {
  std::ostringstream wide, longf;
  std::vector<TrajectorySegment> trs{scalars({1.0, 0.5}), scalars({2.0})};
  write_csv(wide, trs, false);
  EXPECT_EQ(wide.str(), "t,var_0\n0,1\n1,0.5\n");
  write_csv(longf, trs, true);
  EXPECT_EQ(longf.str(), "traj_id,t,var_0\n0,0,1\n0,1,0.5\n1,0,2\n");
}

TEST(Properties, StateRecursionAgreesWithKernelRecursion) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t q = 1 + trial % 2;
    PolyMatrix r(q, q);
    for (std::size_t i = 0; i < q; ++i) {
      r(i, i) = testing::poly_from_roots({{0.9 * u(rng), 0.0}, {0.9 * u(rng), 0.0}}, 1.0 + std::abs(u(rng)));
      for (std::size_t j = 0; j < i; ++j) r(i, j) = Poly{u(rng), u(rng)};
    }
    const OffsetKernelRep b(r, Eigen::VectorXd::Random(static_cast<Eigen::Index>(q)));
    const auto real = realize_autonomous(b);
    const int l = lag(b);
    Eigen::VectorXd x(real.n());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
    TrajectorySegment ss;
    for (int t = 0; t < 60; ++t) {
      ss.samples.push_back(real.C * x + real.F);
      x = real.A * x + real.E;
    }
    TrajectorySegment init;
    init.samples.assign(ss.samples.begin(), ss.samples.begin() + l);
    const SimRun k = simulate(b, init, 60 - l);
    for (std::size_t t = 0; t < 60; ++t)
      EXPECT_LT((k.trajectories.front().samples[t] - ss.samples[t]).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Properties, CertificateDecreasesAlongSimulatedPairs) {
  const auto cert = synthesize_contraction_form(example());
  std::mt19937_64 rng(13);
  for (int pair = 0; pair < 10; ++pair) {
    const auto a = simulate(example(), random_init(example(), rng), 200).trajectories.front();
    const auto b = simulate(example(), random_init(example(), rng), 200).trajectories.front();
    TrajectorySegment d;
    for (std::size_t t = 0; t < a.size(); ++t) d.samples.push_back(a.samples[t] - b.samples[t]);
    double prev = evaluate(cert.phi, d, 0);
    for (long t = 1; t + 2 <= static_cast<long>(d.size()); ++t) {
      const double cur = evaluate(cert.phi, d, t);
      EXPECT_LE(cur, prev + 1e-9);
      prev = cur;
    }
  }
}

}  // namespace
}  // namespace ab
