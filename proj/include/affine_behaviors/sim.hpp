#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "behavior.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "polymat.hpp"

namespace ab {

struct SimRun {
  std::vector<TrajectorySegment> trajectories;
  std::vector<double> residuals;  // per recursion step, relative
  bool converged = false;
  std::optional<Eigen::VectorXd> limit;
};

struct ContractionExperiment {
  bool contractive = false;
  int pairs = 0;
  int steps = 0;
  double tol = 0.0;
  double worst_initial_gap = 0.0;
  double worst_final_gap = 0.0;
  std::vector<double> worst_gap;  // sup over pairs of |w1(t) - w2(t)|_inf
  std::optional<Eigen::VectorXd> common_limit;
};

/// AB_SEED when set and parseable, the built-in default otherwise.
inline std::uint64_t seed_from_env() {
  if (const char* s = std::getenv("AB_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0') return v;
  }
  return kDefaultSeed;
}

namespace detail {

// Residual of row i of R(sigma) w = c at time t, samples from `w`.
inline double row_residual(const PolyMatrix& r, const Eigen::VectorXd& c, const TrajectorySegment& w, long t,
                           std::size_t i) {
  double acc = -c(static_cast<Eigen::Index>(i));
  double scale = std::abs(c(static_cast<Eigen::Index>(i)));
  for (std::size_t j = 0; j < r.cols(); ++j) {
    const auto& co = r(i, j).coeffs();
    for (std::size_t s = 0; s < co.size(); ++s) {
      const double term = co[s] * w.samples[static_cast<std::size_t>(t) + s](static_cast<Eigen::Index>(j));
      acc += term;
      scale = std::max(scale, std::abs(term));
    }
  }
  return std::abs(acc) / std::max(1.0, scale);
}

// Largest relative residual over the rows whose window [t, t + deg] ends at `end`.
inline double residual_ending_at(const PolyMatrix& r, const Eigen::VectorXd& c, const TrajectorySegment& w, long end) {
  double worst = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const int d = r.row_degree(i);
    if (d < 0 || end - d < 0) continue;
    worst = std::max(worst, row_residual(r, c, w, end - d, i));
  }
  return worst;
}

inline double max_residual_within(const PolyMatrix& r, const Eigen::VectorXd& c, const TrajectorySegment& w,
                                  long last) {
  double worst = 0.0;
  for (long end = 0; end <= last; ++end) worst = std::max(worst, residual_ending_at(r, c, w, end));
  return worst;
}

inline void finish_run(SimRun& run, int lag) {
  const TrajectorySegment& tr = run.trajectories.front();
  const std::size_t tail = static_cast<std::size_t>(std::max(lag, 1)) + 1;
  if (tr.size() < tail) return;
  Eigen::VectorXd lo = tr.samples.back(), hi = tr.samples.back();
  for (std::size_t i = tr.size() - tail; i < tr.size(); ++i) {
    lo = lo.cwiseMin(tr.samples[i]);
    hi = hi.cwiseMax(tr.samples[i]);
  }
  const double spread = lo.size() ? (hi - lo).maxCoeff() : 0.0;
  run.converged = std::isfinite(spread) && spread < 1e-6;
  if (run.converged) run.limit = tr.samples.back();
}

struct Recursion {
  PolyMatrix R;  // row proper on the solved columns
  Eigen::VectorXd c;
  std::vector<int> degrees;
  Eigen::PartialPivLU<Eigen::MatrixXd> lead;
  int lag = 0;
};

inline Recursion forward_recursion(const PolyMatrix& r, const Eigen::VectorXd& c, const std::vector<std::size_t>& cols,
                                   const Tolerances& tol) {
  const RowReduction rr = row_reduce(r, c, cols, tol);
  if (!rr.row_proper || rr.R.rows() != cols.size())
    throw PreconditionError("not forward-solvable in this form: leading coefficient matrix is singular");
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      p(i, j) = rr.R(static_cast<std::size_t>(i), cols[static_cast<std::size_t>(j)])[rr.degrees[static_cast<std::size_t>(i)]];
  if (n > 0 && linalg::numeric_rank(p, tol.rank) < n)
    throw PreconditionError("not forward-solvable in this form: leading coefficient matrix is singular");
  Recursion out{rr.R, rr.c, rr.degrees, Eigen::PartialPivLU<Eigen::MatrixXd>(p), 0};
  for (int d : rr.degrees) out.lag = std::max(out.lag, d);
  return out;
}

// Solves for the `cols` entries of w(tau); other entries must already be set.
inline void step(const Recursion& rec, const std::vector<std::size_t>& cols, TrajectorySegment& w, long tau) {
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::VectorXd rhs(n);
  Eigen::VectorXd& cur = w.samples[static_cast<std::size_t>(tau)];
  for (std::size_t j : cols) cur(static_cast<Eigen::Index>(j)) = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const long t0 = tau - rec.degrees[ui];
    double acc = rec.c(i);
    for (std::size_t j = 0; j < rec.R.cols(); ++j) {
      const auto& co = rec.R(ui, j).coeffs();
      for (std::size_t s = 0; s < co.size(); ++s)
        acc -= co[s] * w.samples[static_cast<std::size_t>(t0) + s](static_cast<Eigen::Index>(j));
    }
    rhs(i) = acc;
  }
  const Eigen::VectorXd x = n ? Eigen::VectorXd(rec.lead.solve(rhs)) : Eigen::VectorXd(0);
  for (Eigen::Index j = 0; j < n; ++j) cur(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)])) = x(j);
}

}  // namespace detail

/// Forward recursion of an autonomous behavior from `init` (lag samples).
inline SimRun simulate(const OffsetKernelRep& b, const TrajectorySegment& init, int steps, const Tolerances& tol = {}) {
  if (steps < 0) throw DimensionError("simulate: negative step count");
  detail::require_nonempty(b, "simulate");
  if (!is_autonomous(b, tol)) throw PreconditionError("simulate: behavior is not autonomous");
  const OffsetKernelRep mb = minimize(b, tol);
  const auto cols = all_columns(mb.vars());
  const detail::Recursion rec = detail::forward_recursion(mb.R, mb.c, cols, tol);
  if (init.size() != static_cast<std::size_t>(rec.lag))
    throw DimensionError("simulate: init has " + std::to_string(init.size()) + " samples, lag is " +
                         std::to_string(rec.lag));
  if (init.size() && init.dim() != static_cast<Eigen::Index>(mb.vars()))
    throw DimensionError("simulate: init samples have the wrong dimension");

  TrajectorySegment tr;
  tr.start_time = init.start_time;
  tr.samples = init.samples;
  tr.samples.resize(static_cast<std::size_t>(rec.lag + steps), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mb.vars())));
  if (rec.lag > 0 && detail::max_residual_within(rec.R, rec.c, tr, rec.lag - 1) > 1e2 * tol.residual)
    throw PreconditionError("simulate: init is not a window of the behavior");

  SimRun run;
  for (long tau = rec.lag; tau < rec.lag + steps; ++tau) {
    detail::step(rec, cols, tr, tau);
    run.residuals.push_back(detail::residual_ending_at(rec.R, rec.c, tr, tau));
  }
  run.trajectories.push_back(std::move(tr));
  detail::finish_run(run, rec.lag);
  return run;
}

/// Recursion in w with the control variables fed from `control`; the
/// trajectory holds (w, c) and has as many samples as `control`.
inline SimRun simulate_forced(const OffsetKernelRep& b, const TrajectorySegment& control, const TrajectorySegment& init,
                              const Tolerances& tol = {}) {
  detail::require_nonempty(b, "simulate_forced");
  const OffsetKernelRep mb = minimize(b, tol);
  const std::size_t q = mb.q;
  if (control.size() && control.dim() != static_cast<Eigen::Index>(mb.k))
    throw DimensionError("simulate_forced: control samples have the wrong dimension");
  if (init.size() && init.dim() != static_cast<Eigen::Index>(q))
    throw DimensionError("simulate_forced: init samples have the wrong dimension");

  const PolyMatrix rw = mb.R.block(0, 0, mb.rows(), q);
  const RowCompression rc = row_compress(rw, tol);
  if (rc.reduced.rows() < q) throw PreconditionError("simulate_forced: substitution leaves non-autonomous w-dynamics");
  const PolyMatrix rt = (rc.U * mb.R).cleaned(tol.zero);
  const Eigen::VectorXd ct = mb.rows() ? Eigen::VectorXd(rc.U.eval_real(1.0) * mb.c) : Eigen::VectorXd(0);
  const PolyMatrix top = rt.block(0, 0, q, mb.vars());
  const auto cols = all_columns(q);
  const detail::Recursion rec = detail::forward_recursion(top, ct.head(static_cast<Eigen::Index>(q)), cols, tol);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = q; j < mb.vars(); ++j)
      if (rec.R(i, j).degree() > rec.degrees[i])
        throw PreconditionError("simulate_forced: w depends on future control samples");
  if (init.size() != static_cast<std::size_t>(rec.lag))
    throw DimensionError("simulate_forced: init has " + std::to_string(init.size()) + " samples, lag is " +
                         std::to_string(rec.lag));
  if (control.size() < init.size())
    throw DimensionError("simulate_forced: control signal is shorter than the init window");

  TrajectorySegment tr;
  tr.start_time = control.start_time;
  for (std::size_t t = 0; t < control.size(); ++t) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mb.vars()));
    if (t < init.size()) s.head(static_cast<Eigen::Index>(q)) = init.samples[t];
    s.tail(static_cast<Eigen::Index>(mb.k)) = control.samples[t];
    tr.samples.push_back(std::move(s));
  }
  if (rec.lag > 0 && detail::max_residual_within(rec.R, rec.c, tr, rec.lag - 1) > 1e2 * tol.residual)
    throw PreconditionError("simulate_forced: init is not a window of the behavior");

  SimRun run;
  for (long tau = rec.lag; tau < static_cast<long>(tr.size()); ++tau) {
    detail::step(rec, cols, tr, tau);
    run.residuals.push_back(detail::residual_ending_at(rec.R, rec.c, tr, tau));
  }
  // rows that constrain the control signal alone
  const PolyMatrix bottom = rt.block(q, 0, rt.rows() - q, mb.vars());
  const Eigen::VectorXd cb = ct.tail(static_cast<Eigen::Index>(rt.rows() - q));
  if (detail::max_residual_within(bottom, cb, tr, static_cast<long>(tr.size()) - 1) > 1e2 * tol.residual)
    throw PreconditionError("simulate_forced: control signal is not compatible with B");
  run.trajectories.push_back(std::move(tr));
  detail::finish_run(run, rec.lag);
  return run;
}

/// Uniform [-1, 1] window projected onto the window set of length lag.
inline TrajectorySegment random_init(const OffsetKernelRep& b, std::mt19937_64& rng, const Tolerances& tol = {}) {
  const int l = lag(b, tol);
  const WindowSpace ws = window_space(b, l, tol);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(b.vars()) * l);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  const Eigen::VectorXd w = ws.particular + ws.basis * (ws.basis.transpose() * (x - ws.particular));
  TrajectorySegment s;
  const auto q = static_cast<Eigen::Index>(b.vars());
  for (int t = 0; t < l; ++t) s.samples.push_back(w.segment(t * q, q));
  return s;
}

inline ContractionExperiment empirical_contraction(const OffsetKernelRep& b, int pairs, int steps, double gap_tol,
                                                   std::uint64_t seed = kDefaultSeed, const Tolerances& tol = {}) {
  const OffsetKernelRep mb = minimize(b, tol);
  if (!is_autonomous(mb, tol)) throw PreconditionError("empirical_contraction: behavior is not autonomous");
  std::mt19937_64 rng(seed);
  ContractionExperiment out;
  out.pairs = pairs;
  out.steps = steps;
  out.tol = gap_tol;
  const int l = lag(mb, tol);
  const std::size_t len = static_cast<std::size_t>(l + steps);
  out.worst_gap.assign(len, 0.0);
  std::optional<Eigen::VectorXd> limit_sum;
  bool all_converged = true;
  for (int k = 0; k < pairs; ++k) {
    const SimRun a = simulate(mb, random_init(mb, rng, tol), steps, tol);
    const SimRun c = simulate(mb, random_init(mb, rng, tol), steps, tol);
    const auto& ta = a.trajectories.front();
    const auto& tc = c.trajectories.front();
    for (std::size_t t = 0; t < len; ++t) {
      const Eigen::VectorXd d = ta.samples[t] - tc.samples[t];
      const double g = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
      out.worst_gap[t] = std::isfinite(g) ? std::max(out.worst_gap[t], g) : INFINITY;
    }
    all_converged = all_converged && a.converged && c.converged;
    if (a.limit) limit_sum = limit_sum ? Eigen::VectorXd(*limit_sum + *a.limit) : *a.limit;
  }
  const std::size_t tail = std::min(len, static_cast<std::size_t>(std::max(l, 1)) + 1);
  for (std::size_t t = len - tail; t < len; ++t) out.worst_final_gap = std::max(out.worst_final_gap, out.worst_gap[t]);
  for (std::size_t t = 0; t < std::min<std::size_t>(len, static_cast<std::size_t>(l)); ++t)
    out.worst_initial_gap = std::max(out.worst_initial_gap, out.worst_gap[t]);
  out.contractive = out.worst_final_gap < gap_tol;
  if (out.contractive && all_converged && limit_sum && pairs > 0) out.common_limit = *limit_sum / pairs;
  return out;
}

/// `t,var_0,...` with one row per sample; `traj_id` first in long format.
inline void write_csv(std::ostream& os, const std::vector<TrajectorySegment>& trajs, bool long_format) {
  if (trajs.empty()) return;
  const Eigen::Index q = trajs.front().size() ? trajs.front().dim() : 0;
  const auto prec = os.precision(17);
  if (long_format) os << "traj_id,";
  os << "t";
  for (Eigen::Index j = 0; j < q; ++j) os << ",var_" << j;
  os << '\n';
  for (std::size_t id = 0; id < trajs.size(); ++id) {
    if (!long_format && id > 0) break;
    const auto& tr = trajs[id];
    for (std::size_t t = 0; t < tr.size(); ++t) {
      if (long_format) os << id << ',';
      os << tr.start_time + static_cast<long>(t);
      for (Eigen::Index j = 0; j < q; ++j) os << ',' << tr.samples[t](j);
      os << '\n';
    }
  }
  os.precision(prec);
}

}  // namespace ab
