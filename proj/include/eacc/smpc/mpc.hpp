#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eacc/errors.hpp"
#include "eacc/kinematics.hpp"
#include "eacc/propagation.hpp"
#include "eacc/smpc/qp.hpp"
#include "eacc/smpc/qp_solver.hpp"
#include "eacc/smpc/special.hpp"

namespace eacc::smpc {

struct MpcConfig {
  int N = 3;
  double dt = 1.0;
  double d_s = 15.0;  // stopping distance, m
  double T_s = 0.0;   // constant time headway, s
  double r1 = 1.0;    // acceleration effort
  double r2 = 5.0;    // acceleration rate
  double q1 = 5.0;    // speed tracking
  double q2 = 1.0;    // relative speed
  double rho = 50.0;  // slack penalty
  std::vector<double> eps{0.2, 0.4, 0.6};
  double v_s = 20.0;
  MotionLimits limits{};
  // Risk levels above 0.5 turn the margin negative. By default they are
  // capped at 0.5 (zero margin); set this to use the formula verbatim.
  bool allow_negative_margin = false;
  double fallback_jerk = 2.0;  // m/s^3, brake ramp when the solver fails

  double effective_eps(int i) const {
    const double e = eps.at(static_cast<std::size_t>(i));
    return allow_negative_margin ? e : std::min(e, 0.5);
  }

  void validate() const {
    detail::require(N >= 1, "MpcConfig: N must be >= 1");
    detail::require(dt > 0.0, "MpcConfig: dt must be positive");
    detail::require(static_cast<int>(eps.size()) == N, "MpcConfig: need one eps per horizon step");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      detail::require(eps[i] > 0.0 && eps[i] < 1.0, "MpcConfig: eps must lie in (0, 1)");
      if (i > 0) detail::require(eps[i] >= eps[i - 1], "MpcConfig: eps must be non-decreasing");
    }
    detail::require(r1 > 0.0 && q1 > 0.0 && q2 > 0.0 && rho > 0.0 && r2 >= 0.0,
                    "MpcConfig: need r1, q1, q2, rho > 0 and r2 >= 0");
    detail::require(d_s >= 0.0 && T_s >= 0.0, "MpcConfig: d_s and T_s must be >= 0");
    detail::require(limits.v_min < limits.v_max && limits.a_min < limits.a_max,
                    "MpcConfig: empty speed or acceleration range");
    detail::require(limits.a_min <= 0.0 && limits.a_max >= 0.0,
                    "MpcConfig: acceleration range must contain 0");
    detail::require(fallback_jerk > 0.0, "MpcConfig: fallback_jerk must be > 0");
  }
};

// Decision-vector layout: a[0..N-1], v[1..N], p[1..N], p_rel[1..N], delta[1..N].
struct MpcLayout {
  int N;
  Eigen::Index a(int i) const { return i; }
  Eigen::Index v(int i) const { return N + i - 1; }
  Eigen::Index p(int i) const { return 2 * N + i - 1; }
  Eigen::Index p_rel(int i) const { return 3 * N + i - 1; }
  Eigen::Index delta(int i) const { return 4 * N + i - 1; }
  Eigen::Index size() const { return 5 * N; }
};

struct MpcInputs {
  double p0 = 0.0;               // current headway mean
  double p_rel0 = 0.0;           // current relative-speed mean (lead minus ego)
  std::vector<double> var;       // headway variances, indices 0..N
  double v_now = 0.0;
  double a_prev = 0.0;           // last applied command
};

struct MpcProblem {
  QpProblem qp;
  std::vector<double> margins;  // index i-1 for step i
};

inline MpcProblem build_qp(const MpcConfig& cfg, const MpcInputs& in) {
  cfg.validate();
  const int N = cfg.N;
  detail::require(static_cast<int>(in.var.size()) == N + 1, "build_qp: need N+1 variances");
  for (double v : in.var) detail::require(std::isfinite(v) && v >= 0.0, "build_qp: bad variance");
  detail::require(std::isfinite(in.p0) && std::isfinite(in.p_rel0) && std::isfinite(in.v_now) &&
                      std::isfinite(in.a_prev),
                  "build_qp: non-finite input");

  const MpcLayout L{N};
  const auto n = L.size();
  const double dt = cfg.dt;
  MpcProblem out;
  auto& qp = out.qp;
  qp.P = Eigen::MatrixXd::Zero(n, n);
  qp.q = Eigen::VectorXd::Zero(n);
  qp.lb = Eigen::VectorXd::Constant(n, -kInf);
  qp.ub = Eigen::VectorXd::Constant(n, kInf);
  qp.names.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < N; ++i) {
    const auto ai = L.a(i);
    qp.names[static_cast<std::size_t>(ai)] = "a[" + std::to_string(i) + "]";
    qp.P(ai, ai) += 2.0 * (cfg.r1 + cfg.r2);
    if (i == 0) {
      qp.q[ai] -= 2.0 * cfg.r2 * in.a_prev;
      qp.constant += cfg.r2 * in.a_prev * in.a_prev;
    } else {
      const auto am = L.a(i - 1);
      qp.P(am, am) += 2.0 * cfg.r2;
      qp.P(ai, am) -= 2.0 * cfg.r2;
      qp.P(am, ai) -= 2.0 * cfg.r2;
    }
    qp.lb[ai] = cfg.limits.a_min;
    qp.ub[ai] = cfg.limits.a_max;
  }
  for (int i = 1; i <= N; ++i) {
    const auto s = std::to_string(i);
    const auto vi = L.v(i), pi = L.p(i), ri = L.p_rel(i), di = L.delta(i);
    qp.names[static_cast<std::size_t>(vi)] = "v[" + s + "]";
    qp.names[static_cast<std::size_t>(pi)] = "p[" + s + "]";
    qp.names[static_cast<std::size_t>(ri)] = "p_rel[" + s + "]";
    qp.names[static_cast<std::size_t>(di)] = "delta[" + s + "]";
    qp.P(vi, vi) += 2.0 * cfg.q1;
    qp.q[vi] -= 2.0 * cfg.q1 * cfg.v_s;
    qp.constant += cfg.q1 * cfg.v_s * cfg.v_s;
    qp.P(ri, ri) += 2.0 * cfg.q2;
    qp.q[di] += cfg.rho;
    qp.lb[vi] = cfg.limits.v_min;
    qp.ub[vi] = cfg.limits.v_max;
    qp.lb[di] = 0.0;
  }

  // 3N equality rows (headway mean, relative-speed mean, speed) and N safety rows.
  qp.A = Eigen::MatrixXd::Zero(4 * N, n);
  qp.l.resize(4 * N);
  qp.u.resize(4 * N);
  Eigen::Index r = 0;
  for (int i = 1; i <= N; ++i) {
    const auto a = L.a(i - 1);
    // p[i] - p[i-1] - dt p_rel[i-1] + dt^2/2 a[i-1] = 0
    double rhs = 0.0;
    qp.A(r, L.p(i)) = 1.0;
    qp.A(r, a) = 0.5 * dt * dt;
    if (i == 1) {
      rhs = in.p0 + dt * in.p_rel0;
    } else {
      qp.A(r, L.p(i - 1)) = -1.0;
      qp.A(r, L.p_rel(i - 1)) = -dt;
    }
    qp.l[r] = qp.u[r] = rhs;
    ++r;
    // p_rel[i] - p_rel[i-1] + dt a[i-1] = 0
    qp.A(r, L.p_rel(i)) = 1.0;
    qp.A(r, a) = dt;
    if (i == 1)
      rhs = in.p_rel0;
    else {
      qp.A(r, L.p_rel(i - 1)) = -1.0;
      rhs = 0.0;
    }
    qp.l[r] = qp.u[r] = rhs;
    ++r;
    // v[i] - v[i-1] - dt a[i-1] = 0
    qp.A(r, L.v(i)) = 1.0;
    qp.A(r, a) = -dt;
    if (i == 1)
      rhs = in.v_now;
    else {
      qp.A(r, L.v(i - 1)) = -1.0;
      rhs = 0.0;
    }
    qp.l[r] = qp.u[r] = rhs;
    ++r;
  }
  for (int i = 1; i <= N; ++i) {
    // p[i] - T_s v[i] + delta[i] >= d_s + margin_i
    const double margin =
        tightening_margin(in.var[static_cast<std::size_t>(i)], cfg.effective_eps(i - 1));
    out.margins.push_back(margin);
    qp.A(r, L.p(i)) = 1.0;
    qp.A(r, L.v(i)) = -cfg.T_s;
    qp.A(r, L.delta(i)) = 1.0;
    qp.l[r] = cfg.d_s + margin;
    qp.u[r] = kInf;
    ++r;
  }
  qp.validate();
  return out;
}

struct MpcSolution {
  std::vector<double> accelerations;  // a_k .. a_{k+N-1}
  std::vector<double> speeds;         // v_{k+1} .. v_{k+N}
  std::vector<double> headway_means;  // p_{k+1} .. p_{k+N}
  std::vector<double> rel_speed_means;
  std::vector<double> slacks;         // delta_1 .. delta_N
  std::vector<double> margins;
  std::vector<double> var;            // predicted headway variances, 0..N
  std::vector<double> var_rel;
  double command = 0.0;               // applied a_k
  QpStatus status = QpStatus::max_iterations;
  bool fallback = false;
  MpcProblem problem;
  QpSolution qp_solution;
};

// Plans from an already-bootstrapped start belief (headway mean/variance and
// relative-speed belief at the planning instant).
inline MpcSolution mpc_step_from(const MpcConfig& cfg, double p0, double var0,
                                 const propagation::RelativeSpeedBelief& rel, double v_now,
                                 double a_prev, const QpSettings& settings = {}) {
  cfg.validate();
  auto vars = propagation::propagate_variances(var0, rel.var_rel0, cfg.dt, cfg.N);

  MpcSolution out;
  out.problem = build_qp(cfg, {p0, rel.p_rel0, vars.var, v_now, a_prev});
  out.margins = out.problem.margins;
  out.var = std::move(vars.var);
  out.var_rel = std::move(vars.var_rel);
  out.qp_solution = solve_qp(out.problem.qp, settings);
  out.status = out.qp_solution.status;

  const MpcLayout L{cfg.N};
  const auto& x = out.qp_solution.x;
  for (int i = 0; i < cfg.N; ++i) out.accelerations.push_back(x[L.a(i)]);
  for (int i = 1; i <= cfg.N; ++i) {
    out.speeds.push_back(x[L.v(i)]);
    out.headway_means.push_back(x[L.p(i)]);
    out.rel_speed_means.push_back(x[L.p_rel(i)]);
    out.slacks.push_back(std::max(0.0, x[L.delta(i)]));
  }
  if (out.status == QpStatus::optimal) {
    out.command = std::clamp(out.accelerations.front(), cfg.limits.a_min, cfg.limits.a_max);
  } else {
    out.fallback = true;
    out.command = std::max(cfg.limits.a_min, std::min(a_prev, cfg.limits.a_max) -
                                                 cfg.fallback_jerk * cfg.dt);
  }
  return out;
}

inline MpcSolution mpc_step(const MpcConfig& cfg, const propagation::BeliefState& belief,
                            double v_now, double a_prev, const QpSettings& settings = {},
                            propagation::VarianceMode mode = propagation::VarianceMode::strict) {
  detail::require(std::fabs(belief.dt - cfg.dt) <= 1e-12 * cfg.dt,
                  "mpc_step: belief spacing must equal MpcConfig.dt");
  const auto rel = propagation::bootstrap_relative_speed(belief, mode);
  return mpc_step_from(cfg, belief.p_now, belief.var_now, rel, v_now, a_prev, settings);
}

}  // namespace eacc::smpc
