#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/QR>

#include "eacc/smpc/qp.hpp"

namespace eacc::smpc {

struct QpSettings {
  double tol = 1e-8;
  int max_iter = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int polish_interval = 25;
  int polish_rounds = 30;
  int rho_update_interval = 50;
  double infeasibility_tol = 1e-7;
};

namespace qp_detail {

// Constraint rows and variable bounds stacked as C x in [lo, hi].
struct Stacked {
  Eigen::MatrixXd C;
  Eigen::VectorXd lo, hi;
};

inline Stacked stack(const QpProblem& qp) {
  const auto n = qp.dimension(), m = qp.rows();
  Stacked s;
  s.C.resize(m + n, n);
  if (m > 0) s.C.topRows(m) = qp.A;
  s.C.bottomRows(n).setIdentity();
  s.lo.resize(m + n);
  s.hi.resize(m + n);
  s.lo << qp.l, qp.lb;
  s.hi << qp.u, qp.ub;
  return s;
}

enum class Side : signed char { none, lower, upper, equal };

struct ActiveSetResult {
  bool ok = false;
  Eigen::VectorXd x, y;
};

// Equality-constrained QP on the active rows, with an active-set correction
// loop: add the most violated row, drop the row with the most wrong-signed
// multiplier, repeat. Starting from the ADMM guess this usually terminates in
// zero or one correction.
inline ActiveSetResult active_set_polish(const QpProblem& qp, const Stacked& s,
                                         std::vector<Side> sides, const QpSettings& set) {
  const auto n = qp.dimension();
  const auto rows = s.C.rows();
  ActiveSetResult res;
  for (int round = 0; round < set.polish_rounds; ++round) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < rows; ++i)
      if (sides[static_cast<std::size_t>(i)] != Side::none) act.push_back(i);
    const auto k = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto i = act[static_cast<std::size_t>(j)];
      kkt.block(n + j, 0, 1, n) = s.C.row(i);
      kkt.block(0, n + j, n, 1) = s.C.row(i).transpose();
      rhs[n + j] = sides[static_cast<std::size_t>(i)] == Side::upper ? s.hi[i] : s.lo[i];
    }
    Eigen::VectorXd sol;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.isInvertible()) {
      sol = lu.solve(rhs);
    } else {
      sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    }
    // One step of iterative refinement.
    sol += lu.isInvertible() ? Eigen::VectorXd(lu.solve(rhs - kkt * sol))
                             : Eigen::VectorXd(kkt.completeOrthogonalDecomposition().solve(rhs - kkt * sol));
    if (!sol.allFinite()) return res;
    if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > set.tol) return res;

    Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
    for (Eigen::Index j = 0; j < k; ++j) y[act[static_cast<std::size_t>(j)]] = sol[n + j];

    const Eigen::VectorXd z = s.C * x;
    Eigen::Index worst_primal = -1, worst_dual = -1;
    double primal_gap = set.tol, dual_gap = set.tol;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto side = sides[static_cast<std::size_t>(i)];
      if (side == Side::none) {
        const double v = std::max(s.lo[i] - z[i], z[i] - s.hi[i]);
        if (v > primal_gap) {
          primal_gap = v;
          worst_primal = i;
        }
      } else if (side == Side::lower && y[i] > dual_gap) {
        dual_gap = y[i];
        worst_dual = i;
      } else if (side == Side::upper && -y[i] > dual_gap) {
        dual_gap = -y[i];
        worst_dual = i;
      }
    }
    if (worst_primal < 0 && worst_dual < 0) {
      res.ok = true;
      res.x = std::move(x);
      res.y = std::move(y);
      return res;
    }
    if (worst_dual >= 0) {
      sides[static_cast<std::size_t>(worst_dual)] = Side::none;
    } else {
      sides[static_cast<std::size_t>(worst_primal)] =
          z[worst_primal] < s.lo[worst_primal] ? Side::lower : Side::upper;
    }
  }
  return res;
}

inline std::vector<Side> guess_active(const Stacked& s, const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& y) {
  std::vector<Side> sides(static_cast<std::size_t>(s.C.rows()), Side::none);
  for (Eigen::Index i = 0; i < s.C.rows(); ++i) {
    auto& side = sides[static_cast<std::size_t>(i)];
    if (s.lo[i] == s.hi[i])
      side = Side::equal;
    else if (std::isfinite(s.lo[i]) && z[i] - s.lo[i] < -y[i])
      side = Side::lower;
    else if (std::isfinite(s.hi[i]) && s.hi[i] - z[i] < y[i])
      side = Side::upper;
  }
  return sides;
}

}  // namespace qp_detail

// Convex QP by ADMM operator splitting (OSQP-style iteration with
// over-relaxation and residual-balanced penalty updates). Every
// `polish_interval` iterations the active set read off the iterate is solved
// exactly; the result is returned as optimal once its KKT residuals are
// within tol.
inline QpSolution solve_qp(const QpProblem& qp, const QpSettings& set = {}) {
  using namespace qp_detail;
  qp.validate();
  const auto n = qp.dimension();
  const auto m = qp.rows();
  const auto s = stack(qp);
  const auto rows = s.C.rows();

  auto finish = [&](QpSolution& sol, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    sol.x = x;
    sol.y_rows = y.head(m);
    sol.y_bounds = y.tail(n);
    sol.objective = qp.objective(x);
    sol.kkt = kkt_residuals(qp, x, sol.y_rows, sol.y_bounds);
  };

  Eigen::VectorXd rho_vec(rows);
  double rho = set.rho;
  auto fill_rho = [&] {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (s.lo[i] == s.hi[i])
        rho_vec[i] = 1e3 * rho;
      else if (!std::isfinite(s.lo[i]) && !std::isfinite(s.hi[i]))
        rho_vec[i] = 1e-6;
      else
        rho_vec[i] = rho;
    }
  };
  fill_rho();
  auto factor = [&] {
    Eigen::MatrixXd K = qp.P;
    K.diagonal().array() += set.sigma;
    K.noalias() += s.C.transpose() * rho_vec.asDiagonal() * s.C;
    return Eigen::LDLT<Eigen::MatrixXd>(K);
  };
  auto ldlt = factor();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = s.C * x;
  z = z.cwiseMax(s.lo).cwiseMin(s.hi);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd y_check = y;

  QpSolution best;
  best.status = QpStatus::max_iterations;
  double best_score = kInf;

  for (int it = 1; it <= set.max_iter; ++it) {
    const Eigen::VectorXd rhs =
        set.sigma * x - qp.q + s.C.transpose() * (rho_vec.cwiseProduct(z) - y);
    const Eigen::VectorXd x_tilde = ldlt.solve(rhs);
    const Eigen::VectorXd z_tilde = s.C * x_tilde;
    x = set.alpha * x_tilde + (1.0 - set.alpha) * x;
    const Eigen::VectorXd z_relax = set.alpha * z_tilde + (1.0 - set.alpha) * z;
    const Eigen::VectorXd z_new =
        (z_relax + y.cwiseQuotient(rho_vec)).cwiseMax(s.lo).cwiseMin(s.hi);
    y += rho_vec.cwiseProduct(z_relax - z_new);
    z = z_new;

    if (it % set.rho_update_interval == 0) {
      const Eigen::VectorXd cx = s.C * x;
      const Eigen::VectorXd px = qp.P * x;
      const Eigen::VectorXd cty = s.C.transpose() * y;
      const double r_prim = (cx - z).cwiseAbs().maxCoeff();
      const double r_dual = (px + qp.q + cty).cwiseAbs().maxCoeff();
      const double prim_scale = std::max({cx.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff(), 1e-12});
      const double dual_scale = std::max(
          {px.cwiseAbs().maxCoeff(), cty.cwiseAbs().maxCoeff(), qp.q.cwiseAbs().maxCoeff(), 1e-12});
      const double ratio = std::sqrt((r_prim / prim_scale) / std::max(r_dual / dual_scale, 1e-30));
      if (std::isfinite(ratio) && (ratio > 5.0 || ratio < 0.2)) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        fill_rho();
        ldlt = factor();
      }
    }

    if (it % set.polish_interval == 0 || it == set.max_iter) {
      auto polished = active_set_polish(qp, s, guess_active(s, z, y), set);
      if (polished.ok) {
        QpSolution sol;
        finish(sol, polished.x, polished.y);
        sol.iterations = it;
        sol.polished = true;
        if (sol.kkt.max() <= set.tol) {
          sol.status = QpStatus::optimal;
          return sol;
        }
        if (sol.kkt.max() < best_score) {
          best_score = sol.kkt.max();
          best = sol;
          best.status = QpStatus::max_iterations;
        }
      }

      // Primal infeasibility certificate on the change of the multipliers.
      const Eigen::VectorXd dy = y - y_check;
      y_check = y;
      const double dy_norm = dy.cwiseAbs().maxCoeff();
      if (dy_norm > 1e-12) {
        double support = 0.0;
        bool bounded = true;
        for (Eigen::Index i = 0; i < rows; ++i) {
          if (dy[i] > 0.0) {
            if (!std::isfinite(s.hi[i])) bounded = false;
            else support += s.hi[i] * dy[i];
          } else if (dy[i] < 0.0) {
            if (!std::isfinite(s.lo[i])) bounded = false;
            else support += s.lo[i] * dy[i];
          }
        }
        const double cty = (s.C.transpose() * dy).cwiseAbs().maxCoeff();
        if (bounded && cty <= set.infeasibility_tol * dy_norm &&
            support < -set.infeasibility_tol * dy_norm) {
          QpSolution sol;
          finish(sol, x, y);
          sol.iterations = it;
          sol.status = QpStatus::infeasible;
          return sol;
        }
      }
    }
  }

  if (best_score < kInf) {
    best.iterations = set.max_iter;
    return best;
  }
  QpSolution sol;
  finish(sol, x, y);
  sol.iterations = set.max_iter;
  sol.status = QpStatus::max_iterations;
  return sol;
}

}  // namespace eacc::smpc
