#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "eacc/errors.hpp"
#include "eacc/text.hpp"

namespace eacc::smpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// minimize 1/2 x'Px + q'x + constant
// s.t.     l <= A x <= u        (rows with l == u are equalities)
//          lb <= x <= ub
struct QpProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd l, u;
  Eigen::VectorXd lb, ub;
  double constant = 0.0;
  std::vector<std::string> names;  // one per decision coordinate

  Eigen::Index dimension() const { return q.size(); }
  Eigen::Index rows() const { return A.rows(); }

  static QpProblem unconstrained(Eigen::MatrixXd p, Eigen::VectorXd q) {
    QpProblem qp;
    const auto n = q.size();
    qp.P = std::move(p);
    qp.q = std::move(q);
    qp.A.resize(0, n);
    qp.l.resize(0);
    qp.u.resize(0);
    qp.lb = Eigen::VectorXd::Constant(n, -kInf);
    qp.ub = Eigen::VectorXd::Constant(n, kInf);
    for (Eigen::Index i = 0; i < n; ++i) qp.names.push_back("x" + std::to_string(i));
    return qp;
  }

  Eigen::Index index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<Eigen::Index>(i);
    throw DomainError("QpProblem: no variable named " + name);
  }

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P * x) + q.dot(x) + constant;
  }

  void validate() const {
    const auto n = dimension();
    detail::require(n > 0, "QpProblem: empty decision vector");
    detail::require(P.rows() == n && P.cols() == n, "QpProblem: P must be n x n");
    detail::require(A.cols() == n, "QpProblem: A must have n columns");
    detail::require(l.size() == A.rows() && u.size() == A.rows(), "QpProblem: l/u size != rows");
    detail::require(lb.size() == n && ub.size() == n, "QpProblem: lb/ub size != n");
    detail::require(P.allFinite() && q.allFinite() && A.allFinite(), "QpProblem: non-finite data");
    detail::require((P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + P.cwiseAbs().maxCoeff()),
                    "QpProblem: P is not symmetric");
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      detail::require(!std::isnan(l[i]) && !std::isnan(u[i]) && l[i] <= u[i],
                      "QpProblem: row bounds need l <= u");
    for (Eigen::Index i = 0; i < n; ++i)
      detail::require(!std::isnan(lb[i]) && !std::isnan(ub[i]) && lb[i] <= ub[i],
                      "QpProblem: variable bounds need lb <= ub");
    detail::require(static_cast<Eigen::Index>(names.size()) == n,
                    "QpProblem: index map must name every coordinate");
    std::unordered_set<std::string> seen(names.begin(), names.end());
    detail::require(seen.size() == names.size(), "QpProblem: duplicate variable names");
  }
};

enum class QpStatus { optimal, max_iterations, infeasible };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iterations: return "max-iterations";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct KktResiduals {
  double stationarity = kInf;
  double primal = kInf;
  double complementarity = kInf;

  double max() const { return std::max({stationarity, primal, complementarity}); }
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_rows;    // multipliers of l <= Ax <= u (negative: lower bound active)
  Eigen::VectorXd y_bounds;  // multipliers of lb <= x <= ub
  double objective = kInf;
  KktResiduals kkt;
  QpStatus status = QpStatus::max_iterations;
  int iterations = 0;
  bool polished = false;
};

// Residuals of the KKT system in the sign convention above.
inline KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y_rows, const Eigen::VectorXd& y_bounds) {
  KktResiduals r;
  Eigen::VectorXd grad = qp.P * x + qp.q + y_bounds;
  if (qp.rows() > 0) grad += qp.A.transpose() * y_rows;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;

  double primal = 0.0, comp = 0.0;
  auto row = [&](double z, double lo, double hi, double y) {
    primal = std::max({primal, lo - z, z - hi});
    if (y < 0.0) comp = std::max(comp, std::isfinite(lo) ? -y * std::fabs(z - lo) : -y);
    if (y > 0.0) comp = std::max(comp, std::isfinite(hi) ? y * std::fabs(hi - z) : y);
  };
  if (qp.rows() > 0) {
    const Eigen::VectorXd z = qp.A * x;
    for (Eigen::Index i = 0; i < z.size(); ++i) row(z[i], qp.l[i], qp.u[i], y_rows[i]);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) row(x[i], qp.lb[i], qp.ub[i], y_bounds[i]);
  r.primal = primal;
  r.complementarity = comp;
  return r;
}

// Debug dump: matrices in coordinate form plus the variable map and, when
// given, the solution.
inline void write_qp_dump(std::ostream& os, const QpProblem& qp, const QpSolution* sol = nullptr) {
  using text::format_double;
  os << "# eacc qp dump\n";
  os << "dimension " << qp.dimension() << "\nrows " << qp.rows() << '\n';
  os << "constant " << format_double(qp.constant) << '\n';
  os << "variables\n";
  for (std::size_t i = 0; i < qp.names.size(); ++i)
    os << i << ' ' << qp.names[i] << ' ' << format_double(qp.lb[static_cast<Eigen::Index>(i)])
       << ' ' << format_double(qp.ub[static_cast<Eigen::Index>(i)]) << '\n';
  os << "P\n";
  for (Eigen::Index i = 0; i < qp.P.rows(); ++i)
    for (Eigen::Index j = 0; j < qp.P.cols(); ++j)
      if (qp.P(i, j) != 0.0) os << i << ' ' << j << ' ' << format_double(qp.P(i, j)) << '\n';
  os << "q\n";
  for (Eigen::Index i = 0; i < qp.q.size(); ++i)
    if (qp.q[i] != 0.0) os << i << ' ' << format_double(qp.q[i]) << '\n';
  os << "A\n";
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i)
    for (Eigen::Index j = 0; j < qp.A.cols(); ++j)
      if (qp.A(i, j) != 0.0) os << i << ' ' << j << ' ' << format_double(qp.A(i, j)) << '\n';
  os << "bounds\n";
  for (Eigen::Index i = 0; i < qp.rows(); ++i)
    os << i << ' ' << format_double(qp.l[i]) << ' ' << format_double(qp.u[i]) << '\n';
  if (sol) {
    os << "status " << to_string(sol->status) << "\niterations " << sol->iterations
       << "\nobjective " << format_double(sol->objective) << "\nkkt "
       << format_double(sol->kkt.stationarity) << ' ' << format_double(sol->kkt.primal) << ' '
       << format_double(sol->kkt.complementarity) << "\nsolution\n";
    for (Eigen::Index i = 0; i < sol->x.size(); ++i)
      os << qp.names[static_cast<std::size_t>(i)] << ' ' << format_double(sol->x[i]) << '\n';
  }
}

}  // namespace eacc::smpc
