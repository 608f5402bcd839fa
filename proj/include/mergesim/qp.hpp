#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace mergesim {

enum class QpStatus : std::uint8_t { Optimal, Infeasible };

struct QpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  int iterations = 0;
};

/// Dense strictly convex QP
///
///   min  1/2 x' G x + g' x    s.t.  C x + c >= 0
///
/// solved with the Goldfarb-Idnani dual active-set method. G must be
/// symmetric positive definite. Each row of C is one inequality.
QpSolution solve_dense_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                          const Eigen::MatrixXd& C, const Eigen::VectorXd& c,
                          double feas_tol = 1e-9);

}  // namespace mergesim
