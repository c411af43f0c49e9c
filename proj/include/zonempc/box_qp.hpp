#pragma once

#include <Eigen/Dense>

namespace zonempc {

// minimize 0.5 x'Hx + g'x  subject to  lower <= x <= upper, H positive definite.
struct BoxQpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;  // ||x - clip(x - grad)||_inf
  int iterations = 0;
  bool converged = false;
};

struct BoxQpOptions {
  double tolerance = 1e-8;
  int max_newton_iterations = 100;
  int max_coordinate_sweeps = 10000;
};

BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXd& x0, const BoxQpOptions& options = {});

double box_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                        const Eigen::VectorXd& x);

}  // namespace zonempc
