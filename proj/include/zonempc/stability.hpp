#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "zonempc/controller.hpp"
#include "zonempc/linear_model.hpp"
#include "zonempc/matrix_io.hpp"
#include "zonempc/simulation.hpp"

namespace zonempc {

struct LyapunovCertificate {
  Eigen::MatrixXd A;  // certified closed-loop matrix
  Eigen::MatrixXd P;
  Eigen::MatrixXd F;
  double bound = 0.0;
  double residual = 0.0;         // Frobenius norm of A'PA - P + F
  double spectral_radius = 0.0;  // of A
};

double spectral_radius(const Eigen::MatrixXd& A);

// Frobenius norm of A'PA - P + F.
double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P, const Eigen::MatrixXd& F);

// Series sum_k (A')^k F A^k by doubling; checked against the vectorized
// solve (I - A' kron A') vec P = vec F for moderate sizes.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F);
Eigen::MatrixXd solve_discrete_lyapunov_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F);

// sqrt(lambda_max(P) / lambda_min(F)).
double stability_bound(const Eigen::MatrixXd& P, const Eigen::MatrixXd& F);

// Block-diagonal matrix from per-subsystem blocks.
Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks);

LyapunovCertificate certify(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F);
LyapunovCertificate certify(const Eigen::MatrixXd& A);  // F = I

// Closed loop on the augmented state s = (x, u_prev) of the discrete model,
// obtained by applying the controller to each basis vector with zero
// reference and zero disturbance. The controller is reset before every probe
// and must be configured without input bounds.
Eigen::MatrixXd closed_loop_matrix(const StateSpaceModel& ss, Controller& controller);

struct TrajectoryBoundReport {
  double bound = 0.0;
  double max_ratio = 0.0;      // max_k |s(k) - s_eq| / |s(0) - s_eq|
  double final_ratio = 0.0;    // last sample
  std::vector<int> violations; // samples with ratio > bound
  bool satisfied = true;
};

// Checks |s(k) - s_eq| <= bound |s(0) - s_eq| along a trajectory (rows are samples).
TrajectoryBoundReport verify_trajectory_bound(const Eigen::MatrixXd& trajectory, const Eigen::VectorXd& equilibrium,
                                              const LyapunovCertificate& cert);
// Uses the augmented state (x(k), u(k-1)) of a regulation record with u(-1) = 0.
TrajectoryBoundReport verify_trajectory_bound(const SimulationRecord& rec, const LyapunovCertificate& cert);

// max_k |V(s(k+1)) - V(s(k)) + s(k)' F s(k)| along s(k+1) = A s(k).
double lyapunov_decrease_error(const LyapunovCertificate& cert, const Eigen::VectorXd& s0, int steps);

MatrixBundle certificate_bundle(const LyapunovCertificate& cert);
LyapunovCertificate certificate_from_bundle(const MatrixBundle& bundle);

struct CertificateCheck {
  double residual = 0.0;
  double spectral_radius = 0.0;
  bool passed = false;
};

inline constexpr double kCertificateTolerance = 1e-8;

// Recomputes the residual and spectral radius of a dumped certificate.
CertificateCheck check_certificate(const MatrixBundle& bundle);

}  // namespace zonempc
