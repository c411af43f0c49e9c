#include "zonempc/stability.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

constexpr int kMaxDoublings = 60;
constexpr int kKronLimit = 60;  // largest n for the vectorized cross-check

void require_square(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F) {
  if (A.rows() != A.cols() || F.rows() != A.rows() || F.cols() != A.cols())
    throw InvalidParameterError("Lyapunov equation needs square A and F of equal size");
  if (!A.allFinite() || !F.allFinite()) throw InvalidParameterError("Lyapunov data must be finite");
}

void require_spd(const Eigen::MatrixXd& F) {
  if ((F - F.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, F.cwiseAbs().maxCoeff()))
    throw InvalidParameterError("F must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(F);
  if (llt.info() != Eigen::Success) throw InvalidParameterError("F must be positive definite");
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

double lyapunov_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& P, const Eigen::MatrixXd& F) {
  return (A.transpose() * P * A - P + F).norm();
}

Eigen::MatrixXd solve_discrete_lyapunov_kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F) {
  require_square(A, F);
  const auto n = A.rows();
  const Eigen::MatrixXd At = A.transpose();
  const Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n * n, n * n) - Eigen::kroneckerProduct(At, At).eval();
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(F.data(), n * n);
  const Eigen::VectorXd p = K.partialPivLu().solve(f);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F) {
  require_square(A, F);
  require_spd(F);
  const double rho = spectral_radius(A);
  if (!(rho < 1.0))
    throw UnstableMatrixError(rho, "spectral radius " + std::to_string(rho) + " is not below 1");

  // P_{j+1} = P_j + A_j' P_j A_j, A_{j+1} = A_j^2 sums 2^j terms per doubling.
  Eigen::MatrixXd P = F;
  Eigen::MatrixXd Ak = A;
  for (int j = 0; j < kMaxDoublings; ++j) {
    const Eigen::MatrixXd inc = Ak.transpose() * P * Ak;
    P += inc;
    Ak = (Ak * Ak).eval();
    if (inc.norm() <= 1e-16 * std::max(1.0, P.norm()) || lyapunov_residual(A, P, F) < 1e-12) break;
  }
  P = 0.5 * (P + P.transpose());

  if (A.rows() <= kKronLimit) {
    const Eigen::MatrixXd Pk = solve_discrete_lyapunov_kron(A, F);
    const double diff = (P - Pk).norm();
    if (diff > 1e-8 * std::max(1.0, P.norm()))
      throw SolverFailure(0, "series and vectorized Lyapunov solutions differ by " + std::to_string(diff));
    if (lyapunov_residual(A, Pk, F) < lyapunov_residual(A, P, F)) P = Pk;
  }
  return P;
}

double stability_bound(const Eigen::MatrixXd& P, const Eigen::MatrixXd& F) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(P, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(F, Eigen::EigenvaluesOnly);
  return std::sqrt(ep.eigenvalues().maxCoeff() / ef.eigenvalues().minCoeff());
}

Eigen::MatrixXd block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    if (b.rows() != b.cols()) throw InvalidParameterError("diagonal blocks must be square");
    n += b.rows();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index o = 0;
  for (const auto& b : blocks) {
    out.block(o, o, b.rows(), b.cols()) = b;
    o += b.rows();
  }
  return out;
}

LyapunovCertificate certify(const Eigen::MatrixXd& A, const Eigen::MatrixXd& F) {
  LyapunovCertificate c;
  c.A = A;
  c.F = F;
  c.spectral_radius = spectral_radius(A);
  c.P = solve_discrete_lyapunov(A, F);
  c.residual = lyapunov_residual(A, c.P, F);
  c.bound = stability_bound(c.P, F);
  return c;
}

LyapunovCertificate certify(const Eigen::MatrixXd& A) {
  return certify(A, Eigen::MatrixXd::Identity(A.rows(), A.cols()));
}

Eigen::MatrixXd closed_loop_matrix(const StateSpaceModel& ss, Controller& controller) {
  if (!ss.is_discrete()) throw InvalidConfigError("closed loop needs a discrete model");
  const int n = ss.states();
  const int m = ss.inputs();
  if (controller.inputs() != m) throw InvalidConfigError("controller and model differ in input count");
  const int P = controller.horizon();
  Eigen::MatrixXd Acl(n + m, n + m);
  for (int j = 0; j < n + m; ++j) {
    Eigen::VectorXd s = Eigen::VectorXd::Unit(n + m, j);
    const Eigen::VectorXd x = s.head(n);
    StepContext ctx;
    ctx.y = ss.C * x;
    ctx.u_prev = s.tail(m);
    ctx.reference = Eigen::MatrixXd::Zero(P + 1, ss.outputs());
    ctx.forecast = Eigen::MatrixXd::Zero(P, std::max(1, ss.disturbances()));
    controller.reset();
    const Eigen::VectorXd u = controller.step(ctx).u;
    Acl.col(j).head(n) = ss.A * x + ss.B * u;
    Acl.col(j).tail(m) = u;
  }
  controller.reset();
  return Acl;
}

TrajectoryBoundReport verify_trajectory_bound(const Eigen::MatrixXd& trajectory, const Eigen::VectorXd& equilibrium,
                                              const LyapunovCertificate& cert) {
  TrajectoryBoundReport r;
  r.bound = cert.bound;
  if (trajectory.rows() == 0) return r;
  const double n0 = (trajectory.row(0).transpose() - equilibrium).norm();
  for (Eigen::Index k = 0; k < trajectory.rows(); ++k) {
    const double nk = (trajectory.row(k).transpose() - equilibrium).norm();
    double ratio;
    if (n0 == 0.0) {
      ratio = nk == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      ratio = nk / n0;
    }
    r.max_ratio = std::max(r.max_ratio, ratio);
    r.final_ratio = ratio;
    if (ratio > cert.bound * (1.0 + 1e-12)) r.violations.push_back(static_cast<int>(k));
  }
  r.satisfied = r.violations.empty();
  return r;
}

TrajectoryBoundReport verify_trajectory_bound(const SimulationRecord& rec, const LyapunovCertificate& cert) {
  const int N = rec.steps();
  const int n = static_cast<int>(rec.x.cols());
  const int m = static_cast<int>(rec.u.cols());
  if (N == 0) throw InvalidRecordError("record has no samples");
  Eigen::MatrixXd s(N + 1, n + m);
  for (int k = 0; k <= N; ++k) {
    s.row(k).head(n) = rec.x.row(k);
    s.row(k).tail(m) = k == 0 ? Eigen::RowVectorXd::Zero(m) : Eigen::RowVectorXd(rec.u.row(k - 1));
  }
  if (cert.A.rows() != n + m) throw InvalidConfigError("certificate does not match the augmented state size");
  return verify_trajectory_bound(s, Eigen::VectorXd::Zero(n + m), cert);
}

double lyapunov_decrease_error(const LyapunovCertificate& cert, const Eigen::VectorXd& s0, int steps) {
  Eigen::VectorXd s = s0;
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd next = cert.A * s;
    const double dv = next.dot(cert.P * next) - s.dot(cert.P * s);
    worst = std::max(worst, std::abs(dv + s.dot(cert.F * s)));
    s = next;
  }
  return worst;
}

MatrixBundle certificate_bundle(const LyapunovCertificate& cert) {
  MatrixBundle b;
  b.add("A", cert.A);
  b.add("P", cert.P);
  b.add("F", cert.F);
  b.add_scalar("bound", cert.bound);
  b.add_scalar("residual", cert.residual);
  b.add_scalar("spectral_radius", cert.spectral_radius);
  return b;
}

LyapunovCertificate certificate_from_bundle(const MatrixBundle& bundle) {
  LyapunovCertificate c;
  c.A = bundle.matrix("A");
  c.P = bundle.matrix("P");
  c.F = bundle.matrix("F");
  c.bound = bundle.has_scalar("bound") ? bundle.scalar("bound") : stability_bound(c.P, c.F);
  c.residual = bundle.has_scalar("residual") ? bundle.scalar("residual") : lyapunov_residual(c.A, c.P, c.F);
  c.spectral_radius = bundle.has_scalar("spectral_radius") ? bundle.scalar("spectral_radius") : spectral_radius(c.A);
  return c;
}

CertificateCheck check_certificate(const MatrixBundle& bundle) {
  const Eigen::MatrixXd& A = bundle.matrix("A");
  const Eigen::MatrixXd& P = bundle.matrix("P");
  const Eigen::MatrixXd& F = bundle.matrix("F");
  require_square(A, F);
  if (P.rows() != A.rows() || P.cols() != A.cols()) throw InvalidParameterError("P does not match A");
  CertificateCheck c;
  c.residual = lyapunov_residual(A, P, F);
  c.spectral_radius = spectral_radius(A);
  c.passed = c.residual < kCertificateTolerance && c.spectral_radius < 1.0;
  return c;
}

}  // namespace zonempc
