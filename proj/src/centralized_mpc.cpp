#include "zonempc/centralized_mpc.hpp"

#include <chrono>
#include <vector>

#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& blk, int count) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(blk.rows() * count, blk.cols() * count);
  for (int i = 0; i < count; ++i) out.block(i * blk.rows(), i * blk.cols(), blk.rows(), blk.cols()) = blk;
  return out;
}

}  // namespace

MpcConfig MpcConfig::defaults(const StateSpaceModel& ss, int P, int M, double q, double r) {
  MpcConfig cfg;
  cfg.P = P;
  cfg.M = M;
  cfg.Q = q * Eigen::MatrixXd::Identity(ss.outputs(), ss.outputs());
  cfg.R = r * Eigen::MatrixXd::Identity(ss.inputs(), ss.inputs());
  return cfg;
}

void MpcConfig::validate(const StateSpaceModel& ss) const {
  if (P < 1) throw InvalidConfigError("prediction horizon must be at least 1");
  if (M < 1 || M > P) throw InvalidConfigError("control horizon must satisfy 1 <= M <= P");
  if (Q.rows() != ss.outputs() || Q.cols() != ss.outputs())
    throw InvalidConfigError("Q must be p x p");
  if (R.rows() != ss.inputs() || R.cols() != ss.inputs()) throw InvalidConfigError("R must be m x m");
  if (!Q.isApprox(Q.transpose()) || !R.isApprox(R.transpose()))
    throw InvalidConfigError("weights must be symmetric");
  if (bounds.enabled && !(bounds.lower < bounds.upper)) throw InvalidConfigError("input bounds are empty");
  if (L.size() != 0 && (L.rows() != ss.states() || L.cols() != ss.outputs()))
    throw InvalidConfigError("observer gain must be n x p");
}

PredictionMatrices build_prediction_matrices(const StateSpaceModel& ss, int P, int M) {
  if (M > P) throw InvalidConfigError("control horizon exceeds prediction horizon");
  if (M < 1 || P < 1) throw InvalidConfigError("horizons must be positive");
  ss.validate();
  const int n = ss.states(), m = ss.inputs(), q = ss.disturbances(), p = ss.outputs();

  // powers[k] = A^k, k = 0..P; partial[k] = sum_{i=1}^{k} A^{i-1} B.
  std::vector<Eigen::MatrixXd> powers(P + 1);
  powers[0] = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= P; ++k) powers[k] = ss.A * powers[k - 1];
  std::vector<Eigen::MatrixXd> partial(P + 1);
  partial[0] = Eigen::MatrixXd::Zero(n, m);
  for (int k = 1; k <= P; ++k) partial[k] = partial[k - 1] + powers[k - 1] * ss.B;

  PredictionMatrices pm;
  pm.P = P;
  pm.M = M;
  pm.G = Eigen::MatrixXd::Zero(P * n, M * m);
  pm.F.resize(P * n, m);
  pm.H.resize(P * n, n);
  pm.V = Eigen::MatrixXd::Zero(P * n, P * q);
  pm.T = block_diag(ss.C, P);
  (void)p;
  for (int r = 1; r <= P; ++r) {
    pm.H.block((r - 1) * n, 0, n, n) = powers[r];
    pm.F.block((r - 1) * n, 0, n, m) = partial[r];
    for (int c = 1; c <= std::min(r, M); ++c)
      pm.G.block((r - 1) * n, (c - 1) * m, n, m) = partial[r - c + 1];
    for (int c = 1; c <= r; ++c) pm.V.block((r - 1) * n, (c - 1) * q, n, q) = powers[r - c] * ss.E;
  }
  return pm;
}

Eigen::VectorXd observer_update(const StateSpaceModel& ss, const Eigen::VectorXd& x_prev,
                                const Eigen::VectorXd& u_prev, const Eigen::VectorXd& d_prev,
                                const Eigen::VectorXd& y, const Eigen::MatrixXd& L) {
  const Eigen::VectorXd x_pred = ss.A * x_prev + ss.B * u_prev + ss.E * d_prev;
  return x_pred + L * (y - ss.C * x_pred);
}

Eigen::VectorXd stack_rows(const Eigen::MatrixXd& m, int first, int count) {
  if (first + count > m.rows()) throw InvalidConfigError("trajectory shorter than the horizon");
  Eigen::VectorXd v(count * m.cols());
  for (int r = 0; r < count; ++r) v.segment(r * m.cols(), m.cols()) = m.row(first + r).transpose();
  return v;
}

CentralizedQp::CentralizedQp(const PredictionMatrices& pm, const MpcConfig& cfg, int inputs)
    : pm_(pm), cfg_(cfg), m_(inputs) {
  Qbar_ = block_diag(cfg.Q, pm.P);
  Rbar_ = block_diag(cfg.R, pm.M);
  TG_ = pm.T * pm.G;
  Phi_ = TG_.transpose() * Qbar_;
  Hd_ = Phi_ * TG_ + Rbar_;
  Hd_ = 0.5 * (Hd_ + Hd_.transpose());
  llt_.compute(Hd_);
  if (llt_.info() != Eigen::Success || !(llt_.matrixLLT().diagonal().minCoeff() > 1e-12 *
                                          std::max(1.0, Hd_.diagonal().maxCoeff())))
    throw IllPosedWeightsError("centralized Hessian G'T'QTG + R is singular");
  const int mm = pm.M * inputs;
  Diff_ = Eigen::MatrixXd::Identity(mm, mm);
  for (int c = 1; c < pm.M; ++c)
    Diff_.block(c * inputs, (c - 1) * inputs, inputs, inputs) = -Eigen::MatrixXd::Identity(inputs, inputs);
  Lead_ = Eigen::MatrixXd::Zero(mm, inputs);
  Lead_.topRows(inputs).setIdentity();
  Hu_ = Diff_.transpose() * Hd_ * Diff_;
}

Eigen::VectorXd CentralizedQp::free_response(const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                                             const Eigen::VectorXd& W) const {
  return pm_.T * (pm_.H * x + pm_.F * u_prev + pm_.V * W);
}

CentralizedSolution CentralizedQp::solve(const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                                         const Eigen::VectorXd& W, const Eigen::VectorXd& Yr) const {
  for (const auto* v : {&x, &u_prev, &W, &Yr})
    if (!v->allFinite()) throw InvalidParameterError("non-finite input to the centralized solver");
  const Eigen::VectorXd f = Phi_ * (Yr - free_response(x, u_prev, W));
  CentralizedSolution sol;
  sol.dU = llt_.solve(f);
  const int mm = pm_.M * m_;
  sol.U.resize(mm);
  Eigen::VectorXd acc = u_prev;
  for (int c = 0; c < pm_.M; ++c) {
    acc += sol.dU.segment(c * m_, m_);
    sol.U.segment(c * m_, m_) = acc;
  }
  if (cfg_.bounds.enabled) {
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(mm, cfg_.bounds.lower);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(mm, cfg_.bounds.upper);
    const bool inside = (sol.U.array() >= lo.array()).all() && (sol.U.array() <= hi.array()).all();
    if (!inside) {
      sol.bounds_active = true;
      const Eigen::VectorXd g = -Diff_.transpose() * (f + Hd_ * Lead_ * u_prev);
      BoxQpResult qp = solve_box_qp(Hu_, g, lo, hi, sol.U);
      if (!qp.converged)
        throw Error("box-constrained solve did not reach KKT tolerance (residual " +
                    std::to_string(qp.kkt_residual) + ")");
      sol.U = qp.x;
      sol.kkt_residual = qp.kkt_residual;
      sol.dU = Diff_ * sol.U - Lead_ * u_prev;
    }
  }
  sol.u = sol.U.head(m_);
  return sol;
}

double CentralizedQp::cost(const Eigen::VectorXd& dU, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u_prev, const Eigen::VectorXd& W,
                           const Eigen::VectorXd& Yr) const {
  const Eigen::VectorXd e = TG_ * dU + free_response(x, u_prev, W) - Yr;
  return e.dot(Qbar_ * e) + dU.dot(Rbar_ * dU);
}

Eigen::VectorXd CentralizedQp::gradient(const Eigen::VectorXd& dU, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u_prev, const Eigen::VectorXd& W,
                                        const Eigen::VectorXd& Yr) const {
  const Eigen::VectorXd e = TG_ * dU + free_response(x, u_prev, W) - Yr;
  return 2.0 * (Phi_ * e + Rbar_ * dU);
}

CentralizedSolution solve_centralized_step(const PredictionMatrices& pm, const MpcConfig& cfg,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                                           const Eigen::VectorXd& W, const Eigen::VectorXd& Yr) {
  if (pm.M < 1 || pm.M > pm.P) throw InvalidConfigError("invalid horizons");
  const int m = static_cast<int>(pm.G.cols()) / pm.M;
  return CentralizedQp(pm, cfg, m).solve(x, u_prev, W, Yr);
}

CentralizedMpc::CentralizedMpc(const StateSpaceModel& ss, const MpcConfig& cfg)
    : ss_(ss),
      cfg_(cfg),
      pm_((cfg.validate(ss), build_prediction_matrices(ss, cfg.P, cfg.M))),
      qp_(pm_, cfg_, ss.inputs()) {
  if (!ss.is_discrete()) throw InvalidConfigError("centralized MPC needs a discrete model");
  if (cfg_.L.size() == 0 && !(ss.C.rows() == ss.C.cols() && ss.C.isIdentity()))
    throw InvalidConfigError("an observer gain is required when C is not the identity");
}

void CentralizedMpc::reset() {
  have_estimate_ = false;
}

void CentralizedMpc::update_model(const StateSpaceModel& ss) {
  cfg_.validate(ss);
  ss_ = ss;
  pm_ = build_prediction_matrices(ss, cfg_.P, cfg_.M);
  qp_ = CentralizedQp(pm_, cfg_, ss.inputs());
  have_estimate_ = false;
}

ControlDecision CentralizedMpc::step(const StepContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  Eigen::VectorXd x;
  if (cfg_.L.size() == 0) {
    x = ctx.y;
  } else {
    x = have_estimate_ ? observer_update(ss_, x_hat_, ctx.u_prev, d_prev_, ctx.y, cfg_.L)
                       : Eigen::VectorXd(ctx.y);
  }
  const Eigen::VectorXd W = stack_rows(ctx.forecast, 0, cfg_.P);
  const Eigen::VectorXd Yr = stack_rows(ctx.reference, 1, cfg_.P);
  CentralizedSolution sol;
  try {
    sol = qp_.solve(x, ctx.u_prev, W, Yr);
  } catch (const Error& e) {
    throw SolverFailure(ctx.k, std::string("centralized solve failed at step ") + std::to_string(ctx.k) +
                                   ": " + e.what());
  }
  x_hat_ = x;
  d_prev_ = ctx.forecast.row(0).transpose();
  have_estimate_ = true;
  ControlDecision d;
  d.u = sol.u;
  d.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  d.cpu_seconds = d.solve_seconds;
  return d;
}

}  // namespace zonempc
