#include "zonempc/distributed_mpc.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "zonempc/centralized_mpc.hpp"
#include "zonempc/errors.hpp"
#include "zonempc/goal_coordination.hpp"

namespace zonempc {

namespace {

Eigen::MatrixXd kron_identity(int count, const Eigen::MatrixXd& blk) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(blk.rows() * count, blk.cols() * count);
  for (int i = 0; i < count; ++i) out.block(i * blk.rows(), i * blk.cols(), blk.rows(), blk.cols()) = blk;
  return out;
}

// Drops the first block of size `blk` and repeats the last one.
Eigen::VectorXd shift_blocks(const Eigen::VectorXd& v, int blk) {
  Eigen::VectorXd out(v.size());
  const Eigen::Index rest = v.size() - blk;
  out.head(rest) = v.tail(rest);
  out.tail(blk) = v.tail(blk);
  return out;
}

Eigen::VectorXd tile(const Eigen::VectorXd& v, int count) {
  Eigen::VectorXd out(v.size() * count);
  for (int i = 0; i < count; ++i) out.segment(i * v.size(), v.size()) = v;
  return out;
}

}  // namespace

std::string to_string(Coordination c) {
  return c == Coordination::kDual ? "dual" : "goal-coordination";
}

Coordination coordination_from_string(const std::string& s) {
  if (s == "dual") return Coordination::kDual;
  if (s == "goal-coordination" || s == "goal") return Coordination::kGoal;
  throw InvalidConfigError("unknown coordination variant '" + s + "'");
}

std::string to_string(StepRule r) { return r == StepRule::kConstant ? "constant" : "diminishing"; }

StepRule step_rule_from_string(const std::string& s) {
  if (s == "constant") return StepRule::kConstant;
  if (s == "diminishing") return StepRule::kDiminishing;
  throw InvalidConfigError("unknown step rule '" + s + "'");
}

void DmpcConfig::validate() const {
  if (P < 1) throw InvalidConfigError("prediction horizon must be at least 1");
  if (M < 1 || M > P) throw InvalidConfigError("control horizon must satisfy 1 <= M <= P");
  if (!(q > 0.0) || !(r > 0.0)) throw IllPosedWeightsError("q and r must be positive");
  if (coordination == Coordination::kGoal && !(s > 0.0))
    throw IllPosedWeightsError("interaction weight s must be positive");
  if (!(smoothing >= 0.0 && smoothing <= 1.0)) throw InvalidConfigError("smoothing must lie in [0, 1]");
  if (!(rho > 0.0)) throw InvalidConfigError("rho must be positive");
  if (!(tolerance > 0.0) || max_iterations < 1) throw InvalidConfigError("invalid coordination limits");
  if (bounds.enabled && !(bounds.lower < bounds.upper)) throw InvalidConfigError("input bounds are empty");
}

Eigen::MatrixXd smooth_reference(const Eigen::VectorXd& y, const Eigen::MatrixXd& r, double alpha,
                                 const Eigen::MatrixXd& w) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfigError("smoothing must lie in [0, 1]");
  const auto P = r.rows();
  if (w.rows() != P || w.cols() != r.cols() || y.size() != r.cols())
    throw InvalidConfigError("reference smoothing shapes differ");
  Eigen::MatrixXd yd(P + 1, r.cols());
  yd.row(0) = y.transpose();
  for (Eigen::Index l = 1; l <= P; ++l) yd.row(l) = alpha * w.row(l - 1) + (1.0 - alpha) * r.row(l - 1);
  return yd;
}

Eigen::MatrixXd smooth_reference(const Eigen::VectorXd& y, const Eigen::MatrixXd& r, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfigError("smoothing must lie in [0, 1]");
  const auto P = r.rows();
  Eigen::MatrixXd yd(P + 1, r.cols());
  yd.row(0) = y.transpose();
  for (Eigen::Index l = 1; l <= P; ++l) yd.row(l) = alpha * yd.row(l - 1) + (1.0 - alpha) * r.row(l - 1);
  return yd;
}

Eigen::MatrixXd hold_matrix(int P, int M, int m) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(P * m, M * m);
  for (int l = 0; l < P; ++l) g.block(l * m, std::min(l, M - 1) * m, m, m).setIdentity();
  return g;
}

LocalController make_local_controller(const SubsystemDecomposition& d, int i, const Eigen::MatrixXd& Q,
                                      const Eigen::MatrixXd& R, int P, int M, double alpha, double rho) {
  if (M < 1 || M > P) throw InvalidConfigError("control horizon must satisfy 1 <= M <= P");
  LocalController c;
  c.id = i;
  c.n = static_cast<int>(d.state_parts[i].size());
  c.m = static_cast<int>(d.input_parts[i].size());
  c.p = static_cast<int>(d.output_parts[i].size());
  c.q = static_cast<int>(d.E[i].cols());
  c.P = P;
  c.M = M;
  c.neighbors = d.neighbors[i];
  c.dependents = d.dependents(i);
  c.A_ii = d.A[i][i];
  c.B_ii = d.B[i][i];
  c.C_ii = d.C[i][i];
  c.E_i = d.E[i];
  for (int j : c.neighbors) {
    c.A_ij[j] = d.A[i][j];
    c.B_ij[j] = d.B[i][j];
    c.C_ij[j] = d.C[i][j];
  }
  if (Q.rows() != c.p || R.rows() != c.m) throw InvalidConfigError("local weight dimensions differ");
  c.Q = Q;
  c.R = R;
  c.alpha = alpha;
  c.rho = rho;

  for (int j = 0; j < d.size(); ++j) {
    c.state_offset.push_back(c.stacked_states);
    c.input_offset.push_back(c.stacked_inputs);
    c.stacked_states += P * static_cast<int>(d.state_parts[j].size());
    c.stacked_inputs += M * static_cast<int>(d.input_parts[j].size());
  }
  c.A_tilde = Eigen::MatrixXd::Zero(P * c.n, c.stacked_states);
  c.B_tilde = Eigen::MatrixXd::Zero(P * c.n, c.stacked_inputs);
  c.C_tilde = Eigen::MatrixXd::Zero(P * c.p, c.stacked_states);
  for (int j : c.neighbors) {
    const int nj = static_cast<int>(d.state_parts[j].size());
    const int mj = static_cast<int>(d.input_parts[j].size());
    c.A_tilde.block(0, c.state_offset[j], P * c.n, P * nj) = kron_identity(P, c.A_ij[j]);
    c.B_tilde.block(0, c.input_offset[j], P * c.n, M * mj) = kron_identity(P, c.B_ij[j]) * hold_matrix(P, M, mj);
    c.C_tilde.block(0, c.state_offset[j], P * c.p, P * nj) = kron_identity(P, c.C_ij[j]);
  }
  c.Gamma_tilde = hold_matrix(P, M, c.m);
  c.T = Eigen::MatrixXd::Identity(P * c.p, P * c.p);

  c.S_bar = Eigen::MatrixXd::Zero(P * c.n, P * c.n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(c.n, c.n);
  for (int lag = 0; lag < P; ++lag) {
    for (int r = lag; r < P; ++r) c.S_bar.block(r * c.n, (r - lag) * c.n, c.n, c.n) = power;
    power = c.A_ii * power;
  }
  c.A_bar = Eigen::MatrixXd::Zero(P * c.n, c.n);
  c.A_bar.topRows(c.n) = c.A_ii;
  c.B_bar = kron_identity(P, c.B_ii) * c.Gamma_tilde;
  c.C_bar = kron_identity(P, c.C_ii);
  c.E_bar = kron_identity(P, c.E_i);
  c.Gamma_prime = Eigen::MatrixXd::Zero(M * c.m, c.m);
  c.Gamma_bar = Eigen::MatrixXd::Zero(M * c.m, M * c.m);
  for (int a = 0; a < M; ++a) {
    c.Gamma_prime.block(a * c.m, 0, c.m, c.m).setIdentity();
    for (int b = 0; b <= a; ++b) c.Gamma_bar.block(a * c.m, b * c.m, c.m, c.m).setIdentity();
  }
  c.Q_bar = kron_identity(P, Q);
  c.R_bar = kron_identity(M, R);
  c.S = c.C_bar * c.S_bar;
  c.N = c.S * c.B_bar * c.Gamma_bar;
  c.H = c.N.transpose() * c.Q_bar * c.N + c.R_bar;
  c.H = 0.5 * (c.H + c.H.transpose());
  c.H_llt.compute(c.H);
  if (c.H_llt.info() != Eigen::Success) throw IllPosedWeightsError("local Hessian H_i is singular");
  c.K_bar = c.H_llt.solve(c.N.transpose() * c.Q_bar);
  c.u_prev = Eigen::VectorXd::Zero(c.m);
  c.x_hat = Eigen::VectorXd::Zero(c.n);
  for (int j : c.neighbors) c.multipliers[j] = Eigen::VectorXd::Zero(P * c.n);
  return c;
}

InteractionEstimate predict_interactions(const LocalController& ctrl, const Eigen::VectorXd& X_all,
                                         const Eigen::VectorXd& U_all) {
  if (X_all.size() != ctrl.stacked_states || U_all.size() != ctrl.stacked_inputs)
    throw InvalidConfigError("stacked trajectories have the wrong length");
  return {ctrl.A_tilde * X_all + ctrl.B_tilde * U_all, ctrl.C_tilde * X_all};
}

InteractionEstimate predict_interactions(const LocalController& ctrl,
                                         const std::map<int, CoordinationMessage>& messages) {
  Eigen::VectorXd X = Eigen::VectorXd::Zero(ctrl.stacked_states);
  Eigen::VectorXd U = Eigen::VectorXd::Zero(ctrl.stacked_inputs);
  for (int j : ctrl.neighbors) {
    auto it = messages.find(j);
    if (it == messages.end() || it->second.states.size() == 0)
      throw CoordinationIncompleteError(j, "no message from neighbor " + std::to_string(j + 1) +
                                               " for subsystem " + std::to_string(ctrl.id + 1));
    const auto& msg = it->second;
    const int x_len = (j + 1 < static_cast<int>(ctrl.state_offset.size()) ? ctrl.state_offset[j + 1]
                                                                        : ctrl.stacked_states) -
                      ctrl.state_offset[j];
    const int u_len = (j + 1 < static_cast<int>(ctrl.input_offset.size()) ? ctrl.input_offset[j + 1]
                                                                        : ctrl.stacked_inputs) -
                      ctrl.input_offset[j];
    if (msg.states.size() != x_len || msg.inputs.size() != u_len)
      throw InvalidConfigError("message from " + std::to_string(j + 1) + " has the wrong horizon");
    X.segment(ctrl.state_offset[j], x_len) = msg.states;
    U.segment(ctrl.input_offset[j], u_len) = msg.inputs;
  }
  return predict_interactions(ctrl, X, U);
}

LocalPrediction predict_local_state_output(const LocalController& ctrl, const Eigen::VectorXd& x_hat,
                                           const Eigen::VectorXd& U, const Eigen::VectorXd& W,
                                           const Eigen::VectorXd& V, const Eigen::VectorXd& D) {
  Eigen::VectorXd drive = ctrl.A_bar * x_hat + ctrl.B_bar * U + W;
  if (D.size()) drive += ctrl.E_bar * D;
  LocalPrediction out;
  out.X = ctrl.S_bar * drive;
  out.Y = ctrl.C_bar * out.X + ctrl.T * V;
  return out;
}

Eigen::VectorXd free_output(const LocalController& ctrl, const Eigen::VectorXd& u_prev,
                            const Eigen::VectorXd& x_hat, const Eigen::VectorXd& W,
                            const Eigen::VectorXd& V, const Eigen::VectorXd& D) {
  Eigen::VectorXd drive = ctrl.B_bar * (ctrl.Gamma_prime * u_prev) + ctrl.A_bar * x_hat + W;
  if (D.size()) drive += ctrl.E_bar * D;
  return ctrl.S * drive + ctrl.T * V;
}

Eigen::VectorXd local_control_law(const LocalController& ctrl, const Eigen::VectorXd& Yd,
                                  const Eigen::VectorXd& Z, const Eigen::VectorXd& u_prev,
                                  const Eigen::VectorXd& correction) {
  if (ctrl.H_llt.info() != Eigen::Success) throw IllPosedWeightsError("local Hessian H_i is singular");
  Eigen::VectorXd dU = ctrl.K_bar * (Yd - Z);
  if (correction.size()) dU += ctrl.H_llt.solve(correction);
  return ctrl.Gamma_prime * u_prev + ctrl.Gamma_bar * dU;
}

Eigen::VectorXd update_multipliers(const Eigen::VectorXd& lambda, double step, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& z_hat) {
  if (!(step > 0.0)) throw InvalidConfigError("multiplier step must be positive");
  return lambda + step * (z - z_hat);
}

double augmented_cost(double J, const std::vector<Eigen::VectorXd>& z,
                      const std::vector<Eigen::VectorXd>& z_hat,
                      const std::vector<Eigen::VectorXd>& lambda, double rho) {
  if (rho < 0.0) throw InvalidConfigError("rho must be non-negative");
  double L = J;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const Eigen::VectorXd r = z[k] - z_hat[k];
    L += lambda[k].dot(r) + 0.5 * rho * r.squaredNorm();
  }
  return L;
}

double step_size(StepRule rule, double base, int s) {
  return rule == StepRule::kConstant ? base : base / (1.0 + s);
}

DistributedMpcBase::DistributedMpcBase(const SubsystemDecomposition& d, const DmpcConfig& cfg)
    : d_(d), cfg_(cfg), bus_(d.size()) {
  cfg_.validate();
  if (!(d.Ts > 0.0)) throw InvalidConfigError("distributed MPC needs a discrete model");
  for (const auto& part : d.input_parts) total_inputs_ += static_cast<int>(part.size());
  bus_.record_transcript(cfg_.record_transcript);
  bus_.log_reads(cfg_.record_transcript);
  if (!cfg_.agent_order.empty()) {
    auto sorted = cfg_.agent_order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < d.size(); ++i)
      if (static_cast<int>(sorted.size()) != d.size() || sorted[i] != i)
        throw InvalidConfigError("agent_order must be a permutation of the subsystems");
  }
}

std::vector<int> DistributedMpcBase::order() const {
  if (!cfg_.agent_order.empty()) return cfg_.agent_order;
  std::vector<int> o(d_.size());
  std::iota(o.begin(), o.end(), 0);
  return o;
}

Eigen::VectorXd DistributedMpcBase::clip(const Eigen::VectorXd& u) const {
  if (!cfg_.bounds.enabled) return u;
  return u.cwiseMax(cfg_.bounds.lower).cwiseMin(cfg_.bounds.upper);
}

DualDecompositionMpc::DualDecompositionMpc(const SubsystemDecomposition& d, const DmpcConfig& cfg)
    : DistributedMpcBase(d, cfg) {
  agents_.resize(d.size());
  for (int i = 0; i < d.size(); ++i) {
    const int p = static_cast<int>(d.output_parts[i].size());
    const int m = static_cast<int>(d.input_parts[i].size());
    agents_[i].ctrl = make_local_controller(d, i, cfg_.q * Eigen::MatrixXd::Identity(p, p),
                                            cfg_.r * Eigen::MatrixXd::Identity(m, m), cfg_.P, cfg_.M,
                                            cfg_.smoothing, cfg_.rho);
  }
  for (auto& a : agents_) {
    const auto& c = a.ctrl;
    for (int j : c.neighbors) {
      const int mj = static_cast<int>(d.input_parts[j].size());
      a.KA[j] = kron_identity(c.P, c.A_ij.at(j));
      a.KB[j] = kron_identity(c.P, c.B_ij.at(j)) * hold_matrix(c.P, c.M, mj);
    }
  }
  for (auto& a : agents_) build_agent(a);
}

void DualDecompositionMpc::build_agent(Agent& a) {
  const auto& c = a.ctrl;
  const int P = c.P, n = c.n, mm = c.M * c.m;
  const int nz = static_cast<int>(c.neighbors.size()) * P * n;
  a.joint_size = mm + nz;
  Eigen::MatrixXd J(P * n, nz);
  for (std::size_t k = 0; k < c.neighbors.size(); ++k) J.middleCols(k * P * n, P * n).setIdentity();
  a.dXfut.resize(P * n, a.joint_size);
  a.dXfut.leftCols(mm) = c.S_bar * c.B_bar * c.Gamma_bar;
  a.dXfut.rightCols(nz) = c.S_bar * J;
  a.dXtraj = Eigen::MatrixXd::Zero(P * n, a.joint_size);
  if (P > 1) a.dXtraj.bottomRows((P - 1) * n) = a.dXfut.topRows((P - 1) * n);
  a.dUtraj = Eigen::MatrixXd::Zero(mm, a.joint_size);
  a.dUtraj.leftCols(mm) = c.Gamma_bar;
  a.Phi = c.C_bar * a.dXfut;

  a.Hj = 2.0 * a.Phi.transpose() * c.Q_bar * a.Phi;
  a.Hj.topLeftCorner(mm, mm) += 2.0 * c.R_bar;
  a.Hj.bottomRightCorner(nz, nz) += c.rho * Eigen::MatrixXd::Identity(nz, nz);
  for (int j : c.dependents) {
    const auto& owner = agents_[j];
    a.D_out[j] = owner.KA.at(c.id) * a.dXtraj + owner.KB.at(c.id) * a.dUtraj;
    a.Hj += c.rho * a.D_out[j].transpose() * a.D_out[j];
  }
  a.Hj = 0.5 * (a.Hj + a.Hj.transpose());
  a.joint.compute(a.Hj);
  if (a.joint.info() != Eigen::Success) throw IllPosedWeightsError("local augmented Hessian is singular");
}

void DualDecompositionMpc::reset() {
  for (auto& a : agents_) {
    a.warm = false;
    a.t.clear();
    a.lambda.clear();
    for (auto& [j, l] : a.ctrl.multipliers) l.setZero();
  }
  step_index_ = 0;
}

Eigen::VectorXd DualDecompositionMpc::contribution(int owner, int contributor,
                                                   const CoordinationMessage& msg) const {
  const auto& a = agents_[owner];
  return a.KA.at(contributor) * msg.states + a.KB.at(contributor) * msg.inputs;
}

void DualDecompositionMpc::exchange_plans() {
  bus_.clear();
  for (int j = 0; j < d_.size(); ++j) {
    for (int i : agents_[j].ctrl.dependents) {
      CoordinationMessage msg;
      msg.sender = j;
      msg.receiver = i;
      msg.inputs = agents_[j].U;
      msg.states = agents_[j].Xtraj;
      bus_.send(std::move(msg));
    }
  }
}

void DualDecompositionMpc::exchange_prices() {
  bus_.clear();
  for (int i = 0; i < d_.size(); ++i) {
    for (int j : agents_[i].ctrl.neighbors) {
      CoordinationMessage msg;
      msg.sender = i;
      msg.receiver = j;
      msg.multipliers = agents_[i].lambda.at(j);
      msg.consensus = agents_[i].t.at(j);
      bus_.send(std::move(msg));
    }
  }
}

void DualDecompositionMpc::solve_agent(int i) {
  Agent& a = agents_[i];
  const auto& c = a.ctrl;
  const auto& inbox = bus_.inbox(i);
  if (c.neighbors.empty() && c.dependents.empty()) {
    const Eigen::VectorXd W = Eigen::VectorXd::Zero(c.P * c.n);
    const Eigen::VectorXd Z = free_output(c, c.u_prev, a.x, W, a.V, a.D);
    a.U = local_control_law(c, a.Yd, Z, c.u_prev);
    a.Xfut = predict_local_state_output(c, a.x, a.U, W, a.V, a.D).X;
  } else {
    const int P = c.P, n = c.n, mm = c.M * c.m;
    const Eigen::VectorXd up = c.Gamma_prime * c.u_prev;
    const Eigen::VectorXd Xf0 = c.S_bar * (c.A_bar * a.x + c.B_bar * up + c.E_bar * a.D);
    const Eigen::VectorXd Y0 = c.C_bar * Xf0 + c.T * a.V;
    Eigen::VectorXd g = 2.0 * a.Phi.transpose() * (c.Q_bar * (Y0 - a.Yd));
    for (std::size_t k = 0; k < c.neighbors.size(); ++k) {
      const int j = c.neighbors[k];
      g.segment(mm + k * P * n, P * n) += a.lambda.at(j) - c.rho * a.t.at(j);
    }
    Eigen::VectorXd Xtraj0(P * n);
    Xtraj0.head(n) = a.x;
    if (P > 1) Xtraj0.tail((P - 1) * n) = Xf0.head((P - 1) * n);
    for (int j : c.dependents) {
      auto it = inbox.find(j);
      if (it == inbox.end())
        throw CoordinationIncompleteError(j, "no price message from subsystem " + std::to_string(j + 1) +
                                                 " to subsystem " + std::to_string(i + 1));
      const auto& owner = agents_[j];
      const Eigen::VectorXd o0 = owner.KA.at(i) * Xtraj0 + owner.KB.at(i) * up;
      g += a.D_out.at(j).transpose() * (-it->second.multipliers + c.rho * (o0 - it->second.consensus));
    }
    const Eigen::VectorXd y = -a.joint.solve(g);
    a.U = up + c.Gamma_bar * y.head(mm);
    a.Xfut = Xf0 + a.dXfut * y;
    for (std::size_t k = 0; k < c.neighbors.size(); ++k)
      a.z[c.neighbors[k]] = y.segment(mm + k * P * n, P * n);
  }
  a.Xtraj.resize(c.P * c.n);
  a.Xtraj.head(c.n) = a.x;
  if (c.P > 1) a.Xtraj.tail((c.P - 1) * c.n) = a.Xfut.head((c.P - 1) * c.n);
}

ControlDecision DualDecompositionMpc::step(const StepContext& ctx) {
  const int count = d_.size();
  const auto ord = order();
  double critical = 0.0, cpu = 0.0;
  auto account = [&](const std::vector<double>& t) {
    critical += *std::max_element(t.begin(), t.end());
    cpu += std::accumulate(t.begin(), t.end(), 0.0);
  };
  trace_ = {};
  const int k = step_index_;

  // Step 1: observe, smooth references, take the forecast, seed the plans.
  std::vector<Eigen::VectorXd> y_local(count);
  for (int i = 0; i < count; ++i) y_local[i] = port_.read(i, d_.output_parts[i], ctx.y);
  account(run_agents(ord, 1, [&](int i) {
    Agent& a = agents_[i];
    auto& c = a.ctrl;
    a.x = y_local[i];
    c.x_hat = a.x;
    c.u_prev = select(ctx.u_prev, d_.input_parts[i]);
    const Eigen::MatrixXd r = ctx.reference.middleRows(1, c.P);
    Eigen::MatrixXd r_i(c.P, c.p);
    for (int col = 0; col < c.p; ++col) r_i.col(col) = r.col(d_.output_parts[i][col]);
    a.Yd = stack_rows(smooth_reference(y_local[i], r_i, c.alpha), 1, c.P);
    a.D = stack_rows(ctx.forecast, 0, c.P);
    a.V = Eigen::VectorXd::Zero(c.P * c.p);
    if (a.warm) {
      a.U = shift_blocks(a.U, c.m);
      a.Xtraj = a.Xfut;
      a.Xtraj.head(c.n) = a.x;
      for (auto& [j, t] : a.t) t = shift_blocks(t, c.n);
      for (auto& [j, l] : a.lambda) l = shift_blocks(l, c.n);
    } else {
      a.U = tile(c.u_prev, c.M);
      a.Xtraj = tile(a.x, c.P);
    }
  }));

  bus_.set_round(k, 0);
  exchange_plans();
  for (int i = 0; i < count; ++i) {
    Agent& a = agents_[i];
    const auto& inbox = bus_.inbox(i);
    if (a.ctrl.C_tilde.size() && a.ctrl.C_tilde.cwiseAbs().maxCoeff() > 0.0)
      a.V = predict_interactions(a.ctrl, inbox).V;
    if (!a.warm) {
      for (int j : a.ctrl.neighbors) {
        auto it = inbox.find(j);
        if (it == inbox.end())
          throw CoordinationIncompleteError(j, "no plan from neighbor " + std::to_string(j + 1));
        a.t[j] = contribution(i, j, it->second);
        a.lambda[j] = Eigen::VectorXd::Zero(a.t[j].size());
      }
    }
  }

  const double base = cfg_.step0 > 0.0 ? cfg_.step0
                                       : (cfg_.step_rule == StepRule::kConstant ? 0.5 * cfg_.rho : 1.0 / cfg_.rho);
  bool converged = false;
  int rounds = 0;
  for (int s = 0; s < cfg_.max_iterations; ++s) {
    rounds = s + 1;
    bus_.set_round(k, s + 1);
    exchange_prices();
    account(run_agents(ord, cfg_.threads, [&](int i) { solve_agent(i); }));
    exchange_plans();

    std::vector<double> res(count, 0.0), merit(count, 0.0);
    const double alpha = step_size(cfg_.step_rule, base, s);
    account(run_agents(ord, 1, [&](int i) {
      Agent& a = agents_[i];
      const auto& inbox = bus_.inbox(i);
      for (int j : a.ctrl.neighbors) {
        auto it = inbox.find(j);
        if (it == inbox.end())
          throw CoordinationIncompleteError(j, "no plan from neighbor " + std::to_string(j + 1));
        const Eigen::VectorXd o = contribution(i, j, it->second);
        const Eigen::VectorXd r = a.z.at(j) - o;
        const Eigen::VectorXd t_new = 0.5 * (a.z.at(j) + o);
        const Eigen::VectorXd l_new = update_multipliers(a.lambda.at(j), alpha, a.z.at(j), o);
        merit[i] += 2.0 * cfg_.rho * (t_new - a.t.at(j)).squaredNorm() +
                    2.0 / cfg_.rho * (l_new - a.lambda.at(j)).squaredNorm();
        a.t[j] = t_new;
        a.lambda[j] = l_new;
        res[i] = std::max(res[i], r.cwiseAbs().maxCoeff());
      }
      if (a.ctrl.C_tilde.size() && a.ctrl.C_tilde.cwiseAbs().maxCoeff() > 0.0)
        a.V = predict_interactions(a.ctrl, inbox).V;
    }));
    const double residual = *std::max_element(res.begin(), res.end());
    trace_.residual.push_back(residual);
    trace_.merit.push_back(std::accumulate(merit.begin(), merit.end(), 0.0));
    if (residual < cfg_.tolerance) {
      converged = true;
      break;
    }
  }

  ControlDecision dec;
  dec.u.resize(total_inputs_);
  for (int i = 0; i < count; ++i) {
    Agent& a = agents_[i];
    const Eigen::VectorXd ui = a.U.head(a.ctrl.m);
    for (int c = 0; c < a.ctrl.m; ++c) dec.u(d_.input_parts[i][c]) = ui(c);
    for (auto& [j, l] : a.ctrl.multipliers) l = a.lambda.at(j);
    a.warm = true;
  }
  dec.u = clip(dec.u);
  dec.iterations = rounds;
  dec.converged = converged;
  dec.solve_seconds = critical;
  dec.cpu_seconds = cpu;
  ++step_index_;
  return dec;
}

std::unique_ptr<DistributedMpcBase> make_distributed_mpc(const SubsystemDecomposition& d,
                                                         const DmpcConfig& cfg) {
  if (cfg.coordination == Coordination::kDual) return std::make_unique<DualDecompositionMpc>(d, cfg);
  return std::make_unique<GoalCoordinationMpc>(d, cfg);
}

}  // namespace zonempc
