#include "zonempc/goal_coordination.hpp"

#include <algorithm>
#include <numeric>

#include "zonempc/centralized_mpc.hpp"
#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

Eigen::MatrixXd half_inverse(const Eigen::MatrixXd& W, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (W.size() == 0) return W;
  if (llt.info() != Eigen::Success)
    throw IllPosedWeightsError(std::string(what) + " must be symmetric positive definite");
  return 0.5 * llt.solve(Eigen::MatrixXd::Identity(W.rows(), W.cols()));
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m, int rows) {
  Eigen::VectorXd v(rows * m.cols());
  for (int r = 0; r < rows; ++r) v.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
  return v;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = v.segment(r * cols, cols).transpose();
  return m;
}

}  // namespace

double hamiltonian(const StageModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& z, const Eigen::VectorXd& x_next, const Eigen::VectorXd& x_ref,
                   const Eigen::VectorXd& costate, const Eigen::VectorXd& multiplier,
                   const Eigen::VectorXd& coupled, const Eigen::VectorXd& exogenous) {
  const Eigen::VectorXd dx = x - x_ref;
  double h = dx.dot(m.Q * dx) + z.dot(m.S * z) + u.dot(m.R * u);
  Eigen::VectorXd next = m.A * x + m.B * u + m.C * z - x_next;
  if (exogenous.size()) next += exogenous;
  h += costate.dot(next);
  h += multiplier.dot(z - coupled);
  return h;
}

ThreeLevelSolver::ThreeLevelSolver(const StageModel& model, const Eigen::MatrixXd& terminal, int K)
    : model_(model), terminal_(terminal), K_(K) {
  if (K < 1) throw InvalidConfigError("goal-coordination horizon must be at least 1");
  const auto n = model.A.rows();
  Qi_ = half_inverse(model.Q, "Q");
  Ri_ = half_inverse(model.R, "R");
  Si_ = model.C.cols() ? half_inverse(model.S, "S") : Eigen::MatrixXd(0, 0);
  Ti_ = half_inverse(terminal, "terminal weight");

  Eigen::MatrixXd G = model.B * Ri_ * model.B.transpose();
  if (model.C.cols()) G += model.C * Si_ * model.C.transpose();
  const Eigen::MatrixXd AQA = model.A * Qi_ * model.A.transpose();
  const Eigen::MatrixXd QAt = Qi_ * model.A.transpose();

  Eigen::MatrixXd Mp = Eigen::MatrixXd::Zero(K * n, K * n);
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd diag = (k + 1 <= K - 1 ? Qi_ : Ti_) + G;
    if (k >= 1) diag += AQA;
    Mp.block(k * n, k * n, n, n) = diag;
    if (k + 1 <= K - 1) Mp.block(k * n, (k + 1) * n, n, n) = -QAt;
    if (k >= 1) Mp.block(k * n, (k - 1) * n, n, n) = -QAt.transpose();
  }
  costate_ldlt_.compute(Mp);
  if (costate_ldlt_.info() != Eigen::Success || !costate_ldlt_.isPositive())
    throw IllPosedWeightsError("costate system is singular");

  n_ = static_cast<int>(n);
  m_ = static_cast<int>(model.B.cols());
  nz_ = static_cast<int>(model.C.cols());
  A_s_ = small(model.A);
  Qi_s_ = small(Qi_);
  Ti_s_ = small(Ti_);
  Ri_s_ = small(Ri_);
  Si_s_ = small(nz_ ? Si_ : Eigen::MatrixXd(0, 0));
  BRi_s_ = small(model.B * Ri_);
  CSi_s_ = small(nz_ ? Eigen::MatrixXd(model.C * Si_) : Eigen::MatrixXd(n, 0));
  AQi_s_ = small(model.A * Qi_);
  RiBt_s_ = small(Ri_ * model.B.transpose());
  SiCt_s_ = small(nz_ ? Eigen::MatrixXd(Si_ * model.C.transpose()) : Eigen::MatrixXd(0, n));
  QiAt_s_ = small(QAt);

  // Block Thomas factorization of the tridiagonal costate matrix.
  W_s_.assign(K, Small{});
  Dinv_s_.assign(K, Small{});
  Eigen::MatrixXd Dinv_prev;
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd D = Mp.block(k * n, k * n, n, n);
    if (k >= 1) {
      const Eigen::MatrixXd W = Mp.block(k * n, (k - 1) * n, n, n) * Dinv_prev;
      D -= W * Mp.block((k - 1) * n, k * n, n, n);
      W_s_[k] = small(W);
    }
    Dinv_prev = D.inverse();
    Dinv_s_[k] = small(Dinv_prev);
  }
}

ThreeLevelSolver::Small ThreeLevelSolver::small(const Eigen::MatrixXd& m) {
  Small s;
  s.rows = static_cast<int>(m.rows());
  s.cols = static_cast<int>(m.cols());
  s.v.resize(m.size());
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) s.v[r * s.cols + c] = m(r, c);
  return s;
}

namespace {

// y += scale * M x for a row-major block.
template <typename S>
inline void mv(const S& M, const double* x, double* y, double scale = 1.0) {
  const double* a = M.v.data();
  for (int r = 0; r < M.rows; ++r) {
    double acc = 0.0;
    for (int c = 0; c < M.cols; ++c) acc += a[r * M.cols + c] * x[c];
    y[r] += scale * acc;
  }
}

}  // namespace

int ThreeLevelSolver::solution_size() const { return (K_ + 1) * n_ + K_ * m_ + K_ * nz_; }
int ThreeLevelSolver::u_offset() const { return (K_ + 1) * n_; }
int ThreeLevelSolver::z_offset() const { return (K_ + 1) * n_ + K_ * m_; }

// One state and one input per subsystem: the block recursion in scalars.
void ThreeLevelSolver::solve_flat_scalar(const FlatData& d, double* out, double* work) const {
  const int K = K_;
  const bool coupled = nz_ == 1;
  const double a = A_s_.v[0], qi = Qi_s_.v[0], ti = Ti_s_.v[0], ri = Ri_s_.v[0];
  const double bri = BRi_s_.v[0], aqi = AQi_s_.v[0], ribt = RiBt_s_.v[0], qiat = QiAt_s_.v[0];
  const double csi = coupled ? CSi_s_.v[0] : 0.0, si = coupled ? Si_s_.v[0] : 0.0;
  const double sict = coupled ? SiCt_s_.v[0] : 0.0;
  const double* ref = d.reference;
  const double* gx = d.state_price;
  const double* gu = d.input_price;
  const double* lam = d.multipliers;
  double* y = work;
  double* p = work + K;

  double prev = 0.0;
  for (int k = 0; k < K; ++k) {
    double yk = d.exogenous[k] + bri * gu[k];
    if (coupled) yk -= csi * lam[k];
    yk -= k + 1 <= K - 1 ? ref[k + 1] + qi * gx[k + 1] : ref[K];
    if (k >= 1) {
      yk += a * ref[k] + aqi * gx[k] - W_s_[k].v[0] * prev;
    } else {
      yk += a * d.x0[0];
    }
    y[k] = prev = yk;
  }
  double next = 0.0;
  for (int k = K - 1; k >= 0; --k) {
    const double rhs = k + 1 <= K - 1 ? y[k] + qiat * next : y[k];
    p[k] = next = Dinv_s_[k].v[0] * rhs;
  }

  double* x = out;
  double* u = out + (K + 1);
  double* z = u + K;
  x[0] = d.x0[0];
  for (int k = 0; k < K; ++k) {
    u[k] = ri * gu[k] - ribt * p[k];
    if (coupled) z[k] = -si * lam[k] - sict * p[k];
    if (k >= 1) x[k] = ref[k] + qi * (gx[k] + p[k - 1]) - qiat * p[k];
  }
  x[K] = ref[K] + ti * p[K - 1];
}

void ThreeLevelSolver::solve_flat(const FlatData& d, double* out, double* work) const {
  if (n_ == 1 && m_ == 1) {
    solve_flat_scalar(d, out, work);
    return;
  }
  solve_flat_generic(d, out, work);
}

void ThreeLevelSolver::solve_flat_generic(const FlatData& d, double* out, double* work) const {
  const int K = K_, n = n_, m = m_, nz = nz_;
  double* y = work;           // right-hand side, then forward-eliminated
  double* p = work + K * n;   // costates
  for (int k = 0; k < K; ++k) {
    double* yk = y + k * n;
    for (int r = 0; r < n; ++r) yk[r] = d.exogenous[k * n + r];
    mv(BRi_s_, d.input_price + k * m, yk);
    if (nz) mv(CSi_s_, d.multipliers + k * nz, yk, -1.0);
    if (k + 1 <= K - 1) {
      for (int r = 0; r < n; ++r) yk[r] -= d.reference[(k + 1) * n + r];
      mv(Qi_s_, d.state_price + (k + 1) * n, yk, -1.0);
    } else {
      for (int r = 0; r < n; ++r) yk[r] -= d.reference[K * n + r];
    }
    if (k >= 1) {
      mv(A_s_, d.reference + k * n, yk);
      mv(AQi_s_, d.state_price + k * n, yk);
      mv(W_s_[k], y + (k - 1) * n, yk, -1.0);
    } else {
      mv(A_s_, d.x0, yk);
    }
  }
  for (int k = K - 1; k >= 0; --k) {
    double* pk = p + k * n;
    double* yk = y + k * n;
    if (k + 1 <= K - 1) mv(QiAt_s_, p + (k + 1) * n, yk);  // -(-Qi A') p(k+1)
    for (int r = 0; r < n; ++r) pk[r] = 0.0;
    mv(Dinv_s_[k], yk, pk);
  }

  double* x = out;
  double* u = out + (K + 1) * n;
  double* z = u + K * m;
  for (int r = 0; r < n; ++r) x[r] = d.x0[r];
  for (int k = 0; k < K; ++k) {
    const double* pk = p + k * n;
    double* uk = u + k * m;
    for (int r = 0; r < m; ++r) uk[r] = 0.0;
    mv(Ri_s_, d.input_price + k * m, uk);
    mv(RiBt_s_, pk, uk, -1.0);
    if (nz) {
      double* zk = z + k * nz;
      for (int r = 0; r < nz; ++r) zk[r] = 0.0;
      mv(Si_s_, d.multipliers + k * nz, zk, -1.0);
      mv(SiCt_s_, pk, zk, -1.0);
    }
    if (k >= 1) {
      double* xk = x + k * n;
      for (int r = 0; r < n; ++r) xk[r] = d.reference[k * n + r];
      mv(Qi_s_, d.state_price + k * n, xk);
      mv(Qi_s_, p + (k - 1) * n, xk);
      mv(QiAt_s_, pk, xk, -1.0);
    }
  }
  double* xK = x + K * n;
  for (int r = 0; r < n; ++r) xK[r] = d.reference[K * n + r];
  mv(Ti_s_, p + (K - 1) * n, xK);
}

void ThreeLevelSolver::level_zero(const GoalSubproblem& sub, GoalSolution& sol) const {
  const Eigen::VectorXd p = sol.costate.row(0).transpose();
  sol.u.row(0) = (Ri_ * (sub.input_price.row(0).transpose() - model_.B.transpose() * p)).transpose();
  if (model_.C.cols())
    sol.z.row(0) = (-Si_ * (sub.multipliers.row(0).transpose() + model_.C.transpose() * p)).transpose();
  sol.x.row(0) = sub.x0.transpose();
}

void ThreeLevelSolver::level_interior(const GoalSubproblem& sub, int k, GoalSolution& sol) const {
  const Eigen::VectorXd p = sol.costate.row(k).transpose();
  const Eigen::VectorXd p_prev = sol.costate.row(k - 1).transpose();
  sol.x.row(k) = (sub.reference.row(k).transpose() +
                  Qi_ * (sub.state_price.row(k).transpose() + p_prev - model_.A.transpose() * p))
                     .transpose();
  sol.u.row(k) = (Ri_ * (sub.input_price.row(k).transpose() - model_.B.transpose() * p)).transpose();
  if (model_.C.cols())
    sol.z.row(k) = (-Si_ * (sub.multipliers.row(k).transpose() + model_.C.transpose() * p)).transpose();
}

void ThreeLevelSolver::level_terminal(const GoalSubproblem& sub, GoalSolution& sol) const {
  sol.x.row(K_) = (sub.reference.row(K_).transpose() + Ti_ * sol.costate.row(K_ - 1).transpose()).transpose();
}

GoalSolution ThreeLevelSolver::solve(const GoalSubproblem& sub) const {
  const int n = static_cast<int>(model_.A.rows());
  const int m = static_cast<int>(model_.B.cols());
  const int nz = static_cast<int>(model_.C.cols());
  const int K = K_;
  if (sub.x0.size() != n || sub.reference.rows() != K + 1 || sub.exogenous.rows() != K ||
      sub.input_price.rows() != K || sub.state_price.rows() != K + 1 ||
      (nz && sub.multipliers.rows() != K))
    throw InvalidConfigError("goal subproblem shapes do not match the horizon");

  Eigen::VectorXd rhs(K * n);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd r = sub.exogenous.row(k).transpose() +
                        model_.B * (Ri_ * sub.input_price.row(k).transpose());
    if (nz) r -= model_.C * (Si_ * sub.multipliers.row(k).transpose());
    if (k + 1 <= K - 1) {
      r -= sub.reference.row(k + 1).transpose() + Qi_ * sub.state_price.row(k + 1).transpose();
    } else {
      r -= sub.reference.row(K).transpose();
    }
    if (k >= 1) {
      r += model_.A * (sub.reference.row(k).transpose() + Qi_ * sub.state_price.row(k).transpose());
    } else {
      r += model_.A * sub.x0;
    }
    rhs.segment(k * n, n) = r;
  }
  const Eigen::VectorXd p = costate_ldlt_.solve(rhs);

  GoalSolution sol;
  sol.costate = unflatten(p, K, n);
  sol.x.resize(K + 1, n);
  sol.u.resize(K, m);
  sol.z = Eigen::MatrixXd::Zero(K, nz);
  level_zero(sub, sol);
  for (int k = 1; k < K; ++k) level_interior(sub, k, sol);
  level_terminal(sub, sol);
  return sol;
}

GoalSolution three_level_solve(const StageModel& model, const Eigen::MatrixXd& terminal, int K,
                               const GoalSubproblem& sub) {
  return ThreeLevelSolver(model, terminal, K).solve(sub);
}

GoalCoordinationMpc::GoalCoordinationMpc(const SubsystemDecomposition& d, const DmpcConfig& cfg)
    : DistributedMpcBase(d, cfg), K_(cfg.P) {
  const double terminal = cfg_.terminal < 0.0 ? cfg_.q : cfg_.terminal;
  if (!(terminal > 0.0)) throw IllPosedWeightsError("terminal weight must be positive");
  base_step_ = cfg_.step0 > 0.0 ? cfg_.step0 : 2.0 * cfg_.s;
  agents_.resize(d.size());
  for (int i = 0; i < d.size(); ++i) {
    Agent& a = agents_[i];
    a.n = static_cast<int>(d.state_parts[i].size());
    a.m = static_cast<int>(d.input_parts[i].size());
    if (d.C[i][i].rows() != a.n || !d.C[i][i].isIdentity())
      throw InvalidConfigError("goal coordination assumes full state measurement");
    a.neighbors = d.neighbors[i];
    a.dependents = d.dependents(i);
    a.nz = a.neighbors.empty() ? 0 : a.n;
    a.E = d.E[i];
    for (int j : a.neighbors) {
      a.L[j] = d.A[i][j];
      a.Mc[j] = d.B[i][j];
    }
    StageModel sm;
    sm.A = d.A[i][i];
    sm.B = d.B[i][i];
    sm.C = Eigen::MatrixXd::Identity(a.n, a.nz);
    sm.Q = cfg_.q * Eigen::MatrixXd::Identity(a.n, a.n);
    sm.R = cfg_.r * Eigen::MatrixXd::Identity(a.m, a.m);
    sm.S = cfg_.s * Eigen::MatrixXd::Identity(a.nz, a.nz);
    a.solver = ThreeLevelSolver(sm, terminal * Eigen::MatrixXd::Identity(a.n, a.n), K_);
    a.x0 = Eigen::VectorXd::Zero(a.n);
    a.ref = Eigen::VectorXd::Zero((K_ + 1) * a.n);
    a.exo = Eigen::VectorXd::Zero(K_ * a.n);
    a.lambda = Eigen::VectorXd::Zero(K_ * a.nz);
    a.gx = Eigen::VectorXd::Zero((K_ + 1) * a.n);
    a.gu = Eigen::VectorXd::Zero(K_ * a.m);
    a.sol = Eigen::VectorXd::Zero(a.solver.solution_size());
    a.work = Eigen::VectorXd::Zero(2 * K_ * a.n);
    a.z_hat = Eigen::VectorXd::Zero(K_ * a.nz);
    a.residual = Eigen::VectorXd::Zero(K_ * a.nz);
  }
}

void GoalCoordinationMpc::reset() {
  for (auto& a : agents_) {
    a.lambda.setZero();
    a.warm = false;
  }
  step_index_ = 0;
}

GoalSolution GoalCoordinationMpc::local_plan(int i) const {
  const Agent& a = agents_.at(i);
  GoalSolution sol;
  sol.x = unflatten(a.sol.segment(a.solver.x_offset(), (K_ + 1) * a.n), K_ + 1, a.n);
  sol.u = unflatten(a.sol.segment(a.solver.u_offset(), K_ * a.m), K_, a.m);
  sol.z = unflatten(a.sol.segment(a.solver.z_offset(), K_ * a.nz), K_, a.nz);
  return sol;
}

Eigen::MatrixXd GoalCoordinationMpc::multipliers(int i) const {
  const Agent& a = agents_.at(i);
  return unflatten(a.lambda, K_, a.nz);
}

void GoalCoordinationMpc::solve_agent(int i) {
  Agent& a = agents_[i];
  const auto& inbox = bus_.inbox(i);
  a.gx.setZero();
  a.gu.setZero();
  // gx_i(k) = sum_j L_ji' lambda_j(k), gu_i(k) = sum_j M_ji' lambda_j(k).
  for (int j : a.dependents) {
    auto it = inbox.find(j);
    if (it == inbox.end())
      throw CoordinationIncompleteError(j, "no price message from subsystem " + std::to_string(j + 1) +
                                               " to subsystem " + std::to_string(i + 1));
    const Agent& owner = agents_[j];
    const Eigen::MatrixXd& L = owner.L.at(i);
    const Eigen::MatrixXd& M = owner.Mc.at(i);
    const double* lam = it->second.multipliers.data();
    for (int k = 0; k < K_; ++k) {
      const double* lk = lam + k * owner.nz;
      for (int c = 0; c < a.n; ++c) {
        double acc = 0.0;
        for (int r = 0; r < owner.nz; ++r) acc += L(r, c) * lk[r];
        a.gx(k * a.n + c) += acc;
      }
      for (int c = 0; c < a.m; ++c) {
        double acc = 0.0;
        for (int r = 0; r < owner.nz; ++r) acc += M(r, c) * lk[r];
        a.gu(k * a.m + c) += acc;
      }
    }
  }
  ThreeLevelSolver::FlatData data;
  data.x0 = a.x0.data();
  data.reference = a.ref.data();
  data.exogenous = a.exo.data();
  data.multipliers = a.lambda.data();
  data.state_price = a.gx.data();
  data.input_price = a.gu.data();
  a.solver.solve_flat(data, a.sol.data(), a.work.data());
}

ControlDecision GoalCoordinationMpc::step(const StepContext& ctx) {
  const int count = d_.size();
  const auto ord = order();
  double critical = 0.0, cpu = 0.0;
  auto account = [&](const std::vector<double>& t) {
    critical += *std::max_element(t.begin(), t.end());
    cpu += std::accumulate(t.begin(), t.end(), 0.0);
  };
  trace_ = {};
  const int k = step_index_;

  std::vector<Eigen::VectorXd> y_local(count);
  for (int i = 0; i < count; ++i) y_local[i] = port_.read(i, d_.output_parts[i], ctx.y);
  account(run_agents(ord, 1, [&](int i) {
    Agent& a = agents_[i];
    Eigen::MatrixXd r_i(K_, a.n);
    for (int c = 0; c < a.n; ++c) r_i.col(c) = ctx.reference.col(d_.output_parts[i][c]).segment(1, K_);
    a.x0 = y_local[i];
    a.ref = flatten(smooth_reference(y_local[i], r_i, cfg_.smoothing), K_ + 1);
    a.exo = flatten(ctx.forecast.topRows(K_) * a.E.transpose(), K_);
    if (a.warm && a.nz && K_ > 1) a.lambda.head((K_ - 1) * a.nz) = a.lambda.tail((K_ - 1) * a.nz).eval();
  }));

  bool converged = false;
  int rounds = 0;
  for (int s = 0; s < cfg_.max_iterations; ++s) {
    rounds = s + 1;
    bus_.set_round(k, s + 1);
    bus_.clear();
    for (int j = 0; j < count; ++j) {
      for (int i : agents_[j].neighbors) {
        CoordinationMessage msg;
        msg.sender = j;
        msg.receiver = i;
        msg.multipliers = agents_[j].lambda;
        bus_.send(std::move(msg));
      }
    }
    account(run_agents(ord, cfg_.threads, [&](int i) { solve_agent(i); }));

    bus_.clear();
    for (int i = 0; i < count; ++i) {
      const Agent& a = agents_[i];
      for (int j : a.dependents) {
        CoordinationMessage msg;
        msg.sender = i;
        msg.receiver = j;
        msg.states = a.sol.segment(a.solver.x_offset(), K_ * a.n);
        msg.inputs = a.sol.segment(a.solver.u_offset(), K_ * a.m);
        bus_.send(std::move(msg));
      }
    }
    std::vector<double> res(count, 0.0), merit(count, 0.0);
    const double alpha = step_size(cfg_.step_rule, base_step_, s);
    account(run_agents(ord, 1, [&](int j) {
      Agent& a = agents_[j];
      if (a.nz == 0) return;
      const auto& inbox = bus_.inbox(j);
      a.z_hat.setZero();
      // z_hat_j(k) = sum_i L_ji x_i(k) + M_ji u_i(k).
      for (int i : a.neighbors) {
        auto it = inbox.find(i);
        if (it == inbox.end())
          throw CoordinationIncompleteError(i, "no plan from neighbor " + std::to_string(i + 1));
        const Agent& src = agents_[i];
        const Eigen::MatrixXd& L = a.L.at(i);
        const Eigen::MatrixXd& M = a.Mc.at(i);
        const double* xs = it->second.states.data();
        const double* us = it->second.inputs.data();
        for (int t = 0; t < K_; ++t) {
          for (int r = 0; r < a.nz; ++r) {
            double acc = 0.0;
            for (int c = 0; c < src.n; ++c) acc += L(r, c) * xs[t * src.n + c];
            for (int c = 0; c < src.m; ++c) acc += M(r, c) * us[t * src.m + c];
            a.z_hat(t * a.nz + r) += acc;
          }
        }
      }
      a.residual = a.sol.segment(a.solver.z_offset(), K_ * a.nz) - a.z_hat;
      a.lambda += alpha * a.residual;
      merit[j] = alpha * alpha * a.residual.squaredNorm();
      res[j] = a.residual.cwiseAbs().maxCoeff();
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
    for (int c = 0; c < a.m; ++c) dec.u(d_.input_parts[i][c]) = a.sol(a.solver.u_offset() + c);
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

}  // namespace zonempc
