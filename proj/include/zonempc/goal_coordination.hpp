#pragma once

// Goal coordination: each subsystem minimizes its own Hamiltonian with the
// interaction z_i as a free input, and a price lambda_i on
// z_i = sum_j L_ij x_j + M_ij u_j drives the interactions to consistency.

#include <Eigen/Dense>

#include <vector>

#include "zonempc/distributed_mpc.hpp"

namespace zonempc {

struct StageModel {
  Eigen::MatrixXd A, B, C;  // x+ = A x + B u + C z + e
  Eigen::MatrixXd Q, R, S;
};

// ||x - x_ref||_Q^2 + ||z||_S^2 + ||u||_R^2 + p'(A x + B u + C z + e - x_next)
// + lambda'(z - coupled), where coupled = sum_j L_ij x_j + M_ij u_j.
double hamiltonian(const StageModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& z, const Eigen::VectorXd& x_next, const Eigen::VectorXd& x_ref,
                   const Eigen::VectorXd& costate, const Eigen::VectorXd& multiplier,
                   const Eigen::VectorXd& coupled, const Eigen::VectorXd& exogenous = Eigen::VectorXd());

// Data of one local problem over k = 0..K. Matrices hold one time step per row.
struct GoalSubproblem {
  Eigen::VectorXd x0;
  Eigen::MatrixXd reference;    // K+1 rows, x^d(0..K)
  Eigen::MatrixXd exogenous;    // K rows, known additive term e(k) (E d)
  Eigen::MatrixXd multipliers;  // K rows, own lambda(k)
  Eigen::MatrixXd state_price;  // K+1 rows, sum_j L_ji' lambda_j(k); rows 0 and K unused
  Eigen::MatrixXd input_price;  // K rows, sum_j M_ji' lambda_j(k)
};

struct GoalSolution {
  Eigen::MatrixXd x;        // K+1 rows
  Eigen::MatrixXd u;        // K rows
  Eigen::MatrixXd z;        // K rows
  Eigen::MatrixXd costate;  // K rows, p(0..K-1)
};

// Solves the stationarity conditions of all levels at once through the
// costates; the factorization depends only on the weights and is cached.
class ThreeLevelSolver {
 public:
  ThreeLevelSolver() = default;
  ThreeLevelSolver(const StageModel& model, const Eigen::MatrixXd& terminal, int K);

  GoalSolution solve(const GoalSubproblem& sub) const;

  // Same solution from flat time-major buffers, written as
  // [x(0..K); u(0..K-1); z(0..K-1)] to `out` (solution_size() entries).
  // `work` needs 2 K n entries. Does not allocate.
  struct FlatData {
    const double* x0 = nullptr;           // n
    const double* reference = nullptr;    // (K+1) n
    const double* exogenous = nullptr;    // K n
    const double* multipliers = nullptr;  // K nz
    const double* state_price = nullptr;  // (K+1) n, rows 0 and K unused
    const double* input_price = nullptr;  // K m
  };
  void solve_flat(const FlatData& data, double* out, double* work) const;
  // Block version used for subsystems with more than one state or input.
  void solve_flat_generic(const FlatData& data, double* out, double* work) const;
  int solution_size() const;
  int x_offset() const { return 0; }
  int u_offset() const;
  int z_offset() const;

  int horizon() const { return K_; }
  const StageModel& model() const { return model_; }
  const Eigen::MatrixXd& terminal() const { return terminal_; }

 private:
  // Level 0: u(0), z(0) from p(0).
  void level_zero(const GoalSubproblem& sub, GoalSolution& sol) const;
  // Levels 1..K-1: x(k), u(k), z(k) from p(k-1), p(k).
  void level_interior(const GoalSubproblem& sub, int k, GoalSolution& sol) const;
  // Level K: x(K) from p(K-1).
  void level_terminal(const GoalSubproblem& sub, GoalSolution& sol) const;

  StageModel model_;
  Eigen::MatrixXd terminal_;
  int K_ = 0;
  Eigen::MatrixXd Qi_, Ri_, Si_, Ti_;  // half inverses
  Eigen::LDLT<Eigen::MatrixXd> costate_ldlt_;

  // Row-major copies for the flat solve.
  struct Small {
    int rows = 0, cols = 0;
    std::vector<double> v;
  };
  static Small small(const Eigen::MatrixXd& m);
  int n_ = 0, m_ = 0, nz_ = 0;
  Small A_s_, Qi_s_, Ti_s_, Ri_s_, Si_s_, BRi_s_, CSi_s_, AQi_s_, RiBt_s_, SiCt_s_, QiAt_s_;
  // Block LDL' of the costate matrix: W_k = M(k,k-1) D_{k-1}^-1, Dinv_k.
  std::vector<Small> W_s_, Dinv_s_;
  void solve_flat_scalar(const FlatData& data, double* out, double* work) const;
};

GoalSolution three_level_solve(const StageModel& model, const Eigen::MatrixXd& terminal, int K,
                               const GoalSubproblem& sub);

class GoalCoordinationMpc : public DistributedMpcBase {
 public:
  GoalCoordinationMpc(const SubsystemDecomposition& d, const DmpcConfig& cfg);

  std::string name() const override { return "distributed"; }
  void reset() override;
  ControlDecision step(const StepContext& ctx) override;

  double coordination_step() const { return base_step_; }
  // Latest local plan of subsystem i.
  GoalSolution local_plan(int i) const;
  // Own multipliers of subsystem i, one row per step of the horizon.
  Eigen::MatrixXd multipliers(int i) const;

 private:
  struct Agent {
    int n = 0, m = 0, nz = 0;
    std::vector<int> neighbors, dependents;
    Eigen::MatrixXd E;
    ThreeLevelSolver solver;
    std::map<int, Eigen::MatrixXd> L, Mc;  // L_ij, M_ij for j in N_i
    // Flat, time-major working data.
    Eigen::VectorXd x0, ref, exo, lambda, gx, gu, sol, work, z_hat, residual;
    bool warm = false;
  };

  void solve_agent(int i);

  std::vector<Agent> agents_;
  int K_ = 0;
  double base_step_ = 0.0;
};

}  // namespace zonempc
