#pragma once

// Distributed MPC: one local controller per subsystem, coordinated by prices
// on the interaction variables.

#include <Eigen/Dense>
#include <Eigen/Cholesky>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "zonempc/controller.hpp"
#include "zonempc/coordination.hpp"
#include "zonempc/linear_model.hpp"

namespace zonempc {

enum class Coordination { kDual, kGoal };
enum class StepRule { kConstant, kDiminishing };

std::string to_string(Coordination c);
Coordination coordination_from_string(const std::string& s);
std::string to_string(StepRule r);
StepRule step_rule_from_string(const std::string& s);

struct DmpcConfig {
  Coordination coordination = Coordination::kGoal;
  int P = 24;
  int M = 6;
  double q = 1.5;           // output weight, Q_i = q I
  double r = 1.0 / 1600.0;  // input weight, R_i = r I
  double s = 1.0;           // interaction weight (goal coordination), S_i = s I
  double terminal = -1.0;   // terminal weight; negative means equal to q
  double smoothing = 0.5;   // alpha_i
  double rho = 10.0;        // penalty (dual coordination)
  StepRule step_rule = StepRule::kConstant;
  double step0 = 0.0;       // 0 selects the default for the variant
  double tolerance = 1e-4;
  int max_iterations = 50;
  InputBounds bounds;
  bool record_transcript = false;
  int threads = 1;
  std::vector<int> agent_order;  // evaluation order of local solves; empty is natural

  void validate() const;
};

// y^d(k) = y, y^d(k+l) = alpha w(k+l-1) + (1-alpha) r(k+l), l = 1..P.
// r holds rows k+1..k+P, w holds rows k..k+P-1. Returns P+1 rows.
Eigen::MatrixXd smooth_reference(const Eigen::VectorXd& y, const Eigen::MatrixXd& r, double alpha,
                                 const Eigen::MatrixXd& w);
// Same with w taken as the smoothed trajectory itself.
Eigen::MatrixXd smooth_reference(const Eigen::VectorXd& y, const Eigen::MatrixXd& r, double alpha);

struct InteractionEstimate {
  Eigen::VectorXd W;  // P n_i
  Eigen::VectorXd V;  // P p_i
};

// Per-subsystem controller data for the dual variant.
struct LocalController {
  int id = 0;
  int n = 0, m = 0, p = 0, q = 0;
  int P = 0, M = 0;
  std::vector<int> neighbors;   // N_i
  std::vector<int> dependents;  // {j : i in N_j}
  // Offsets of each subsystem in the stacked all-subsystem X (P n_j blocks)
  // and U (M m_j blocks).
  std::vector<int> state_offset, input_offset;
  int stacked_states = 0, stacked_inputs = 0;

  Eigen::MatrixXd A_ii, B_ii, C_ii, E_i;
  std::map<int, Eigen::MatrixXd> A_ij, B_ij, C_ij;

  Eigen::MatrixXd Q, R;
  double alpha = 0.0;
  double rho = 1.0;

  Eigen::MatrixXd A_tilde, B_tilde, C_tilde;  // interaction maps on stacked X, U
  Eigen::MatrixXd Gamma_tilde;                // M moves -> P held inputs (own)
  Eigen::MatrixXd T;
  Eigen::MatrixXd S_bar, A_bar, B_bar, C_bar, E_bar;
  Eigen::MatrixXd Gamma_prime, Gamma_bar;
  Eigen::MatrixXd Q_bar, R_bar;
  Eigen::MatrixXd S, N, H, K_bar;
  Eigen::LLT<Eigen::MatrixXd> H_llt;

  std::map<int, Eigen::VectorXd> multipliers;  // lambda_ij, j in N_i
  Eigen::VectorXd u_prev;
  Eigen::VectorXd x_hat;
};

LocalController make_local_controller(const SubsystemDecomposition& d, int i, const Eigen::MatrixXd& Q,
                                      const Eigen::MatrixXd& R, int P, int M, double alpha = 0.0,
                                      double rho = 1.0);

// Hold matrix: M moves of size m -> P inputs, last move repeated.
Eigen::MatrixXd hold_matrix(int P, int M, int m);

InteractionEstimate predict_interactions(const LocalController& ctrl, const Eigen::VectorXd& X_all,
                                         const Eigen::VectorXd& U_all);
// Assembles X_all, U_all from neighbor messages (states over P, inputs over M).
InteractionEstimate predict_interactions(const LocalController& ctrl,
                                         const std::map<int, CoordinationMessage>& messages);

struct LocalPrediction {
  Eigen::VectorXd X;  // x(k+1..k+P)
  Eigen::VectorXd Y;  // y(k+1..k+P)
};

// D is the stacked disturbance forecast d(k..k+P-1); empty means zero.
LocalPrediction predict_local_state_output(const LocalController& ctrl, const Eigen::VectorXd& x_hat,
                                           const Eigen::VectorXd& U, const Eigen::VectorXd& W,
                                           const Eigen::VectorXd& V,
                                           const Eigen::VectorXd& D = Eigen::VectorXd());

// Z = S[B_bar Gamma' u_prev + A_bar x + W + E_bar D] + T V.
Eigen::VectorXd free_output(const LocalController& ctrl, const Eigen::VectorXd& u_prev,
                            const Eigen::VectorXd& x_hat, const Eigen::VectorXd& W,
                            const Eigen::VectorXd& V, const Eigen::VectorXd& D = Eigen::VectorXd());

// U = Gamma' u_prev + Gamma_bar (K_bar (Yd - Z) + H^-1 c).
Eigen::VectorXd local_control_law(const LocalController& ctrl, const Eigen::VectorXd& Yd,
                                  const Eigen::VectorXd& Z, const Eigen::VectorXd& u_prev,
                                  const Eigen::VectorXd& correction = Eigen::VectorXd());

Eigen::VectorXd update_multipliers(const Eigen::VectorXd& lambda, double step, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& z_hat);

double augmented_cost(double J, const std::vector<Eigen::VectorXd>& z,
                      const std::vector<Eigen::VectorXd>& z_hat,
                      const std::vector<Eigen::VectorXd>& lambda, double rho);

// Step size for round s (0-based).
double step_size(StepRule rule, double base, int s);

// Per-round diagnostics of the last control step.
struct CoordinationTrace {
  std::vector<double> residual;  // max |z - z_hat| after each round
  std::vector<double> merit;     // change of (consensus, multipliers) between rounds
};

// Common plumbing for both coordination variants.
class DistributedMpcBase : public Controller {
 public:
  DistributedMpcBase(const SubsystemDecomposition& d, const DmpcConfig& cfg);

  int horizon() const override { return cfg_.P; }
  int inputs() const override { return total_inputs_; }

  const std::vector<TranscriptEntry>& transcript() const { return bus_.transcript(); }
  const std::vector<std::pair<int, int>>& inbox_reads() const { return bus_.reads(); }
  const std::vector<std::pair<int, int>>& measurement_reads() const { return port_.log(); }
  const CoordinationTrace& last_trace() const { return trace_; }
  const SubsystemDecomposition& decomposition() const { return d_; }
  const DmpcConfig& config() const { return cfg_; }

 protected:
  std::vector<int> order() const;
  Eigen::VectorXd clip(const Eigen::VectorXd& u) const;

  SubsystemDecomposition d_;
  DmpcConfig cfg_;
  int total_inputs_ = 0;
  MessageBus bus_;
  MeasurementPort port_;
  CoordinationTrace trace_;
  int step_index_ = 0;
};

class DualDecompositionMpc : public DistributedMpcBase {
 public:
  DualDecompositionMpc(const SubsystemDecomposition& d, const DmpcConfig& cfg);

  std::string name() const override { return "distributed"; }
  void reset() override;
  ControlDecision step(const StepContext& ctx) override;

  const LocalController& local(int i) const { return agents_[i].ctrl; }

 private:
  struct Agent {
    LocalController ctrl;
    Eigen::MatrixXd Phi;      // dY / dy over the joint variable y = [dU; z_j...]
    Eigen::MatrixXd dXfut, dXtraj, dUtraj;
    Eigen::MatrixXd Hj;
    Eigen::LLT<Eigen::MatrixXd> joint;
    std::map<int, Eigen::MatrixXd> KA, KB;  // kron(I_P, A_ij), j in N_i
    std::map<int, Eigen::MatrixXd> D_out;   // d o_ji / dy, j dependent
    int joint_size = 0;
    // Plan of the latest solve.
    Eigen::VectorXd U, Xfut, Xtraj, Utraj;
    std::map<int, Eigen::VectorXd> z;
    // Edge state owned by this agent (j in N_i).
    std::map<int, Eigen::VectorXd> t, lambda;
    bool warm = false;
    // Per-step inputs.
    Eigen::VectorXd x, Yd, D, V;
  };

  void build_agent(Agent& a);
  void solve_agent(int i);
  void exchange_plans();
  void exchange_prices();
  Eigen::VectorXd contribution(int owner, int contributor, const CoordinationMessage& msg) const;

  std::vector<Agent> agents_;
};

// Builds the controller selected by cfg.coordination.
std::unique_ptr<DistributedMpcBase> make_distributed_mpc(const SubsystemDecomposition& d,
                                                         const DmpcConfig& cfg);

}  // namespace zonempc
