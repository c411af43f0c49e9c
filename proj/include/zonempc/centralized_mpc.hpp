#pragma once

#include <Eigen/Dense>
#include <Eigen/Cholesky>

#include "zonempc/box_qp.hpp"
#include "zonempc/controller.hpp"
#include "zonempc/linear_model.hpp"

namespace zonempc {

// Stacked predictions over P steps:
//   X = H x + G dU + F u_prev + V W,   Y = T X.
struct PredictionMatrices {
  Eigen::MatrixXd G;  // (P n) x (M m)
  Eigen::MatrixXd T;  // (P p) x (P n)
  Eigen::MatrixXd F;  // (P n) x m
  Eigen::MatrixXd H;  // (P n) x n
  Eigen::MatrixXd V;  // (P n) x (P q)
  int P = 0;
  int M = 0;
};

struct MpcConfig {
  int P = 24;
  int M = 6;
  Eigen::MatrixXd Q;  // p x p per-step output weight
  Eigen::MatrixXd R;  // m x m per-step move weight
  InputBounds bounds;
  // Observer gain (n x p). Empty means the measured state is used directly.
  Eigen::MatrixXd L;

  // Q = q I, R = r I sized for the model.
  static MpcConfig defaults(const StateSpaceModel& ss, int P = 24, int M = 6, double q = 1.5,
                            double r = 1.0 / 1600.0);
  void validate(const StateSpaceModel& ss) const;
};

PredictionMatrices build_prediction_matrices(const StateSpaceModel& ss, int P, int M);

Eigen::VectorXd observer_update(const StateSpaceModel& ss, const Eigen::VectorXd& x_prev,
                                const Eigen::VectorXd& u_prev, const Eigen::VectorXd& d_prev,
                                const Eigen::VectorXd& y, const Eigen::MatrixXd& L);

struct CentralizedSolution {
  Eigen::VectorXd dU;  // M m moves
  Eigen::VectorXd U;   // M m absolute inputs
  Eigen::VectorXd u;   // first input
  double kkt_residual = 0.0;
  bool bounds_active = false;
};

// Cached quadratic form of the centralized cost for one set of prediction
// matrices and weights.
class CentralizedQp {
 public:
  CentralizedQp(const PredictionMatrices& pm, const MpcConfig& cfg, int inputs);

  CentralizedSolution solve(const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                            const Eigen::VectorXd& W, const Eigen::VectorXd& Yr) const;
  // Exact tracking cost of a move sequence, including the constant term.
  double cost(const Eigen::VectorXd& dU, const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
              const Eigen::VectorXd& W, const Eigen::VectorXd& Yr) const;
  // Gradient of the cost with respect to dU.
  Eigen::VectorXd gradient(const Eigen::VectorXd& dU, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u_prev, const Eigen::VectorXd& W,
                           const Eigen::VectorXd& Yr) const;

 private:
  Eigen::VectorXd free_response(const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                                const Eigen::VectorXd& W) const;

  PredictionMatrices pm_;
  MpcConfig cfg_;
  int m_;
  Eigen::MatrixXd Qbar_, Rbar_;
  Eigen::MatrixXd TG_;      // T G
  Eigen::MatrixXd Hd_;      // G'T'QTG + R
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd Phi_;     // G'T'Q
  Eigen::MatrixXd Diff_;    // dU = Diff U - Lead u_prev
  Eigen::MatrixXd Lead_;
  Eigen::MatrixXd Hu_;      // Diff' Hd Diff
};

CentralizedSolution solve_centralized_step(const PredictionMatrices& pm, const MpcConfig& cfg,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& u_prev,
                                           const Eigen::VectorXd& W, const Eigen::VectorXd& Yr);

// Stacks rows first..first+count-1 of a (time x channel) matrix into one vector.
Eigen::VectorXd stack_rows(const Eigen::MatrixXd& m, int first, int count);

class CentralizedMpc : public Controller {
 public:
  CentralizedMpc(const StateSpaceModel& ss, const MpcConfig& cfg);

  std::string name() const override { return "centralized"; }
  int horizon() const override { return cfg_.P; }
  int inputs() const override { return ss_.inputs(); }
  void reset() override;
  ControlDecision step(const StepContext& ctx) override;

  // Step 0: rebuild prediction matrices after an explicit model change.
  void update_model(const StateSpaceModel& ss);
  const PredictionMatrices& prediction() const { return pm_; }
  const MpcConfig& config() const { return cfg_; }

 private:
  StateSpaceModel ss_;
  MpcConfig cfg_;
  PredictionMatrices pm_;
  CentralizedQp qp_;
  Eigen::VectorXd x_hat_;
  Eigen::VectorXd d_prev_;
  bool have_estimate_ = false;
};

}  // namespace zonempc
