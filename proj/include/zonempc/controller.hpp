#pragma once

#include <Eigen/Dense>

#include <string>

namespace zonempc {

struct InputBounds {
  bool enabled = true;
  double lower = 0.0;   // degC
  double upper = 60.0;  // degC
};

// What a controller sees at sample k.
struct StepContext {
  int k = 0;
  double t = 0.0;
  Eigen::VectorXd y;          // measured outputs
  Eigen::VectorXd u_prev;     // input applied over the previous interval
  Eigen::MatrixXd reference;  // row l: r(k + l), l = 0..P
  Eigen::MatrixXd forecast;   // row l: d(k + l), l = 0..P-1
};

struct ControlDecision {
  Eigen::VectorXd u;
  double solve_seconds = 0.0;  // solver wall time (critical path for DMPC)
  double cpu_seconds = 0.0;    // summed over agents for DMPC
  int iterations = 0;          // coordination rounds, 0 for CMPC
  bool converged = true;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  // Rows of reference needed beyond row 0 and rows of forecast needed.
  virtual int horizon() const = 0;
  virtual int inputs() const = 0;
  // Drop warm-start and observer memory.
  virtual void reset() = 0;
  virtual ControlDecision step(const StepContext& ctx) = 0;
};

}  // namespace zonempc
