#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "zonempc/controller.hpp"
#include "zonempc/linear_model.hpp"
#include "zonempc/plant_model.hpp"
#include "zonempc/scenario.hpp"

namespace zonempc {

enum class ForecastMode {
  kPreview,      // future outdoor temperatures known over the horizon
  kPersistence,  // last measured outdoor temperature held over the horizon
};

std::string to_string(ForecastMode m);
ForecastMode forecast_mode_from_string(const std::string& s);

class Plant {
 public:
  virtual ~Plant() = default;
  virtual int zones() const = 0;
  virtual Eigen::VectorXd measure() const = 0;
  // Applies u over [t0, t0 + scenario.Ts).
  virtual void advance(const Eigen::VectorXd& u, const Scenario& scenario, double t0) = 0;
  virtual void apply_event(const ComponentEvent& event) = 0;
  virtual void set_state(const Eigen::VectorXd& x) = 0;
};

// Nonlinear building integrated with RK4 at scenario.dt.
class BuildingPlant : public Plant {
 public:
  explicit BuildingPlant(const BuildingModel& model, InputMode mode = InputMode::kSupplyTemperature);

  int zones() const override { return model_.zone_count(); }
  Eigen::VectorXd measure() const override { return state_.x; }
  void advance(const Eigen::VectorXd& u, const Scenario& scenario, double t0) override;
  void apply_event(const ComponentEvent& event) override;
  void set_state(const Eigen::VectorXd& x) override { state_.x = x; }
  const BuildingModel& model() const { return model_; }

 private:
  BuildingModel model_;
  InputMode mode_;
  PlantState state_;
};

// Discrete linear model; the outdoor temperature is held over each sample.
class LinearPlant : public Plant {
 public:
  explicit LinearPlant(const StateSpaceModel& ss, const Eigen::VectorXd& x0);

  int zones() const override { return ss_.states(); }
  Eigen::VectorXd measure() const override { return ss_.C * x_; }
  void advance(const Eigen::VectorXd& u, const Scenario& scenario, double t0) override;
  void apply_event(const ComponentEvent& event) override;
  void set_state(const Eigen::VectorXd& x) override { x_ = x; }
  // Disturbance applied each sample; defaults to the scenario's outdoor temperature.
  void override_disturbance(bool zero) { zero_disturbance_ = zero; }

 private:
  StateSpaceModel ss_;
  Eigen::VectorXd x_;
  bool zero_disturbance_ = false;
};

struct SimOptions {
  ForecastMode forecast = ForecastMode::kPreview;
  int steps = -1;                // -1 uses scenario.steps()
  Eigen::VectorXd initial_input; // u(-1); empty means zero
  bool zero_reference = false;   // regulation runs: r = 0 and d = 0 for the controller
};

struct SimulationRecord {
  std::string controller;
  ForecastMode forecast = ForecastMode::kPreview;
  double Ts = 0.0;
  Eigen::VectorXd t;           // N+1 sample times
  Eigen::MatrixXd x;           // N+1 x n
  Eigen::MatrixXd u;           // N x m
  Eigen::VectorXd d;           // N outdoor temperatures
  Eigen::MatrixXd ref;         // N+1 x n
  Eigen::VectorXd solve_ms;    // N
  std::vector<int> iterations; // N
  std::vector<bool> converged; // N

  int steps() const { return static_cast<int>(u.rows()); }
};

// Receding-horizon loop: measure, forecast, solve, apply the first input.
// Controller errors are rethrown as SolverFailure with the step index.
SimulationRecord run_closed_loop(Controller& controller, Plant& plant, const Scenario& scenario,
                                 const SimOptions& options = {});

// Columns k,t,x1..xn,u1..um,d,ref1..refn,solve_ms; one row per control step.
// With timing off solve_ms is written as 0 so output is reproducible.
void write_trace_csv(std::ostream& out, const SimulationRecord& rec, bool timing = true);
void save_trace_csv(const std::string& path, const SimulationRecord& rec, bool timing = true);
// Rebuilds a record from a trace; the last state row repeats the last sample.
SimulationRecord read_trace_csv(std::istream& in);
SimulationRecord load_trace_csv(const std::string& path);

}  // namespace zonempc
