#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "zonempc/simulation.hpp"

namespace zonempc {

struct Metrics {
  std::string controller;
  std::vector<double> overshoot;  // per zone, % of the setpoint step
  std::vector<double> peak;       // per zone, degC
  double control_overshoot = 0.0; // %, largest input overshoot after a setpoint step
  double control_area = 0.0;      // trapezoid of sum_i |u_i| over time, degC s
  double rmse = 0.0;              // tracking error over all zones and samples, degC
  double solve_time = 0.0;        // s, solver time only
  double mean_step_ms = 0.0;
  double max_step_ms = 0.0;
  long dual_iterations_total = 0;
  int dual_iterations_max = 0;
  int unconverged_steps = 0;
};

// Largest overshoot in % of the step size over all setpoint steps of one
// signal. The move from y(0) to r(0) counts as the first step.
double overshoot_percent(const Eigen::VectorXd& y, const Eigen::VectorXd& r);

// Trapezoid rule over the sample times.
double trapezoid_area(const Eigen::VectorXd& t, const Eigen::VectorXd& v);

// Uses control steps 0..N-1 of the record.
Metrics compute_metrics(const SimulationRecord& rec);

// controller,overshoot_1..n,peak_1..n,control_overshoot,control_area,rmse,
// solve_time_s,mean_step_ms,max_step_ms,dual_iterations_total,
// dual_iterations_max,unconverged_steps
void write_metrics_csv(std::ostream& out, const std::vector<Metrics>& rows);
void save_metrics_csv(const std::string& path, const std::vector<Metrics>& rows);
std::vector<Metrics> read_metrics_csv(std::istream& in);

}  // namespace zonempc
