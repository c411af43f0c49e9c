#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "zonempc/centralized_mpc.hpp"
#include "zonempc/distributed_mpc.hpp"
#include "zonempc/metrics.hpp"
#include "zonempc/simulation.hpp"

namespace zonempc {

// ZOH model of the building at the scenario's sampling period.
StateSpaceModel build_discrete_model(const BuildingModel& model, double Ts,
                                     InputMode mode = InputMode::kSupplyTemperature);

struct ComparisonResult {
  SimulationRecord centralized;
  SimulationRecord distributed;
  Metrics centralized_metrics;
  Metrics distributed_metrics;
};

// Runs both controllers against identical copies of the plant and scenario.
// With jobs > 1 the two runs execute concurrently. Failures are rethrown as
// SolverFailure naming the controller.
ComparisonResult run_comparison(const BuildingModel& model, const StateSpaceModel& ss, const Scenario& scenario,
                                const MpcConfig& cmpc, const DmpcConfig& dmpc, const SimOptions& options = {},
                                int jobs = 1);

// 100 (area_d - area_c) / area_c.
double energy_delta_percent(const Metrics& centralized, const Metrics& distributed);

// Plain-text report: header lines, one table row per controller and, when
// both controllers are present, percentage deltas.
void write_comparison_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& header,
                             const std::vector<Metrics>& rows);

}  // namespace zonempc
