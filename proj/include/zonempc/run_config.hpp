#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "zonempc/centralized_mpc.hpp"
#include "zonempc/distributed_mpc.hpp"
#include "zonempc/scenario.hpp"
#include "zonempc/simulation.hpp"

namespace zonempc {

// Everything a run needs. Empty paths select the built-in building and the
// default 24 h scenario.
struct RunConfig {
  std::string model_path;
  std::string scenario_path;
  std::string controller = "both";  // centralized | distributed | both
  int P = 24;
  int M = 6;
  double q = 1.5;
  double r = 1.0 / 1600.0;
  InputBounds bounds;
  std::string input_mode = "supply_temperature";  // or lumped_heat
  ForecastMode forecast = ForecastMode::kPreview;
  std::string out_dir = "out";
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  bool timing = true;
  bool transcript = false;

  // Distributed controller.
  Coordination coordination = Coordination::kGoal;
  double s = 1.0;
  double terminal = -1.0;
  double smoothing = 0.5;
  double rho = 10.0;
  StepRule step_rule = StepRule::kConstant;
  double step0 = 0.0;
  double tolerance = 1e-4;
  int max_iterations = 50;
  int threads = 1;

  void validate() const;
};

InputMode input_mode_from_string(const std::string& s);
std::string to_string(InputMode m);

// Keys missing from j keep the values of base.
RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base = {});
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::string& path, const RunConfig& base = {});
void save_config(const RunConfig& cfg, const std::string& path);

BuildingModel load_run_model(const RunConfig& cfg);
Scenario load_run_scenario(const RunConfig& cfg);

MpcConfig make_mpc_config(const RunConfig& cfg, const StateSpaceModel& ss);
DmpcConfig make_dmpc_config(const RunConfig& cfg);
// `which` is "centralized" or "distributed".
std::unique_ptr<Controller> make_controller(const std::string& which, const RunConfig& cfg,
                                            const StateSpaceModel& ss);

}  // namespace zonempc
