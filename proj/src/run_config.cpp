#include "zonempc/run_config.hpp"

#include <filesystem>
#include <fstream>

#include "zonempc/building_io.hpp"
#include "zonempc/errors.hpp"

namespace zonempc {

void RunConfig::validate() const {
  if (controller != "centralized" && controller != "distributed" && controller != "both")
    throw InvalidConfigError("controller must be centralized, distributed or both");
  if (P < 1 || M < 1 || M > P) throw InvalidConfigError("horizons must satisfy P >= M >= 1");
  if (!(q > 0.0) || !(r > 0.0)) throw InvalidConfigError("weights q and r must be positive");
  if (bounds.enabled && !(bounds.lower < bounds.upper)) throw InvalidConfigError("input bounds are empty");
  if (jobs < 1 || threads < 1) throw InvalidConfigError("jobs and threads must be at least 1");
  input_mode_from_string(input_mode);
  if (!model_path.empty() && !std::filesystem::exists(model_path))
    throw InvalidConfigError("model file not found: " + model_path);
  if (!scenario_path.empty() && !std::filesystem::exists(scenario_path))
    throw InvalidConfigError("scenario file not found: " + scenario_path);
}

InputMode input_mode_from_string(const std::string& s) {
  if (s == "supply_temperature") return InputMode::kSupplyTemperature;
  if (s == "lumped_heat") return InputMode::kLumpedHeat;
  throw InvalidConfigError("unknown input mode: " + s);
}

std::string to_string(InputMode m) {
  return m == InputMode::kSupplyTemperature ? "supply_temperature" : "lumped_heat";
}

RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base) {
  RunConfig c = base;
  try {
    c.model_path = j.value("model", c.model_path);
    c.scenario_path = j.value("scenario", c.scenario_path);
    c.controller = j.value("controller", c.controller);
    c.P = j.value("horizon_p", c.P);
    c.M = j.value("horizon_m", c.M);
    c.q = j.value("q", c.q);
    c.r = j.value("r", c.r);
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      c.bounds.enabled = b.value("enabled", c.bounds.enabled);
      c.bounds.lower = b.value("lower", c.bounds.lower);
      c.bounds.upper = b.value("upper", c.bounds.upper);
    }
    c.input_mode = j.value("input_mode", c.input_mode);
    if (j.contains("forecast")) c.forecast = forecast_mode_from_string(j.at("forecast").get<std::string>());
    c.out_dir = j.value("out", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    c.timing = j.value("timing", c.timing);
    c.transcript = j.value("transcript", c.transcript);
    if (j.contains("coordination"))
      c.coordination = coordination_from_string(j.at("coordination").get<std::string>());
    if (j.contains("distributed")) {
      const auto& d = j.at("distributed");
      c.s = d.value("s", c.s);
      c.terminal = d.value("terminal", c.terminal);
      c.smoothing = d.value("smoothing", c.smoothing);
      c.rho = d.value("rho", c.rho);
      if (d.contains("step_rule")) c.step_rule = step_rule_from_string(d.at("step_rule").get<std::string>());
      c.step0 = d.value("step0", c.step0);
      c.tolerance = d.value("tolerance", c.tolerance);
      c.max_iterations = d.value("max_iterations", c.max_iterations);
      c.threads = d.value("threads", c.threads);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfigError(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = c.model_path;
  j["scenario"] = c.scenario_path;
  j["controller"] = c.controller;
  j["horizon_p"] = c.P;
  j["horizon_m"] = c.M;
  j["q"] = c.q;
  j["r"] = c.r;
  j["bounds"] = {{"enabled", c.bounds.enabled}, {"lower", c.bounds.lower}, {"upper", c.bounds.upper}};
  j["input_mode"] = c.input_mode;
  j["forecast"] = to_string(c.forecast);
  j["out"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["seed"] = c.seed ? nlohmann::json(*c.seed) : nlohmann::json(nullptr);
  j["timing"] = c.timing;
  j["transcript"] = c.transcript;
  j["coordination"] = to_string(c.coordination);
  j["distributed"] = {{"s", c.s},
                      {"terminal", c.terminal},
                      {"smoothing", c.smoothing},
                      {"rho", c.rho},
                      {"step_rule", to_string(c.step_rule)},
                      {"step0", c.step0},
                      {"tolerance", c.tolerance},
                      {"max_iterations", c.max_iterations},
                      {"threads", c.threads}};
  return j;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfigError("config file " + path + ": " + e.what());
  }
  return config_from_json(j, base);
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidConfigError("cannot write config file: " + path);
  out << config_to_json(cfg).dump(2) << "\n";
}

BuildingModel load_run_model(const RunConfig& cfg) {
  if (cfg.model_path.empty()) return default_building();
  if (!std::filesystem::exists(cfg.model_path)) throw InvalidConfigError("model file not found: " + cfg.model_path);
  return load_building(cfg.model_path);
}

Scenario load_run_scenario(const RunConfig& cfg) {
  Scenario s;
  if (cfg.scenario_path.empty()) {
    s = build_default_scenario();
  } else {
    if (!std::filesystem::exists(cfg.scenario_path))
      throw InvalidConfigError("scenario file not found: " + cfg.scenario_path);
    s = load_scenario(cfg.scenario_path);
  }
  if (cfg.seed) s.seed = *cfg.seed;
  return s;
}

MpcConfig make_mpc_config(const RunConfig& cfg, const StateSpaceModel& ss) {
  MpcConfig m = MpcConfig::defaults(ss, cfg.P, cfg.M, cfg.q, cfg.r);
  m.bounds = cfg.bounds;
  return m;
}

DmpcConfig make_dmpc_config(const RunConfig& cfg) {
  DmpcConfig d;
  d.coordination = cfg.coordination;
  d.P = cfg.P;
  d.M = cfg.M;
  d.q = cfg.q;
  d.r = cfg.r;
  d.s = cfg.s;
  d.terminal = cfg.terminal;
  d.smoothing = cfg.smoothing;
  d.rho = cfg.rho;
  d.step_rule = cfg.step_rule;
  d.step0 = cfg.step0;
  d.tolerance = cfg.tolerance;
  d.max_iterations = cfg.max_iterations;
  d.bounds = cfg.bounds;
  d.record_transcript = cfg.transcript;
  d.threads = cfg.threads;
  return d;
}

std::unique_ptr<Controller> make_controller(const std::string& which, const RunConfig& cfg,
                                            const StateSpaceModel& ss) {
  if (which == "centralized") return std::make_unique<CentralizedMpc>(ss, make_mpc_config(cfg, ss));
  if (which == "distributed")
    return make_distributed_mpc(decompose(ss, zone_partition(ss.states())), make_dmpc_config(cfg));
  throw InvalidConfigError("unknown controller: " + which);
}

}  // namespace zonempc
