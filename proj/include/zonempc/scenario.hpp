#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace zonempc {

// Setpoints from start_hour until the next period (hours within a day).
struct SchedulePeriod {
  double start_hour = 0.0;
  Eigen::VectorXd setpoints;  // one per zone
};

struct DisturbanceProfile {
  enum class Kind { kSinusoid, kStep, kConstant };
  Kind kind = Kind::kSinusoid;
  // Sinusoid: offset - amplitude cos(2 pi (h - phase_hour) / period_hour).
  double offset = -1.0;
  double amplitude = 5.0;
  double phase_hour = 4.0;
  double period_hour = 24.0;
  // Step: before until step_time (s), after from then on. Constant uses `before`.
  double step_time = 0.0;
  double before = 0.0;
  double after = 0.0;

  double value(double t) const;
};

struct ComponentEvent {
  double time = 0.0;  // s
  std::string component;
  bool open = false;
};

struct Scenario {
  std::string name = "default";
  double duration = 86400.0;  // s
  double Ts = 300.0;          // controller sampling period, s
  double dt = 10.0;           // plant integration step, s
  std::vector<SchedulePeriod> schedule;
  DisturbanceProfile disturbance;
  std::vector<ComponentEvent> events;
  std::uint64_t seed = 0;
  double forecast_noise = 0.0;  // std dev of forecast errors, degC

  int zones() const;
  int steps() const;
  // Schedule repeats every 24 h.
  Eigen::VectorXd reference(double t) const;
  double outdoor(double t) const;
  void validate() const;
};

// 24 h, five periods: 22 / 16 / 16 / 20 / 22 degC with boundaries at 6, 12,
// 18 and 21 h; outdoor temperature -1 - 5 cos(2 pi (h - 4) / 24).
Scenario build_default_scenario(int zones = 6);

// Constant setpoint with an outdoor step of `size` degC at `step_hour`.
Scenario build_step_scenario(int zones = 6, double setpoint = 20.0, double before = -6.0,
                             double size = 10.0, double step_hour = 6.0, double duration_hours = 12.0);

std::string to_string(DisturbanceProfile::Kind kind);
DisturbanceProfile::Kind disturbance_kind_from_string(const std::string& s);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

}  // namespace zonempc
