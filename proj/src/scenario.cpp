#include "zonempc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "zonempc/errors.hpp"

namespace zonempc {

double DisturbanceProfile::value(double t) const {
  switch (kind) {
    case Kind::kSinusoid: {
      const double h = t / 3600.0;
      return offset - amplitude * std::cos(2.0 * std::numbers::pi * (h - phase_hour) / period_hour);
    }
    case Kind::kStep:
      return t < step_time ? before : after;
    case Kind::kConstant:
      return before;
  }
  return 0.0;
}

int Scenario::zones() const { return schedule.empty() ? 0 : static_cast<int>(schedule.front().setpoints.size()); }

int Scenario::steps() const { return static_cast<int>(std::llround(duration / Ts)); }

Eigen::VectorXd Scenario::reference(double t) const {
  if (schedule.empty()) throw InvalidConfigError("scenario has no schedule");
  double h = std::fmod(t / 3600.0, 24.0);
  if (h < 0.0) h += 24.0;
  // Tolerate rounding at period boundaries, e.g. k Ts / 3600 = 5.9999999.
  h += 1e-9;
  const SchedulePeriod* current = &schedule.back();
  for (const auto& p : schedule) {
    if (p.start_hour <= h) current = &p;
  }
  return current->setpoints;
}

double Scenario::outdoor(double t) const { return disturbance.value(t); }

void Scenario::validate() const {
  if (!(duration > 0.0) || !(Ts > 0.0) || !(dt > 0.0))
    throw InvalidConfigError("scenario duration, Ts and dt must be positive");
  const double ratio = Ts / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw InvalidConfigError("Ts must be an integer multiple of dt");
  if (schedule.empty()) throw InvalidConfigError("scenario has no schedule");
  const auto n = schedule.front().setpoints.size();
  if (n == 0) throw InvalidConfigError("schedule has no zones");
  double last = -1.0;
  for (const auto& p : schedule) {
    if (p.setpoints.size() != n) throw InvalidConfigError("schedule periods differ in zone count");
    if (!p.setpoints.allFinite()) throw InvalidConfigError("schedule setpoints must be finite");
    if (p.start_hour <= last || p.start_hour < 0.0 || p.start_hour >= 24.0)
      throw InvalidConfigError("schedule periods must start in increasing order within [0, 24) h");
    last = p.start_hour;
  }
  if (schedule.front().start_hour != 0.0) throw InvalidConfigError("schedule must start at hour 0");
  if (forecast_noise < 0.0) throw InvalidConfigError("forecast_noise must be non-negative");
  for (const auto& e : events) {
    if (e.time < 0.0 || e.component.empty()) throw InvalidConfigError("invalid component event");
  }
}

Scenario build_default_scenario(int zones) {
  Scenario s;
  s.name = "default";
  const double hours[] = {0.0, 6.0, 12.0, 18.0, 21.0};
  const double levels[] = {22.0, 16.0, 16.0, 20.0, 22.0};
  for (int i = 0; i < 5; ++i) s.schedule.push_back({hours[i], Eigen::VectorXd::Constant(zones, levels[i])});
  return s;
}

Scenario build_step_scenario(int zones, double setpoint, double before, double size, double step_hour,
                             double duration_hours) {
  Scenario s;
  s.name = "outdoor-step";
  s.duration = duration_hours * 3600.0;
  s.schedule.push_back({0.0, Eigen::VectorXd::Constant(zones, setpoint)});
  s.disturbance.kind = DisturbanceProfile::Kind::kStep;
  s.disturbance.step_time = step_hour * 3600.0;
  s.disturbance.before = before;
  s.disturbance.after = before + size;
  return s;
}

std::string to_string(DisturbanceProfile::Kind kind) {
  switch (kind) {
    case DisturbanceProfile::Kind::kSinusoid: return "sinusoid";
    case DisturbanceProfile::Kind::kStep: return "step";
    case DisturbanceProfile::Kind::kConstant: return "constant";
  }
  return "sinusoid";
}

DisturbanceProfile::Kind disturbance_kind_from_string(const std::string& s) {
  if (s == "sinusoid") return DisturbanceProfile::Kind::kSinusoid;
  if (s == "step") return DisturbanceProfile::Kind::kStep;
  if (s == "constant") return DisturbanceProfile::Kind::kConstant;
  throw InvalidConfigError("unknown disturbance kind: " + s);
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.name = j.value("name", s.name);
    s.duration = j.value("duration_s", s.duration);
    s.Ts = j.value("Ts_s", s.Ts);
    s.dt = j.value("dt_s", s.dt);
    s.seed = j.value("seed", s.seed);
    s.forecast_noise = j.value("forecast_noise", s.forecast_noise);
    for (const auto& p : j.at("schedule")) {
      SchedulePeriod period;
      period.start_hour = p.at("start_hour").get<double>();
      const auto values = p.at("setpoints").get<std::vector<double>>();
      period.setpoints = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
      s.schedule.push_back(period);
    }
    if (j.contains("disturbance")) {
      const auto& d = j.at("disturbance");
      auto& out = s.disturbance;
      out.kind = disturbance_kind_from_string(d.value("kind", std::string("sinusoid")));
      out.offset = d.value("offset", out.offset);
      out.amplitude = d.value("amplitude", out.amplitude);
      out.phase_hour = d.value("phase_hour", out.phase_hour);
      out.period_hour = d.value("period_hour", out.period_hour);
      out.step_time = d.value("step_time_s", out.step_time);
      out.before = d.value("before", out.before);
      out.after = d.value("after", out.after);
    }
    if (j.contains("events")) {
      for (const auto& e : j.at("events"))
        s.events.push_back({e.at("time_s").get<double>(), e.at("component").get<std::string>(),
                            e.at("open").get<bool>()});
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfigError(std::string("scenario file: ") + e.what());
  }
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["duration_s"] = s.duration;
  j["Ts_s"] = s.Ts;
  j["dt_s"] = s.dt;
  j["seed"] = s.seed;
  j["forecast_noise"] = s.forecast_noise;
  j["schedule"] = nlohmann::json::array();
  for (const auto& p : s.schedule)
    j["schedule"].push_back({{"start_hour", p.start_hour},
                             {"setpoints", std::vector<double>(p.setpoints.data(), p.setpoints.data() + p.setpoints.size())}});
  const auto& d = s.disturbance;
  j["disturbance"] = {{"kind", to_string(d.kind)}, {"offset", d.offset},       {"amplitude", d.amplitude},
                      {"phase_hour", d.phase_hour}, {"period_hour", d.period_hour}, {"step_time_s", d.step_time},
                      {"before", d.before},         {"after", d.after}};
  j["events"] = nlohmann::json::array();
  for (const auto& e : s.events) j["events"].push_back({{"time_s", e.time}, {"component", e.component}, {"open", e.open}});
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfigError("scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidConfigError("cannot write scenario file: " + path);
  out << scenario_to_json(s).dump(2) << "\n";
}

}  // namespace zonempc
