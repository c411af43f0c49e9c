#include "zonempc/plant_model.hpp"

#include <cmath>
#include <set>

#include "zonempc/errors.hpp"

namespace zonempc {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidParameterError(std::string("non-finite ") + what);
}

double interface_temperature(const BuildingModel& model, std::size_t pair,
                             const Eigen::VectorXd& x) {
  if (model.closure == InterfaceClosure::kFixed) return model.pair_init.at(pair);
  const auto& [a, b] = model.adjacency[pair];
  return 0.5 * (x(a) + x(b));
}

const Component* indoor_door(const BuildingModel& model, int a, int b) {
  for (const auto& c : model.weights.components) {
    if (c.kind != ComponentKind::kIndoorDoor) continue;
    if ((c.zone == a && c.other_zone == b) || (c.zone == b && c.other_zone == a)) return &c;
  }
  return nullptr;
}

}  // namespace

std::string to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::kOutdoorDoor: return "outdoor_door";
    case ComponentKind::kWindow: return "window";
    case ComponentKind::kIndoorDoor: return "indoor_door";
    case ComponentKind::kHeater: return "heater";
  }
  return "unknown";
}

ComponentKind component_kind_from_string(const std::string& s) {
  if (s == "outdoor_door") return ComponentKind::kOutdoorDoor;
  if (s == "window") return ComponentKind::kWindow;
  if (s == "indoor_door") return ComponentKind::kIndoorDoor;
  if (s == "heater") return ComponentKind::kHeater;
  throw ModelConfigurationError("unknown component kind '" + s + "'");
}

const Component* ComponentWeights::find(const std::string& id) const {
  for (const auto& c : components)
    if (c.id == id) return &c;
  return nullptr;
}

Component* ComponentWeights::find(const std::string& id) {
  for (auto& c : components)
    if (c.id == id) return &c;
  return nullptr;
}

std::vector<int> BuildingModel::neighbors(int zone) const {
  std::vector<int> out;
  for (const auto& [a, b] : adjacency) {
    if (a == zone) out.push_back(b);
    if (b == zone) out.push_back(a);
  }
  return out;
}

void BuildingModel::validate() const {
  const int n = zone_count();
  if (n == 0) throw ModelConfigurationError("building has no zones");
  for (const auto& z : zones) {
    if (!(z.heat_capacity > 0.0))
      throw ModelConfigurationError("zone " + std::to_string(z.zone_id) + ": heat capacity must be positive");
    if (!(z.air_mass > 0.0))
      throw InvalidParameterError("zone " + std::to_string(z.zone_id) + ": air mass must be positive");
    for (double r : {z.r_walls_out, z.r_walls_in, z.r_outdoor, z.r_indoor, z.r_window})
      if (!(r > 0.0))
        throw ModelConfigurationError("zone " + std::to_string(z.zone_id) + ": resistances must be positive");
    for (double m : {z.m_outdoor, z.m_indoor, z.m_window, z.m_ac})
      if (!(m >= 0.0))
        throw ModelConfigurationError("zone " + std::to_string(z.zone_id) + ": flow rates must be non-negative");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : adjacency) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw ModelConfigurationError("adjacency references a missing zone");
    if (a == b) throw ModelConfigurationError("adjacency must be irreflexive");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second)
      throw ModelConfigurationError("duplicate adjacency pair");
  }
  if (pair_init.size() != adjacency.size())
    throw ModelConfigurationError("one initial interface temperature per adjacency pair required");
  std::set<std::string> ids;
  for (const auto& c : weights.components) {
    if (!ids.insert(c.id).second) throw ModelConfigurationError("duplicate component id '" + c.id + "'");
    if (c.zone < 0 || c.zone >= n)
      throw ModelConfigurationError("component '" + c.id + "' references a missing zone");
    if (c.kind == ComponentKind::kIndoorDoor) {
      if (!seen.count({std::min(c.zone, c.other_zone), std::max(c.zone, c.other_zone)}))
        throw ModelConfigurationError("internal door '" + c.id + "' is not on an adjacent pair");
    }
    if (c.kind != ComponentKind::kHeater && c.wf == c.wc)
      throw ModelConfigurationError("component '" + c.id + "' must have exactly one of wf, wc set");
  }
}

HeaterCommand HeaterCommand::nominal(const BuildingModel& model, const Eigen::VectorXd& t_ac) {
  const int n = model.zone_count();
  HeaterCommand u;
  u.t_ac = t_ac;
  u.m_ac.resize(n);
  for (int i = 0; i < n; ++i) u.m_ac(i) = model.zones[i].m_ac;
  u.wf_ac = Eigen::VectorXd::Ones(n);
  return u;
}

double convection_rate(double m, double c_air, double t_adjacent, double t_room) {
  require_finite(m, "flow");
  require_finite(c_air, "heat capacity");
  require_finite(t_adjacent, "temperature");
  require_finite(t_room, "temperature");
  if (m < 0.0) throw InvalidParameterError("flow rate must be non-negative");
  if (c_air <= 0.0) throw InvalidParameterError("heat capacity must be positive");
  return m * c_air * (t_adjacent - t_room);
}

double conduction_rate(double r, double t_adjacent, double t_room) {
  if (!(r > 0.0)) throw InvalidParameterError("thermal resistance must be positive");
  require_finite(t_adjacent, "temperature");
  require_finite(t_room, "temperature");
  return (t_adjacent - t_room) / r;
}

double zone_heat_rate(const BuildingModel& model, int zone, const PlantState& state,
                      double t_outdoor, const HeaterCommand& u) {
  const int n = model.zone_count();
  if (zone < 0 || zone >= n) throw ModelConfigurationError("zone index out of range");
  if (state.x.size() != n) throw ModelConfigurationError("state length does not match zone count");
  if (model.pair_init.size() != model.adjacency.size())
    throw ModelConfigurationError("missing interface data for adjacency pairs");
  const ZoneThermalParams& p = model.zones[zone];
  const double c = p.heat_capacity;
  const double xi = state.x(zone);

  double q = conduction_rate(p.r_walls_out, t_outdoor, xi);

  for (std::size_t k = 0; k < model.adjacency.size(); ++k) {
    const auto& [a, b] = model.adjacency[k];
    if (a != zone && b != zone) continue;
    const double t_if = interface_temperature(model, k, state.x);
    q += conduction_rate(p.r_walls_in, t_if, xi);
    if (const Component* door = indoor_door(model, a, b)) {
      if (door->wc) q += conduction_rate(p.r_indoor, t_if, xi);
      if (door->wf) q += convection_rate(p.m_indoor / kSecondsPerHour, c, t_if, xi);
    }
  }

  for (const auto& comp : model.weights.components) {
    if (comp.zone != zone) continue;
    switch (comp.kind) {
      case ComponentKind::kOutdoorDoor:
        if (comp.wc) q += conduction_rate(p.r_outdoor, t_outdoor, xi);
        if (comp.wf) q += convection_rate(p.m_outdoor / kSecondsPerHour, c, t_outdoor, xi);
        break;
      case ComponentKind::kWindow:
        if (comp.wc) q += conduction_rate(p.r_window, t_outdoor, xi);
        if (comp.wf) q += convection_rate(p.m_window / kSecondsPerHour, c, t_outdoor, xi);
        break;
      case ComponentKind::kHeater:
        if (comp.wf && u.wf_ac(zone) != 0.0)
          q += convection_rate(u.m_ac(zone) / kSecondsPerHour, c, u.t_ac(zone), xi);
        break;
      case ComponentKind::kIndoorDoor:
        break;
    }
  }
  return q;
}

Eigen::VectorXd plant_derivative(const BuildingModel& model, const PlantState& state,
                                 double t_outdoor, const HeaterCommand& u) {
  const int n = model.zone_count();
  if (u.t_ac.size() != n || u.m_ac.size() != n || u.wf_ac.size() != n)
    throw ModelConfigurationError("heater command length does not match zone count");
  Eigen::VectorXd dx(n);
  for (int i = 0; i < n; ++i) {
    const auto& p = model.zones[i];
    dx(i) = zone_heat_rate(model, i, state, t_outdoor, u) / (p.air_mass * p.heat_capacity);
  }
  return dx;
}

Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                         double t, const Eigen::VectorXd& x, double dt) {
  const Eigen::VectorXd k1 = f(t, x);
  const Eigen::VectorXd k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

PlantState step_plant(const BuildingModel& model, const PlantState& state,
                      const std::function<double(double)>& t_outdoor, const HeaterCommand& u,
                      double dt) {
  if (!(dt > 0.0)) throw InvalidParameterError("integrator step must be positive");
  auto f = [&](double t, const Eigen::VectorXd& x) {
    PlantState s{x, t};
    for (int i = 0; i < x.size(); ++i)
      if (!std::isfinite(x(i)))
        throw IntegrationDivergenceError(i, "integration diverged in zone " + std::to_string(i + 1));
    return plant_derivative(model, s, t_outdoor(t), u);
  };
  PlantState next{rk4_step(f, state.t, state.x, dt), state.t + dt};
  for (int i = 0; i < next.x.size(); ++i)
    if (!std::isfinite(next.x(i)))
      throw IntegrationDivergenceError(i, "integration diverged in zone " + std::to_string(i + 1));
  return next;
}

PlantState step_plant(const BuildingModel& model, const PlantState& state, double t_outdoor,
                      const HeaterCommand& u, double dt) {
  return step_plant(model, state, [t_outdoor](double) { return t_outdoor; }, u, dt);
}

BuildingModel set_component_status(const BuildingModel& model, const std::string& component,
                                   bool open) {
  BuildingModel out = model;
  Component* c = out.weights.find(component);
  if (c == nullptr) throw NotFoundError("unknown component '" + component + "'");
  c->wf = open;
  if (c->kind != ComponentKind::kHeater) c->wc = !open;
  return out;
}

BuildingModel default_building(double nominal_m_ac) {
  constexpr double kC = 1005.4;
  constexpr double kMass = 102.0425;
  // Nominal values, degC*h/J.
  constexpr double kRIndoor = 0.000208;
  constexpr double kRWallsIn = 0.0000696;
  constexpr double kRWallsOut = 0.0000321;
  constexpr double kROutdoor = 0.000208;
  constexpr double kRWindow = 0.0000593542;

  BuildingModel b;
  for (int i = 0; i < 6; ++i) {
    ZoneThermalParams z;
    z.zone_id = i + 1;
    z.air_mass = kMass;
    z.heat_capacity = kC;
    z.r_walls_out = kRWallsOut * kSecondsPerHour;
    z.r_walls_in = kRWallsIn * kSecondsPerHour;
    z.r_outdoor = kROutdoor * kSecondsPerHour;
    z.r_indoor = kRIndoor * kSecondsPerHour;
    z.r_window = kRWindow * kSecondsPerHour;
    z.m_outdoor = 35.0;
    z.m_indoor = 20.0;
    z.m_window = 35.0;
    z.m_ac = nominal_m_ac;
    z.initial_temperature = 10.0;
    b.zones.push_back(z);
  }
  b.adjacency = {{1, 2}, {0, 4}, {3, 4}, {3, 5}};
  b.pair_init.assign(b.adjacency.size(), 10.0);

  auto& comps = b.weights.components;
  for (int z : {0, 1, 4, 5})
    comps.push_back({"outdoor" + std::to_string(z + 1), ComponentKind::kOutdoorDoor, z, -1, false, true});
  for (int z : {2, 3, 5})
    comps.push_back({"window" + std::to_string(z + 1), ComponentKind::kWindow, z, -1, false, true});
  for (const auto& [a, bz] : b.adjacency)
    comps.push_back({"door" + std::to_string(a + 1) + "-" + std::to_string(bz + 1),
                     ComponentKind::kIndoorDoor, a, bz, true, false});
  for (int z = 0; z < 6; ++z)
    comps.push_back({"heater" + std::to_string(z + 1), ComponentKind::kHeater, z, -1, true, false});
  return b;
}

PlantState initial_state(const BuildingModel& model) {
  PlantState s;
  s.x.resize(model.zone_count());
  for (int i = 0; i < model.zone_count(); ++i) s.x(i) = model.zones[i].initial_temperature;
  s.t = 0.0;
  return s;
}

}  // namespace zonempc
