#pragma once

// Nonlinear lumped thermal model of a multi-zone building.
//
// Each zone is one air volume whose temperature obeys
//   m_i C dx_i/dt = sum of conduction and convection heat flows,
// with binary weights switching doors, windows and heaters.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace zonempc {

// Seconds per hour, used for kg/h <-> kg/s and resistance unit conversion.
inline constexpr double kSecondsPerHour = 3600.0;

struct ZoneThermalParams {
  int zone_id = 0;              // 1-based label
  double air_mass = 0.0;        // kg
  double heat_capacity = 0.0;   // J/(kg degC)
  double r_walls_out = 0.0;     // degC/W
  double r_walls_in = 0.0;      // degC/W
  double r_outdoor = 0.0;       // degC/W, exit door
  double r_indoor = 0.0;        // degC/W, internal door
  double r_window = 0.0;        // degC/W
  double m_outdoor = 0.0;       // kg/h
  double m_indoor = 0.0;        // kg/h
  double m_window = 0.0;        // kg/h
  double m_ac = 0.0;            // kg/h, nominal heater flow
  double initial_temperature = 10.0;  // degC
};

enum class ComponentKind { kOutdoorDoor, kWindow, kIndoorDoor, kHeater };

std::string to_string(ComponentKind kind);
ComponentKind component_kind_from_string(const std::string& s);

// One switchable component. Doors and windows keep wf + wc = 1; a heater
// only uses wf (its availability).
struct Component {
  std::string id;
  ComponentKind kind = ComponentKind::kHeater;
  int zone = 0;        // 0-based zone index
  int other_zone = -1; // second zone for internal doors
  bool wf = false;     // convection weight
  bool wc = true;      // conduction weight
};

struct ComponentWeights {
  std::vector<Component> components;

  const Component* find(const std::string& id) const;
  Component* find(const std::string& id);
};

enum class InterfaceClosure { kMean, kFixed };

struct BuildingModel {
  std::vector<ZoneThermalParams> zones;
  // Unordered zone pairs (0-based, first < second).
  std::vector<std::pair<int, int>> adjacency;
  ComponentWeights weights;
  // Initial interface temperature per adjacency pair, degC.
  std::vector<double> pair_init;
  InterfaceClosure closure = InterfaceClosure::kMean;

  int zone_count() const { return static_cast<int>(zones.size()); }
  std::vector<int> neighbors(int zone) const;
  // Throws ModelConfigurationError on any broken invariant.
  void validate() const;
};

struct PlantState {
  Eigen::VectorXd x;  // degC
  double t = 0.0;     // s
};

struct HeaterCommand {
  Eigen::VectorXd t_ac;   // degC
  Eigen::VectorXd m_ac;   // kg/h
  Eigen::VectorXd wf_ac;  // 0 or 1

  // Heater on at nominal flow in every zone with the given supply temperatures.
  static HeaterCommand nominal(const BuildingModel& model, const Eigen::VectorXd& t_ac);
};

// M C (T_adjacent - T_room). With M in kg/h the result is J/h.
double convection_rate(double m, double c_air, double t_adjacent, double t_room);

// (T_adjacent - T_room) / R in W.
double conduction_rate(double r, double t_adjacent, double t_room);

// Net heat flow into one zone in W.
double zone_heat_rate(const BuildingModel& model, int zone, const PlantState& state,
                      double t_outdoor, const HeaterCommand& u);

// dx/dt in degC/s.
Eigen::VectorXd plant_derivative(const BuildingModel& model, const PlantState& state,
                                 double t_outdoor, const HeaterCommand& u);

// One fixed-step RK4 step with constant outdoor temperature.
PlantState step_plant(const BuildingModel& model, const PlantState& state, double t_outdoor,
                      const HeaterCommand& u, double dt);

// RK4 step with a time-varying outdoor temperature.
PlantState step_plant(const BuildingModel& model, const PlantState& state,
                      const std::function<double(double)>& t_outdoor, const HeaterCommand& u,
                      double dt);

// Generic RK4 step, exposed for convergence tests.
Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                         double t, const Eigen::VectorXd& x, double dt);

BuildingModel set_component_status(const BuildingModel& model, const std::string& component,
                                   bool open);

// Six-room building with default parameters. Nominal resistances are given in
// degC*h/J and converted to degC/W.
BuildingModel default_building(double nominal_m_ac = 50.0);

PlantState initial_state(const BuildingModel& model);

}  // namespace zonempc
