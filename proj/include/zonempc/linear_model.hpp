#pragma once

#include <Eigen/Dense>

#include <vector>

#include "zonempc/plant_model.hpp"

namespace zonempc {

// Which quantity the linear model takes as the control input.
enum class InputMode {
  kSupplyTemperature,  // u_i = T_ac,i with M_ac frozen at nominal
  kLumpedHeat,         // u_i = heater power in W
};

struct StateSpaceModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd E;
  Eigen::MatrixXd C;
  double Ts = 0.0;  // 0 for continuous time
  InputMode input_mode = InputMode::kSupplyTemperature;
  // M_ac C per zone in W/degC, used to turn a lumped heat input into T_ac.
  Eigen::VectorXd heater_conductance;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int disturbances() const { return static_cast<int>(E.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }
  bool is_discrete() const { return Ts > 0.0; }
  void validate() const;
};

// Continuous linear model of the building. An empty nominal_m_ac uses each
// zone's m_ac (kg/h).
StateSpaceModel linearize(const BuildingModel& model,
                          const Eigen::VectorXd& nominal_m_ac = Eigen::VectorXd(),
                          InputMode mode = InputMode::kSupplyTemperature);

// Zero-order-hold discretization; E is held like B.
StateSpaceModel discretize(const StateSpaceModel& ss, double Ts);

struct SubsystemDecomposition {
  std::vector<std::vector<int>> state_parts;
  std::vector<std::vector<int>> input_parts;
  std::vector<std::vector<int>> output_parts;
  // Blocks indexed [i][j].
  std::vector<std::vector<Eigen::MatrixXd>> A;
  std::vector<std::vector<Eigen::MatrixXd>> B;
  std::vector<std::vector<Eigen::MatrixXd>> C;
  std::vector<Eigen::MatrixXd> E;  // rows of E for subsystem i
  std::vector<std::vector<int>> neighbors;
  double Ts = 0.0;

  int size() const { return static_cast<int>(state_parts.size()); }
  // Indices j with j in N_i, i.e. subsystems whose dynamics depend on i.
  std::vector<int> dependents(int i) const;
  StateSpaceModel reassemble() const;
  // w_i = sum_{j != i} A_ij x_j + B_ij u_j on full-length x and u.
  Eigen::VectorXd interaction(int i, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

inline constexpr double kCouplingThreshold = 1e-12;

// One partition for states, inputs and outputs (square building case).
SubsystemDecomposition decompose(const StateSpaceModel& ss, const std::vector<std::vector<int>>& partition);

SubsystemDecomposition decompose(const StateSpaceModel& ss,
                                 const std::vector<std::vector<int>>& state_parts,
                                 const std::vector<std::vector<int>>& input_parts,
                                 const std::vector<std::vector<int>>& output_parts);

// Singleton partition {0}, {1}, ..., {n-1}.
std::vector<std::vector<int>> zone_partition(int n);

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                       const std::vector<int>& cols);
Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& idx);

}  // namespace zonempc
