#include "zonempc/linear_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "zonempc/errors.hpp"

namespace zonempc {

void StateSpaceModel::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || E.rows() != n || C.cols() != n)
    throw InvalidConfigError("state-space dimensions are inconsistent");
  if (!A.allFinite() || !B.allFinite() || !E.allFinite() || !C.allFinite())
    throw InvalidConfigError("state-space matrices contain non-finite entries");
}

StateSpaceModel linearize(const BuildingModel& model, const Eigen::VectorXd& nominal_m_ac,
                          InputMode mode) {
  const int n = model.zone_count();
  for (const auto& z : model.zones)
    if (!(z.air_mass > 0.0)) throw InvalidParameterError("zone " + std::to_string(z.zone_id) + " has zero air mass");
  model.validate();
  if (model.closure != InterfaceClosure::kMean)
    throw ModelConfigurationError("linearization requires the mean interface closure");
  if (nominal_m_ac.size() != 0 && nominal_m_ac.size() != n)
    throw InvalidConfigError("nominal_m_ac length does not match zone count");

  StateSpaceModel ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, n);
  ss.E = Eigen::MatrixXd::Zero(n, 1);
  ss.C = Eigen::MatrixXd::Identity(n, n);
  ss.input_mode = mode;
  ss.heater_conductance = Eigen::VectorXd::Zero(n);

  auto outdoor_term = [&](int i, double g) {
    ss.A(i, i) -= g;
    ss.E(i, 0) += g;
  };

  for (int i = 0; i < n; ++i) {
    const auto& p = model.zones[i];
    const double c = p.heat_capacity;
    outdoor_term(i, 1.0 / p.r_walls_out);
    for (const auto& comp : model.weights.components) {
      if (comp.zone != i) continue;
      if (comp.kind == ComponentKind::kOutdoorDoor) {
        outdoor_term(i, (comp.wc ? 1.0 / p.r_outdoor : 0.0) +
                            (comp.wf ? p.m_outdoor / kSecondsPerHour * c : 0.0));
      } else if (comp.kind == ComponentKind::kWindow) {
        outdoor_term(i, (comp.wc ? 1.0 / p.r_window : 0.0) +
                            (comp.wf ? p.m_window / kSecondsPerHour * c : 0.0));
      } else if (comp.kind == ComponentKind::kHeater && comp.wf) {
        const double m_ac = nominal_m_ac.size() ? nominal_m_ac(i) : p.m_ac;
        if (!(m_ac > 0.0)) throw InvalidParameterError("nominal M_ac must be positive for controlled zones");
        const double g = m_ac / kSecondsPerHour * c;
        ss.heater_conductance(i) = g;
        if (mode == InputMode::kSupplyTemperature) {
          ss.A(i, i) -= g;
          ss.B(i, i) += g;
        } else {
          ss.B(i, i) += 1.0;
        }
      }
    }
    for (const auto& [a, b] : model.adjacency) {
      if (a != i && b != i) continue;
      const int j = a == i ? b : a;
      double g = 1.0 / p.r_walls_in;
      for (const auto& comp : model.weights.components) {
        if (comp.kind != ComponentKind::kIndoorDoor) continue;
        if (!((comp.zone == a && comp.other_zone == b) || (comp.zone == b && comp.other_zone == a))) continue;
        g += (comp.wc ? 1.0 / p.r_indoor : 0.0) + (comp.wf ? p.m_indoor / kSecondsPerHour * c : 0.0);
      }
      // Interface temperature (x_i + x_j)/2 halves the conductance.
      ss.A(i, i) -= 0.5 * g;
      ss.A(i, j) += 0.5 * g;
    }
    const double inv_cap = 1.0 / (p.air_mass * c);
    ss.A.row(i) *= inv_cap;
    ss.B.row(i) *= inv_cap;
    ss.E.row(i) *= inv_cap;
  }
  return ss;
}

StateSpaceModel discretize(const StateSpaceModel& ss, double Ts) {
  if (!(Ts > 0.0)) throw InvalidConfigError("sampling period must be positive");
  ss.validate();
  const int n = ss.states();
  const int m = ss.inputs();
  const int q = ss.disturbances();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m + q, n + m + q);
  aug.topLeftCorner(n, n) = ss.A * Ts;
  aug.block(0, n, n, m) = ss.B * Ts;
  aug.block(0, n + m, n, q) = ss.E * Ts;
  const Eigen::MatrixXd phi = aug.exp();
  StateSpaceModel d = ss;
  d.A = phi.topLeftCorner(n, n);
  d.B = phi.block(0, n, n, m);
  d.E = phi.block(0, n + m, n, q);
  d.Ts = Ts;
  return d;
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out(r) = v(idx[r]);
  return out;
}

namespace {

void check_partition(const std::vector<std::vector<int>>& parts, int n, const char* what) {
  std::vector<int> count(n, 0);
  for (const auto& p : parts) {
    for (int k : p) {
      if (k < 0 || k >= n)
        throw InvalidPartitionError(std::string(what) + " partition index out of range");
      if (++count[k] > 1)
        throw InvalidPartitionError(std::string(what) + " partition overlaps at index " + std::to_string(k));
    }
  }
  for (int k = 0; k < n; ++k)
    if (count[k] == 0)
      throw InvalidPartitionError(std::string(what) + " partition misses index " + std::to_string(k));
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

SubsystemDecomposition decompose(const StateSpaceModel& ss, const std::vector<std::vector<int>>& partition) {
  if (ss.inputs() != ss.states() || ss.outputs() != ss.states())
    throw InvalidPartitionError("single partition requires square B and C; pass separate input/output partitions");
  return decompose(ss, partition, partition, partition);
}

SubsystemDecomposition decompose(const StateSpaceModel& ss,
                                 const std::vector<std::vector<int>>& state_parts,
                                 const std::vector<std::vector<int>>& input_parts,
                                 const std::vector<std::vector<int>>& output_parts) {
  ss.validate();
  const std::size_t count = state_parts.size();
  if (input_parts.size() != count || output_parts.size() != count)
    throw InvalidPartitionError("state, input and output partitions differ in length");
  check_partition(state_parts, ss.states(), "state");
  check_partition(input_parts, ss.inputs(), "input");
  check_partition(output_parts, ss.outputs(), "output");

  SubsystemDecomposition d;
  d.state_parts = state_parts;
  d.input_parts = input_parts;
  d.output_parts = output_parts;
  d.Ts = ss.Ts;
  d.A.assign(count, std::vector<Eigen::MatrixXd>(count));
  d.B.assign(count, std::vector<Eigen::MatrixXd>(count));
  d.C.assign(count, std::vector<Eigen::MatrixXd>(count));
  d.neighbors.assign(count, {});
  const auto dist = all_indices(ss.disturbances());
  for (std::size_t i = 0; i < count; ++i) {
    d.E.push_back(select(ss.E, state_parts[i], dist));
    for (std::size_t j = 0; j < count; ++j) {
      d.A[i][j] = select(ss.A, state_parts[i], state_parts[j]);
      d.B[i][j] = select(ss.B, state_parts[i], input_parts[j]);
      d.C[i][j] = select(ss.C, output_parts[i], state_parts[j]);
      if (i == j) continue;
      auto big = [](const Eigen::MatrixXd& m) {
        return m.size() > 0 && m.cwiseAbs().maxCoeff() > kCouplingThreshold;
      };
      if (big(d.A[i][j]) || big(d.B[i][j]) || big(d.C[i][j])) d.neighbors[i].push_back(static_cast<int>(j));
    }
  }
  return d;
}

std::vector<int> SubsystemDecomposition::dependents(int i) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (std::find(neighbors[j].begin(), neighbors[j].end(), i) != neighbors[j].end()) out.push_back(j);
  return out;
}

StateSpaceModel SubsystemDecomposition::reassemble() const {
  int n = 0, m = 0, p = 0;
  for (int i = 0; i < size(); ++i) {
    n += static_cast<int>(state_parts[i].size());
    m += static_cast<int>(input_parts[i].size());
    p += static_cast<int>(output_parts[i].size());
  }
  const auto q = E.empty() ? 0 : E[0].cols();
  StateSpaceModel ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, m);
  ss.C = Eigen::MatrixXd::Zero(p, n);
  ss.E = Eigen::MatrixXd::Zero(n, q);
  ss.Ts = Ts;
  for (int i = 0; i < size(); ++i) {
    for (std::size_t r = 0; r < state_parts[i].size(); ++r)
      ss.E.row(state_parts[i][r]) = E[i].row(r);
    for (int j = 0; j < size(); ++j) {
      for (std::size_t r = 0; r < state_parts[i].size(); ++r) {
        for (std::size_t c = 0; c < state_parts[j].size(); ++c)
          ss.A(state_parts[i][r], state_parts[j][c]) = A[i][j](r, c);
        for (std::size_t c = 0; c < input_parts[j].size(); ++c)
          ss.B(state_parts[i][r], input_parts[j][c]) = B[i][j](r, c);
      }
      for (std::size_t r = 0; r < output_parts[i].size(); ++r)
        for (std::size_t c = 0; c < state_parts[j].size(); ++c)
          ss.C(output_parts[i][r], state_parts[j][c]) = C[i][j](r, c);
    }
  }
  return ss;
}

Eigen::VectorXd SubsystemDecomposition::interaction(int i, const Eigen::VectorXd& x,
                                                    const Eigen::VectorXd& u) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(state_parts[i].size());
  for (int j = 0; j < size(); ++j) {
    if (j == i) continue;
    w += A[i][j] * select(x, state_parts[j]) + B[i][j] * select(u, input_parts[j]);
  }
  return w;
}

std::vector<std::vector<int>> zone_partition(int n) {
  std::vector<std::vector<int>> parts(n);
  for (int i = 0; i < n; ++i) parts[i] = {i};
  return parts;
}

}  // namespace zonempc
