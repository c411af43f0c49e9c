#include "zonempc/comparison.hpp"

#include <cstdio>
#include <future>
#include <ostream>

#include "zonempc/errors.hpp"

namespace zonempc {

StateSpaceModel build_discrete_model(const BuildingModel& model, double Ts, InputMode mode) {
  return discretize(linearize(model, Eigen::VectorXd(), mode), Ts);
}

namespace {

SimulationRecord run_named(Controller& c, const BuildingModel& model, InputMode mode, const Scenario& scenario,
                           const SimOptions& options) {
  BuildingPlant plant(model, mode);
  try {
    return run_closed_loop(c, plant, scenario, options);
  } catch (const SolverFailure& e) {
    throw SolverFailure(e.step(), c.name() + " controller: " + e.what());
  }
}

std::string fmt(double v, const char* format = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

ComparisonResult run_comparison(const BuildingModel& model, const StateSpaceModel& ss, const Scenario& scenario,
                                const MpcConfig& cmpc, const DmpcConfig& dmpc, const SimOptions& options, int jobs) {
  CentralizedMpc central(ss, cmpc);
  auto distributed = make_distributed_mpc(decompose(ss, zone_partition(ss.states())), dmpc);
  ComparisonResult out;
  if (jobs > 1) {
    auto fut = std::async(std::launch::async,
                          [&] { return run_named(central, model, ss.input_mode, scenario, options); });
    out.distributed = run_named(*distributed, model, ss.input_mode, scenario, options);
    out.centralized = fut.get();
  } else {
    out.centralized = run_named(central, model, ss.input_mode, scenario, options);
    out.distributed = run_named(*distributed, model, ss.input_mode, scenario, options);
  }
  out.centralized_metrics = compute_metrics(out.centralized);
  out.distributed_metrics = compute_metrics(out.distributed);
  return out;
}

double energy_delta_percent(const Metrics& centralized, const Metrics& distributed) {
  if (centralized.control_area == 0.0) return 0.0;
  return 100.0 * (distributed.control_area - centralized.control_area) / centralized.control_area;
}

void write_comparison_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& header,
                             const std::vector<Metrics>& rows) {
  out << "# zone temperature control comparison\n";
  for (const auto& [key, value] : header) out << key << ": " << value << "\n";
  out << "\n";
  if (rows.empty()) return;
  const std::size_t n = rows.front().overshoot.size();
  for (const auto& m : rows) {
    out << "[" << m.controller << "]\n";
    out << "  overshoot %:";
    for (std::size_t i = 0; i < n; ++i) out << " " << fmt(m.overshoot[i]);
    out << "\n  peak degC:  ";
    for (std::size_t i = 0; i < n; ++i) out << " " << fmt(m.peak[i]);
    out << "\n  control overshoot %: " << fmt(m.control_overshoot) << "\n";
    out << "  control area degC s: " << fmt(m.control_area, "%.6e") << "\n";
    out << "  tracking rmse degC:  " << fmt(m.rmse) << "\n";
    out << "  solver time s:       " << fmt(m.solve_time) << " (mean " << fmt(m.mean_step_ms) << " ms/step, max "
        << fmt(m.max_step_ms) << " ms)\n";
    out << "  coordination rounds: total " << m.dual_iterations_total << ", max " << m.dual_iterations_max
        << ", unconverged steps " << m.unconverged_steps << "\n\n";
  }
  const Metrics* c = nullptr;
  const Metrics* d = nullptr;
  for (const auto& m : rows) {
    if (m.controller == "centralized") c = &m;
    if (m.controller == "distributed") d = &m;
  }
  if (c && d) {
    out << "[delta distributed vs centralized]\n";
    out << "  control area %: " << fmt(energy_delta_percent(*c, *d), "%+.2f") << "\n";
    if (c->solve_time > 0.0)
      out << "  solver time %:  " << fmt(100.0 * (d->solve_time - c->solve_time) / c->solve_time, "%+.2f") << "\n";
    out << "  overshoot diff (pp):";
    for (std::size_t i = 0; i < n; ++i) out << " " << fmt(d->overshoot[i] - c->overshoot[i], "%+.3g");
    out << "\n";
  }
}

}  // namespace zonempc
