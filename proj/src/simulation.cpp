#include "zonempc/simulation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "zonempc/errors.hpp"
#include "zonempc/matrix_io.hpp"

namespace zonempc {

std::string to_string(ForecastMode m) { return m == ForecastMode::kPreview ? "preview" : "persistence"; }

ForecastMode forecast_mode_from_string(const std::string& s) {
  if (s == "preview") return ForecastMode::kPreview;
  if (s == "persistence") return ForecastMode::kPersistence;
  throw InvalidConfigError("unknown forecast mode: " + s);
}

BuildingPlant::BuildingPlant(const BuildingModel& model, InputMode mode)
    : model_(model), mode_(mode), state_(initial_state(model)) {
  model_.validate();
}

void BuildingPlant::advance(const Eigen::VectorXd& u, const Scenario& scenario, double t0) {
  if (u.size() != zones()) throw InvalidConfigError("input size does not match the zone count");
  Eigen::VectorXd t_ac = u;
  if (mode_ == InputMode::kLumpedHeat) {
    // Heat in W delivered through the nominal heater flow: T_ac = x + q / (M_ac C).
    for (int i = 0; i < zones(); ++i) {
      const auto& z = model_.zones[i];
      const double g = z.m_ac / kSecondsPerHour * z.heat_capacity;
      if (!(g > 0.0)) throw ModelConfigurationError("lumped heat input needs a positive heater flow");
      t_ac(i) = state_.x(i) + u(i) / g;
    }
  }
  const HeaterCommand cmd = HeaterCommand::nominal(model_, t_ac);
  const int sub = static_cast<int>(std::llround(scenario.Ts / scenario.dt));
  state_.t = t0;
  auto outdoor = [&scenario](double t) { return scenario.outdoor(t); };
  for (int s = 0; s < sub; ++s) state_ = step_plant(model_, state_, outdoor, cmd, scenario.dt);
}

void BuildingPlant::apply_event(const ComponentEvent& event) {
  model_ = set_component_status(model_, event.component, event.open);
}

LinearPlant::LinearPlant(const StateSpaceModel& ss, const Eigen::VectorXd& x0) : ss_(ss), x_(x0) {
  ss_.validate();
  if (!ss_.is_discrete()) throw InvalidConfigError("linear plant needs a discrete model");
  if (x0.size() != ss_.states()) throw InvalidConfigError("initial state size mismatch");
}

void LinearPlant::advance(const Eigen::VectorXd& u, const Scenario& scenario, double t0) {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(ss_.disturbances(), zero_disturbance_ ? 0.0 : scenario.outdoor(t0));
  x_ = ss_.A * x_ + ss_.B * u + ss_.E * d;
}

void LinearPlant::apply_event(const ComponentEvent& event) {
  throw InvalidConfigError("linear plant has no component '" + event.component + "'");
}

SimulationRecord run_closed_loop(Controller& controller, Plant& plant, const Scenario& scenario,
                                 const SimOptions& options) {
  scenario.validate();
  const int N = options.steps >= 0 ? options.steps : scenario.steps();
  const int P = controller.horizon();
  const int n = plant.zones();
  const int m = controller.inputs();
  if (scenario.zones() != n) throw InvalidConfigError("scenario zone count does not match the plant");

  SimulationRecord rec;
  rec.controller = controller.name();
  rec.forecast = options.forecast;
  rec.Ts = scenario.Ts;
  rec.t.resize(N + 1);
  rec.x.resize(N + 1, n);
  rec.u.resize(N, m);
  rec.d.resize(N);
  rec.ref.resize(N + 1, n);
  rec.solve_ms.resize(N);
  rec.iterations.assign(N, 0);
  rec.converged.assign(N, true);

  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Eigen::VectorXd u_prev = options.initial_input.size() ? options.initial_input : Eigen::VectorXd::Zero(m);
  std::size_t next_event = 0;
  std::vector<ComponentEvent> events = scenario.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const ComponentEvent& a, const ComponentEvent& b) { return a.time < b.time; });

  for (int k = 0; k < N; ++k) {
    const double t = k * scenario.Ts;
    while (next_event < events.size() && events[next_event].time <= t + 1e-9)
      plant.apply_event(events[next_event++]);

    StepContext ctx;
    ctx.k = k;
    ctx.t = t;
    ctx.y = plant.measure();
    ctx.u_prev = u_prev;
    ctx.reference.resize(P + 1, n);
    ctx.forecast.resize(P, 1);
    const double d_now = scenario.outdoor(t);
    for (int l = 0; l <= P; ++l) ctx.reference.row(l) = scenario.reference(t + l * scenario.Ts).transpose();
    for (int l = 0; l < P; ++l) {
      if (options.forecast == ForecastMode::kPreview) {
        double f = scenario.outdoor(t + l * scenario.Ts);
        if (l > 0 && scenario.forecast_noise > 0.0) f += scenario.forecast_noise * noise(rng);
        ctx.forecast(l, 0) = f;
      } else {
        ctx.forecast(l, 0) = d_now;
      }
    }
    if (options.zero_reference) {
      ctx.reference.setZero();
      ctx.forecast.setZero();
    }

    ControlDecision dec;
    try {
      dec = controller.step(ctx);
    } catch (const SolverFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw SolverFailure(k, "step " + std::to_string(k) + ": " + e.what());
    }
    if (dec.u.size() != m || !dec.u.allFinite())
      throw SolverFailure(k, "step " + std::to_string(k) + ": controller returned an invalid input");

    rec.t(k) = t;
    rec.x.row(k) = ctx.y.transpose();
    rec.u.row(k) = dec.u.transpose();
    rec.d(k) = d_now;
    rec.ref.row(k) = ctx.reference.row(0);
    rec.solve_ms(k) = dec.solve_seconds * 1e3;
    rec.iterations[k] = dec.iterations;
    rec.converged[k] = dec.converged;

    try {
      plant.advance(dec.u, scenario, t);
    } catch (const IntegrationDivergenceError& e) {
      throw SolverFailure(k, "step " + std::to_string(k) + ": plant diverged in zone " +
                                 std::to_string(e.zone() + 1));
    }
    u_prev = dec.u;
  }
  rec.t(N) = N * scenario.Ts;
  rec.x.row(N) = plant.measure().transpose();
  rec.ref.row(N) = options.zero_reference ? Eigen::RowVectorXd::Zero(n)
                                          : Eigen::RowVectorXd(scenario.reference(N * scenario.Ts).transpose());
  return rec;
}

void write_trace_csv(std::ostream& out, const SimulationRecord& rec, bool timing) {
  const int n = static_cast<int>(rec.x.cols());
  const int m = static_cast<int>(rec.u.cols());
  out << "k,t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",d";
  for (int i = 1; i <= n; ++i) out << ",ref" << i;
  out << ",solve_ms\n";
  for (int k = 0; k < rec.steps(); ++k) {
    out << k << ',' << format_number(rec.t(k));
    for (int i = 0; i < n; ++i) out << ',' << format_number(rec.x(k, i));
    for (int i = 0; i < m; ++i) out << ',' << format_number(rec.u(k, i));
    out << ',' << format_number(rec.d(k));
    for (int i = 0; i < n; ++i) out << ',' << format_number(rec.ref(k, i));
    out << ',' << (timing ? format_number(rec.solve_ms(k)) : std::string("0")) << '\n';
  }
}

void save_trace_csv(const std::string& path, const SimulationRecord& rec, bool timing) {
  std::ofstream out(path);
  if (!out) throw InvalidConfigError("cannot write trace file: " + path);
  write_trace_csv(out, rec, timing);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidRecordError("trace line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

}  // namespace

SimulationRecord read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidRecordError("trace is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  int n = 0, m = 0;
  for (const auto& h : header) {
    if (h.size() > 1 && h[0] == 'x') ++n;
    if (h.size() > 1 && h[0] == 'u') ++m;
  }
  const std::size_t width = 2 + n + m + 1 + n + 1;
  if (n == 0 || header.size() != width || header[0] != "k" || header[1] != "t" ||
      header[2 + n + m] != "d" || header.back() != "solve_ms")
    throw InvalidRecordError("trace line 1: unexpected header");

  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != width)
      throw InvalidRecordError("trace line " + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " columns, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidRecordError("trace has no samples");

  const int N = static_cast<int>(rows.size());
  SimulationRecord rec;
  rec.t.resize(N + 1);
  rec.x.resize(N + 1, n);
  rec.u.resize(N, m);
  rec.d.resize(N);
  rec.ref.resize(N + 1, n);
  rec.solve_ms.resize(N);
  rec.iterations.assign(N, 0);
  rec.converged.assign(N, true);
  for (int k = 0; k < N; ++k) {
    const auto& r = rows[k];
    rec.t(k) = r[1];
    for (int i = 0; i < n; ++i) rec.x(k, i) = r[2 + i];
    for (int i = 0; i < m; ++i) rec.u(k, i) = r[2 + n + i];
    rec.d(k) = r[2 + n + m];
    for (int i = 0; i < n; ++i) rec.ref(k, i) = r[3 + n + m + i];
    rec.solve_ms(k) = r.back();
  }
  rec.Ts = N > 1 ? rec.t(1) - rec.t(0) : 0.0;
  rec.t(N) = rec.t(N - 1) + rec.Ts;
  rec.x.row(N) = rec.x.row(N - 1);
  rec.ref.row(N) = rec.ref.row(N - 1);
  return rec;
}

SimulationRecord load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open trace file: " + path);
  return read_trace_csv(in);
}

}  // namespace zonempc
