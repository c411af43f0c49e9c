#include "zonempc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "zonempc/errors.hpp"
#include "zonempc/matrix_io.hpp"

namespace zonempc {

namespace {

constexpr double kStepTolerance = 1e-9;
constexpr double kInputStepTolerance = 1e-3;

double sign(double v) { return v > 0.0 ? 1.0 : -1.0; }

// Indices k > 0 where any column of r changes.
std::vector<int> change_points(const Eigen::MatrixXd& r, int N) {
  std::vector<int> out;
  for (int k = 1; k < N; ++k) {
    if ((r.row(k) - r.row(k - 1)).cwiseAbs().maxCoeff() > kStepTolerance) out.push_back(k);
  }
  return out;
}

}  // namespace

double overshoot_percent(const Eigen::VectorXd& y, const Eigen::VectorXd& r) {
  const int N = static_cast<int>(std::min(y.size(), r.size()));
  if (N == 0) return 0.0;
  double worst = 0.0;
  auto segment = [&](int start, double delta) {
    int end = start + 1;
    while (end < N && std::abs(r(end) - r(start)) <= kStepTolerance) ++end;
    double peak = 0.0;
    for (int k = start; k < end; ++k) peak = std::max(peak, sign(delta) * (y(k) - r(start)));
    worst = std::max(worst, 100.0 * peak / std::abs(delta));
  };
  const double initial = r(0) - y(0);
  if (std::abs(initial) > kStepTolerance) segment(0, initial);
  for (int k = 1; k < N; ++k) {
    const double delta = r(k) - r(k - 1);
    if (std::abs(delta) > kStepTolerance) segment(k, delta);
  }
  return worst;
}

double trapezoid_area(const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  double area = 0.0;
  for (Eigen::Index k = 1; k < std::min(t.size(), v.size()); ++k)
    area += 0.5 * (v(k) + v(k - 1)) * (t(k) - t(k - 1));
  return area;
}

Metrics compute_metrics(const SimulationRecord& rec) {
  const int N = rec.steps();
  if (N == 0 || rec.x.rows() < N || rec.ref.rows() < N) throw InvalidRecordError("record has no samples");
  const int n = static_cast<int>(rec.x.cols());
  const int m = static_cast<int>(rec.u.cols());
  if (!rec.x.topRows(N).allFinite() || !rec.u.allFinite()) throw InvalidRecordError("record has non-finite samples");

  Metrics out;
  out.controller = rec.controller;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd y = rec.x.col(i).head(N);
    const Eigen::VectorXd r = rec.ref.col(i).head(N);
    out.overshoot.push_back(overshoot_percent(y, r));
    out.peak.push_back(y.maxCoeff());
  }

  const auto steps = change_points(rec.ref, N);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const int start = steps[s];
    const int end = s + 1 < steps.size() ? steps[s + 1] : N;
    for (int i = 0; i < m; ++i) {
      const double before = rec.u(start - 1, i);
      const double after = rec.u(end - 1, i);
      const double delta = after - before;
      if (std::abs(delta) < kInputStepTolerance) continue;
      double peak = 0.0;
      for (int k = start; k < end; ++k) peak = std::max(peak, sign(delta) * (rec.u(k, i) - after));
      out.control_overshoot = std::max(out.control_overshoot, 100.0 * peak / std::abs(delta));
    }
  }

  out.control_area = trapezoid_area(rec.t.head(N), rec.u.cwiseAbs().rowwise().sum());
  out.rmse = std::sqrt((rec.x.topRows(N) - rec.ref.topRows(N)).squaredNorm() / (static_cast<double>(N) * n));
  if (rec.solve_ms.size() >= N) {
    out.solve_time = rec.solve_ms.head(N).sum() / 1e3;
    out.mean_step_ms = rec.solve_ms.head(N).mean();
    out.max_step_ms = rec.solve_ms.head(N).maxCoeff();
  }
  for (int k = 0; k < N && k < static_cast<int>(rec.iterations.size()); ++k) {
    out.dual_iterations_total += rec.iterations[k];
    out.dual_iterations_max = std::max(out.dual_iterations_max, rec.iterations[k]);
    if (k < static_cast<int>(rec.converged.size()) && !rec.converged[k]) ++out.unconverged_steps;
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<Metrics>& rows) {
  if (rows.empty()) throw InvalidRecordError("no metrics to write");
  const std::size_t n = rows.front().overshoot.size();
  out << "controller";
  for (std::size_t i = 1; i <= n; ++i) out << ",overshoot_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",peak_" << i;
  out << ",control_overshoot,control_area,rmse,solve_time_s,mean_step_ms,max_step_ms,"
         "dual_iterations_total,dual_iterations_max,unconverged_steps\n";
  for (const auto& m : rows) {
    if (m.overshoot.size() != n || m.peak.size() != n) throw InvalidRecordError("metrics rows differ in zone count");
    out << m.controller;
    for (double v : m.overshoot) out << ',' << format_number(v);
    for (double v : m.peak) out << ',' << format_number(v);
    out << ',' << format_number(m.control_overshoot) << ',' << format_number(m.control_area) << ','
        << format_number(m.rmse) << ',' << format_number(m.solve_time) << ',' << format_number(m.mean_step_ms)
        << ',' << format_number(m.max_step_ms) << ',' << m.dual_iterations_total << ','
        << m.dual_iterations_max << ',' << m.unconverged_steps << '\n';
  }
}

void save_metrics_csv(const std::string& path, const std::vector<Metrics>& rows) {
  std::ofstream out(path);
  if (!out) throw InvalidConfigError("cannot write metrics file: " + path);
  write_metrics_csv(out, rows);
}

std::vector<Metrics> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidRecordError("metrics file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t n = 0;
  for (const auto& h : header)
    if (h.rfind("overshoot_", 0) == 0) ++n;
  const std::size_t width = 1 + 2 * n + 9;
  if (header.size() != width || header[0] != "controller")
    throw InvalidRecordError("metrics line 1: unexpected header");
  std::vector<Metrics> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != width)
      throw InvalidRecordError("metrics line " + std::to_string(line_no) + ": wrong column count");
    try {
      Metrics m;
      m.controller = cells[0];
      for (std::size_t i = 0; i < n; ++i) m.overshoot.push_back(std::stod(cells[1 + i]));
      for (std::size_t i = 0; i < n; ++i) m.peak.push_back(std::stod(cells[1 + n + i]));
      std::size_t c = 1 + 2 * n;
      m.control_overshoot = std::stod(cells[c++]);
      m.control_area = std::stod(cells[c++]);
      m.rmse = std::stod(cells[c++]);
      m.solve_time = std::stod(cells[c++]);
      m.mean_step_ms = std::stod(cells[c++]);
      m.max_step_ms = std::stod(cells[c++]);
      m.dual_iterations_total = std::stol(cells[c++]);
      m.dual_iterations_max = std::stoi(cells[c++]);
      m.unconverged_steps = std::stoi(cells[c++]);
      rows.push_back(std::move(m));
    } catch (const std::logic_error&) {
      throw InvalidRecordError("metrics line " + std::to_string(line_no) + ": not a number");
    }
  }
  return rows;
}

}  // namespace zonempc
