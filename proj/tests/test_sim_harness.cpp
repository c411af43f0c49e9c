#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "zonempc/comparison.hpp"
#include "zonempc/errors.hpp"
#include "zonempc/metrics.hpp"
#include "zonempc/scenario.hpp"
#include "zonempc/simulation.hpp"

using namespace zonempc;

namespace {

// Records every context it sees and returns a fixed input.
class SpyController : public Controller {
 public:
  SpyController(int inputs, int horizon, double u = 1.0) : m_(inputs), P_(horizon), u_(u) {}
  std::string name() const override { return "spy"; }
  int horizon() const override { return P_; }
  int inputs() const override { return m_; }
  void reset() override { seen.clear(); }
  ControlDecision step(const StepContext& ctx) override {
    seen.push_back(ctx);
    if (fail_at >= 0 && ctx.k == fail_at) throw std::runtime_error("boom");
    ControlDecision d;
    d.u = Eigen::VectorXd::Constant(m_, u_);
    d.solve_seconds = 0.001;
    d.iterations = 3;
    return d;
  }
  std::vector<StepContext> seen;
  int fail_at = -1;

 private:
  int m_, P_;
  double u_;
};

SimulationRecord short_cmpc_run(int steps) {
  const BuildingModel model = default_building();
  const StateSpaceModel ss = build_discrete_model(model, 300.0);
  CentralizedMpc mpc(ss, MpcConfig::defaults(ss));
  BuildingPlant plant(model);
  SimOptions opt;
  opt.steps = steps;
  return run_closed_loop(mpc, plant, build_default_scenario(), opt);
}

SimulationRecord synthetic_record(const Eigen::VectorXd& t, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                                  const Eigen::MatrixXd& ref) {
  SimulationRecord rec;
  rec.controller = "synthetic";
  const int N = static_cast<int>(u.rows());
  rec.t = t;
  rec.x = x;
  rec.u = u;
  rec.ref = ref;
  rec.d = Eigen::VectorXd::Zero(N);
  rec.solve_ms = Eigen::VectorXd::Zero(N);
  rec.iterations.assign(N, 0);
  rec.converged.assign(N, true);
  return rec;
}

}  // namespace

TEST(Scenario, DefaultRangesAndBoundaries) {
  const Scenario s = build_default_scenario();
  EXPECT_EQ(s.zones(), 6);
  EXPECT_EQ(s.steps(), 288);
  for (int k = 0; k <= 288; ++k) {
    const double t = k * s.Ts;
    const Eigen::VectorXd r = s.reference(t);
    EXPECT_GE(r.minCoeff(), 5.0);
    EXPECT_LE(r.maxCoeff(), 25.0);
    EXPECT_GE(s.outdoor(t), -6.0 - 1e-12);
    EXPECT_LE(s.outdoor(t), 4.0 + 1e-12);
  }
  const std::vector<std::pair<double, double>> expected{{0, 22}, {6, 16}, {12, 16}, {18, 20}, {21, 22}};
  for (const auto& [hour, value] : expected) EXPECT_DOUBLE_EQ(s.reference(hour * 3600.0)(0), value);
  // The change happens exactly at the boundary.
  EXPECT_DOUBLE_EQ(s.reference(6 * 3600.0 - 300.0)(0), 22.0);
  EXPECT_DOUBLE_EQ(s.reference(18 * 3600.0 - 300.0)(0), 16.0);
  EXPECT_DOUBLE_EQ(s.reference(21 * 3600.0 - 300.0)(0), 20.0);
  // Coldest at 4 h, warmest at 16 h.
  EXPECT_NEAR(s.outdoor(4 * 3600.0), -6.0, 1e-12);
  EXPECT_NEAR(s.outdoor(16 * 3600.0), 4.0, 1e-12);
}

TEST(Scenario, StepScenario) {
  const Scenario s = build_step_scenario(6, 20.0, -6.0, 10.0, 6.0, 12.0);
  EXPECT_DOUBLE_EQ(s.outdoor(6 * 3600.0 - 1.0), -6.0);
  EXPECT_DOUBLE_EQ(s.outdoor(6 * 3600.0), 4.0);
  EXPECT_EQ(s.steps(), 144);
}

TEST(Scenario, JsonRoundTrip) {
  Scenario s = build_default_scenario();
  s.events.push_back({3600.0, "window_3", true});
  s.seed = 42;
  s.forecast_noise = 0.5;
  const Scenario back = scenario_from_json(scenario_to_json(s));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
  EXPECT_EQ(back.events.size(), 1u);
  EXPECT_EQ(back.seed, 42u);
}

TEST(Scenario, Validation) {
  Scenario s = build_default_scenario();
  s.dt = 7.0;
  EXPECT_THROW(s.validate(), InvalidConfigError);
  s = build_default_scenario();
  s.schedule[1].start_hour = 25.0;
  EXPECT_THROW(s.validate(), InvalidConfigError);
  EXPECT_THROW(disturbance_kind_from_string("gaussian"), InvalidConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"duration", "long"}}), InvalidConfigError);
}

TEST(Metrics, SecondOrderOvershoot) {
  const double zeta = 0.5, wn = 1.0, wd = wn * std::sqrt(1 - zeta * zeta);
  const int N = 4000;
  Eigen::VectorXd y(N), r = Eigen::VectorXd::Ones(N);
  for (int k = 0; k < N; ++k) {
    const double t = 0.005 * k;
    y(k) = 1.0 - std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta / std::sqrt(1 - zeta * zeta) * std::sin(wd * t));
  }
  const double analytic = 100.0 * std::exp(-std::numbers::pi * zeta / std::sqrt(1 - zeta * zeta));
  EXPECT_NEAR(analytic, 16.3, 0.05);
  EXPECT_NEAR(overshoot_percent(y, r), 16.3, 0.5);
  // Mirrored step.
  EXPECT_NEAR(overshoot_percent(-y, -r), 16.3, 0.5);
}

TEST(Metrics, PerfectTrackingHasNoOvershoot) {
  Eigen::VectorXd r(6);
  r << 20, 20, 22, 22, 16, 16;
  EXPECT_EQ(overshoot_percent(r, r), 0.0);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);
  Eigen::MatrixXd x(7, 1), ref(7, 1);
  x.col(0) << r, 16;
  ref = x;
  const Metrics m = compute_metrics(synthetic_record(t, x, Eigen::MatrixXd::Ones(6, 1), ref));
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.overshoot[0], 0.0);
}

TEST(Metrics, OvershootRelativeToStepSize) {
  Eigen::VectorXd r(5), y(5);
  r << 20, 22, 22, 22, 22;
  y << 20, 20, 22.5, 22.2, 22;
  EXPECT_NEAR(overshoot_percent(y, r), 25.0, 1e-12);
}

TEST(Metrics, TrapezoidArea) {
  EXPECT_DOUBLE_EQ(trapezoid_area(Eigen::VectorXd::LinSpaced(11, 0.0, 10.0), Eigen::VectorXd::Constant(11, 10.0)), 100.0);
  // Exact for piecewise-linear signals under any refinement.
  for (int n : {2, 5, 50, 500}) {
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 4.0);
    const Eigen::VectorXd v = 3.0 * t.array() + 1.0;
    EXPECT_NEAR(trapezoid_area(t, v), 28.0, 1e-12);
  }
}

TEST(Metrics, ControlAreaUsesAbsoluteInputs) {
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2), ref = Eigen::MatrixXd::Zero(4, 2);
  Eigen::MatrixXd u(3, 2);
  u << 1, -1, 1, -1, 1, -1;
  const Metrics m = compute_metrics(synthetic_record(t, x, u, ref));
  // Samples 0..N-1 only: two intervals of width 1 with sum |u| = 2.
  EXPECT_DOUBLE_EQ(m.control_area, 4.0);
}

TEST(Metrics, ControlOvershootAfterSetpointStep) {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
  Eigen::MatrixXd ref(6, 1), x(6, 1), u(5, 1);
  ref.col(0) << 20, 20, 22, 22, 22, 22;
  x = ref;
  u.col(0) << 30, 30, 50, 45, 40;
  const Metrics m = compute_metrics(synthetic_record(t, x, u, ref));
  // Settles at 40 after a move of 10, peak 10 above.
  EXPECT_NEAR(m.control_overshoot, 100.0, 1e-12);
}

TEST(Metrics, EmptyRecordRejected) {
  SimulationRecord rec;
  EXPECT_THROW(compute_metrics(rec), InvalidRecordError);
  EXPECT_THROW(write_metrics_csv(std::cout, {}), InvalidRecordError);
}

TEST(Metrics, CsvRoundTrip) {
  Metrics a;
  a.controller = "centralized";
  a.overshoot = {1.5, 0.0, 2.25};
  a.peak = {22.1, 22.0, 23.5};
  a.control_overshoot = 12.5;
  a.control_area = 1.234567890123e6;
  a.rmse = 0.3;
  a.solve_time = 0.01;
  a.mean_step_ms = 0.2;
  a.max_step_ms = 1.1;
  Metrics b = a;
  b.controller = "distributed";
  b.dual_iterations_total = 1234;
  b.dual_iterations_max = 17;
  b.unconverged_steps = 2;
  std::stringstream ss;
  write_metrics_csv(ss, {a, b});
  const auto rows = read_metrics_csv(ss);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].overshoot, a.overshoot);
  EXPECT_EQ(rows[0].control_area, a.control_area);
  EXPECT_EQ(rows[1].dual_iterations_total, 1234);
  EXPECT_EQ(rows[1].unconverged_steps, 2);
}

TEST(Metrics, MalformedCsvReportsLine) {
  std::stringstream ss("controller,overshoot_1,peak_1,control_overshoot,control_area,rmse,solve_time_s,"
                       "mean_step_ms,max_step_ms,dual_iterations_total,dual_iterations_max,unconverged_steps\n"
                       "c,1,2,3,4,5,6,7,8,9,10,11\n"
                       "d,1,2,3,x,5,6,7,8,9,10,11\n");
  try {
    read_metrics_csv(ss);
    FAIL() << "expected InvalidRecordError";
  } catch (const InvalidRecordError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Trace, CsvRoundTripIsExact) {
  const SimulationRecord rec = short_cmpc_run(12);
  std::stringstream ss;
  write_trace_csv(ss, rec, true);
  const std::string first = ss.str();
  EXPECT_EQ(first.substr(0, first.find('\n')),
            "k,t,x1,x2,x3,x4,x5,x6,u1,u2,u3,u4,u5,u6,d,ref1,ref2,ref3,ref4,ref5,ref6,solve_ms");
  const SimulationRecord back = read_trace_csv(ss);
  ASSERT_EQ(back.steps(), 12);
  EXPECT_EQ(back.u, rec.u);
  EXPECT_EQ(back.x.topRows(12), rec.x.topRows(12));
  EXPECT_EQ(back.d, rec.d);
  EXPECT_EQ(back.ref.topRows(12), rec.ref.topRows(12));
  EXPECT_EQ(back.solve_ms, rec.solve_ms);
  std::stringstream again;
  write_trace_csv(again, back, true);
  EXPECT_EQ(again.str(), first);
}

TEST(Trace, MalformedCsvReportsLine) {
  std::stringstream ss("k,t,x1,u1,d,ref1,solve_ms\n0,0,20,30,-1,20,0\n1,300,20.5,abc,-1,20,0\n");
  try {
    read_trace_csv(ss);
    FAIL() << "expected InvalidRecordError";
  } catch (const InvalidRecordError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::stringstream short_row("k,t,x1,u1,d,ref1,solve_ms\n0,0,20\n");
  EXPECT_THROW(read_trace_csv(short_row), InvalidRecordError);
  std::stringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_trace_csv(bad_header), InvalidRecordError);
}

TEST(Simulation, TraceOutputIsDeterministic) {
  std::stringstream a, b;
  write_trace_csv(a, short_cmpc_run(20), false);
  write_trace_csv(b, short_cmpc_run(20), false);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Simulation, IdenticalControllersGiveIdenticalMetrics) {
  Metrics a = compute_metrics(short_cmpc_run(30));
  Metrics b = compute_metrics(short_cmpc_run(30));
  EXPECT_EQ(a.overshoot, b.overshoot);
  EXPECT_EQ(a.peak, b.peak);
  EXPECT_EQ(a.control_area, b.control_area);
  EXPECT_EQ(a.control_overshoot, b.control_overshoot);
  EXPECT_EQ(a.rmse, b.rmse);
}

TEST(Simulation, ContextCarriesReferenceAndForecast) {
  const BuildingModel model = default_building();
  Scenario s = build_default_scenario();
  SpyController spy(6, 4, 30.0);
  BuildingPlant plant(model);
  SimOptions opt;
  opt.steps = 5;
  const SimulationRecord rec = run_closed_loop(spy, plant, s, opt);
  ASSERT_EQ(spy.seen.size(), 5u);
  for (const auto& ctx : spy.seen) {
    ASSERT_EQ(ctx.reference.rows(), 5);
    ASSERT_EQ(ctx.forecast.rows(), 4);
    for (int l = 0; l <= 4; ++l) EXPECT_EQ(ctx.reference.row(l), s.reference(ctx.t + l * s.Ts).transpose());
    for (int l = 0; l < 4; ++l) EXPECT_DOUBLE_EQ(ctx.forecast(l, 0), s.outdoor(ctx.t + l * s.Ts));
  }
  EXPECT_EQ(spy.seen[0].u_prev, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(spy.seen[1].u_prev, Eigen::VectorXd::Constant(6, 30.0));
  EXPECT_EQ(rec.iterations[0], 3);
  EXPECT_DOUBLE_EQ(rec.solve_ms(0), 1.0);
  EXPECT_EQ(rec.t(5), 1500.0);
}

TEST(Simulation, PersistenceHoldsCurrentOutdoor) {
  Scenario s = build_default_scenario();
  SpyController spy(6, 6);
  BuildingPlant plant(default_building());
  SimOptions opt;
  opt.steps = 3;
  opt.forecast = ForecastMode::kPersistence;
  run_closed_loop(spy, plant, s, opt);
  for (const auto& ctx : spy.seen)
    for (int l = 0; l < 6; ++l) EXPECT_DOUBLE_EQ(ctx.forecast(l, 0), s.outdoor(ctx.t));
}

TEST(Simulation, ForecastNoiseFollowsSeed) {
  Scenario s = build_default_scenario();
  s.forecast_noise = 1.0;
  auto run = [&](std::uint64_t seed) {
    s.seed = seed;
    SpyController spy(6, 6);
    BuildingPlant plant(default_building());
    SimOptions opt;
    opt.steps = 2;
    run_closed_loop(spy, plant, s, opt);
    return spy.seen;
  };
  const auto a = run(1), b = run(1), c = run(2);
  EXPECT_EQ(a[1].forecast, b[1].forecast);
  EXPECT_NE(a[1].forecast, c[1].forecast);
  // The current sample is measured, not forecast.
  EXPECT_DOUBLE_EQ(a[1].forecast(0, 0), s.outdoor(a[1].t));
}

TEST(Simulation, ZeroReferenceRegulation) {
  SpyController spy(6, 3);
  BuildingPlant plant(default_building());
  SimOptions opt;
  opt.steps = 2;
  opt.zero_reference = true;
  const auto rec = run_closed_loop(spy, plant, build_default_scenario(), opt);
  EXPECT_EQ(spy.seen[0].reference.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(spy.seen[0].forecast.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(rec.ref.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulation, ControllerFailureCarriesStep) {
  SpyController spy(6, 3);
  spy.fail_at = 2;
  BuildingPlant plant(default_building());
  SimOptions opt;
  opt.steps = 5;
  try {
    run_closed_loop(spy, plant, build_default_scenario(), opt);
    FAIL() << "expected SolverFailure";
  } catch (const SolverFailure& e) {
    EXPECT_EQ(e.step(), 2);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(Simulation, ZoneCountMismatchRejected) {
  SpyController spy(6, 3);
  BuildingPlant plant(default_building());
  EXPECT_THROW(run_closed_loop(spy, plant, build_default_scenario(4)), InvalidConfigError);
}

TEST(Simulation, LinearPlantFollowsModel) {
  const StateSpaceModel ss = tu::scalar_model(0.5, 2.0, 1.0, 300.0);
  LinearPlant plant(ss, Eigen::VectorXd::Constant(1, 4.0));
  Scenario s = tu::constant_scenario(1, 0.0, 3.0, 1.0);
  plant.advance(Eigen::VectorXd::Constant(1, 1.0), s, 0.0);
  EXPECT_DOUBLE_EQ(plant.measure()(0), 0.5 * 4.0 + 2.0 + 3.0);
  plant.override_disturbance(true);
  plant.advance(Eigen::VectorXd::Zero(1), s, 300.0);
  EXPECT_DOUBLE_EQ(plant.measure()(0), 3.5);
}

TEST(Comparison, ConcurrentRunMatchesSequential) {
  const BuildingModel model = default_building();
  const StateSpaceModel ss = build_discrete_model(model, 300.0);
  SimOptions opt;
  opt.steps = 8;
  const MpcConfig cm = MpcConfig::defaults(ss);
  const DmpcConfig dm;
  const ComparisonResult a = run_comparison(model, ss, build_default_scenario(), cm, dm, opt, 1);
  const ComparisonResult b = run_comparison(model, ss, build_default_scenario(), cm, dm, opt, 2);
  EXPECT_EQ(a.centralized.u, b.centralized.u);
  EXPECT_EQ(a.distributed.u, b.distributed.u);
  EXPECT_EQ(a.centralized_metrics.controller, "centralized");
  EXPECT_EQ(a.distributed_metrics.controller, "distributed");
}

TEST(Comparison, EnergyDelta) {
  Metrics c, d;
  c.control_area = 200.0;
  d.control_area = 190.0;
  EXPECT_DOUBLE_EQ(energy_delta_percent(c, d), -5.0);
  std::stringstream out;
  c.controller = "centralized";
  d.controller = "distributed";
  c.overshoot = d.overshoot = c.peak = d.peak = {0.0};
  write_comparison_report(out, {{"scenario", "default"}}, {c, d});
  EXPECT_NE(out.str().find("scenario: default"), std::string::npos);
  EXPECT_NE(out.str().find("control area %: -5.00"), std::string::npos);
}
