#include "zonempc/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "zonempc/building_io.hpp"
#include "zonempc/comparison.hpp"
#include "zonempc/errors.hpp"
#include "zonempc/matrix_io.hpp"
#include "zonempc/metrics.hpp"
#include "zonempc/run_config.hpp"
#include "zonempc/stability.hpp"

namespace zonempc {

namespace {

// Raw flag values; only flags given on the command line override the config.
struct RunFlags {
  std::string config, model, scenario, controller, coordination, out;
  int horizon_p = 0, horizon_m = 0, jobs = 0;
  std::uint64_t seed = 0;
  bool no_preview = false, no_timing = false, transcript = false, no_bounds = false;
  CLI::Option *o_model = nullptr, *o_scenario = nullptr, *o_controller = nullptr, *o_coordination = nullptr,
              *o_out = nullptr, *o_p = nullptr, *o_m = nullptr, *o_jobs = nullptr, *o_seed = nullptr;
};

void add_model_flags(CLI::App* app, RunFlags& f) {
  app->add_option("--config", f.config, "JSON run configuration; flags given here override it");
  f.o_model = app->add_option("--model", f.model, "Building description (JSON); default: built-in six-room building");
  f.o_scenario = app->add_option("--scenario", f.scenario, "Scenario file (JSON); default: 24 h schedule scenario");
  f.o_p = app->add_option("--horizon-p", f.horizon_p, "Prediction horizon P in samples (default 24)");
  f.o_m = app->add_option("--horizon-m", f.horizon_m, "Control horizon M in samples, M <= P (default 6)");
  f.o_coordination = app->add_option("--coordination", f.coordination,
                                     "Distributed coordination: goal-coordination (default) or dual")
                         ->check(CLI::IsMember({"dual", "goal-coordination"}));
}

void add_run_flags(CLI::App* app, RunFlags& f) {
  add_model_flags(app, f);
  f.o_controller = app->add_option("--controller", f.controller, "centralized, distributed or both (default both)")
                       ->check(CLI::IsMember({"centralized", "distributed", "both"}));
  app->add_flag("--no-preview", f.no_preview, "Persistence forecast: hold the measured outdoor temperature");
  f.o_out = app->add_option("--out", f.out, "Output directory (default out)");
  f.o_jobs = app->add_option("--jobs", f.jobs, "Run the two controllers concurrently when > 1 (default 1)");
  f.o_seed = app->add_option("--seed", f.seed, "Scenario seed for forecast noise (default: scenario value)");
  app->add_flag("--no-timing", f.no_timing, "Write solve_ms as 0 so traces are reproducible byte for byte");
  app->add_flag("--transcript", f.transcript, "Write the coordination message transcript");
  app->add_flag("--no-bounds", f.no_bounds, "Disable the [0, 60] degC supply temperature bounds");
}

RunConfig merge(const RunFlags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config(f.config);
  if (f.o_model && f.o_model->count()) c.model_path = f.model;
  if (f.o_scenario && f.o_scenario->count()) c.scenario_path = f.scenario;
  if (f.o_controller && f.o_controller->count()) c.controller = f.controller;
  if (f.o_coordination && f.o_coordination->count()) c.coordination = coordination_from_string(f.coordination);
  if (f.o_out && f.o_out->count()) c.out_dir = f.out;
  if (f.o_p && f.o_p->count()) c.P = f.horizon_p;
  if (f.o_m && f.o_m->count()) c.M = f.horizon_m;
  if (f.o_jobs && f.o_jobs->count()) c.jobs = f.jobs;
  if (f.o_seed && f.o_seed->count()) c.seed = f.seed;
  if (f.no_preview) c.forecast = ForecastMode::kPersistence;
  if (f.no_timing) c.timing = false;
  if (f.transcript) c.transcript = true;
  if (f.no_bounds) c.bounds.enabled = false;
  c.validate();
  return c;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

SimulationRecord run_single(Controller& c, const BuildingModel& model, InputMode mode, const Scenario& scenario,
                            const SimOptions& options) {
  BuildingPlant plant(model, mode);
  try {
    return run_closed_loop(c, plant, scenario, options);
  } catch (const SolverFailure& e) {
    throw SolverFailure(e.step(), c.name() + " controller: " + e.what());
  }
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  const BuildingModel model = load_run_model(cfg);
  const Scenario scenario = load_run_scenario(cfg);
  const InputMode mode = input_mode_from_string(cfg.input_mode);
  const StateSpaceModel ss = build_discrete_model(model, scenario.Ts, mode);
  if (scenario.zones() != ss.states()) throw InvalidConfigError("scenario zone count does not match the model");

  std::vector<std::string> names;
  if (cfg.controller == "centralized" || cfg.controller == "both") names.push_back("centralized");
  if (cfg.controller == "distributed" || cfg.controller == "both") names.push_back("distributed");
  std::vector<std::unique_ptr<Controller>> controllers;
  for (const auto& n : names) controllers.push_back(make_controller(n, cfg, ss));

  SimOptions options;
  options.forecast = cfg.forecast;
  std::vector<SimulationRecord> records(controllers.size());
  if (cfg.jobs > 1 && controllers.size() > 1) {
    std::vector<std::future<SimulationRecord>> futures;
    for (auto& c : controllers)
      futures.push_back(std::async(std::launch::async,
                                   [&, ctrl = c.get()] { return run_single(*ctrl, model, mode, scenario, options); }));
    for (std::size_t i = 0; i < futures.size(); ++i) records[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < controllers.size(); ++i)
      records[i] = run_single(*controllers[i], model, mode, scenario, options);
  }

  std::filesystem::create_directories(cfg.out_dir);
  std::vector<Metrics> metrics;
  for (std::size_t i = 0; i < records.size(); ++i) {
    save_trace_csv(join_path(cfg.out_dir, "trace_" + names[i] + ".csv"), records[i], cfg.timing);
    Metrics m = compute_metrics(records[i]);
    if (!cfg.timing) {
      m.solve_time = m.mean_step_ms = m.max_step_ms = 0.0;
    }
    metrics.push_back(m);
    if (cfg.transcript) {
      if (auto* d = dynamic_cast<DistributedMpcBase*>(controllers[i].get())) {
        std::ofstream t(join_path(cfg.out_dir, "transcript_" + names[i] + ".csv"));
        if (!t) throw InvalidConfigError("cannot write transcript in " + cfg.out_dir);
        write_transcript(t, d->transcript());
      }
    }
  }
  save_metrics_csv(join_path(cfg.out_dir, "metrics.csv"), metrics);
  save_config(cfg, join_path(cfg.out_dir, "config.json"));

  std::vector<std::pair<std::string, std::string>> header = {
      {"scenario", scenario.name},
      {"forecast mode", to_string(cfg.forecast)},
      {"coordination", to_string(cfg.coordination)},
      {"horizons", "P=" + std::to_string(cfg.P) + " M=" + std::to_string(cfg.M)},
      {"input bounds", cfg.bounds.enabled ? "enabled" : "disabled"},
      {"input mode", cfg.input_mode},
      {"samples", std::to_string(scenario.steps()) + " x " + format_number(scenario.Ts) + " s"},
      {"timing", cfg.timing ? "solver wall time" : "not recorded"}};
  std::ofstream report(join_path(cfg.out_dir, "report.txt"));
  if (!report) throw InvalidConfigError("cannot write report in " + cfg.out_dir);
  write_comparison_report(report, header, metrics);
  write_comparison_report(out, header, metrics);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto unconverged = std::count(r.converged.begin(), r.converged.end(), false);
    if (unconverged > 0)
      out << "warning: " << names[i] << " coordination hit the iteration cap on " << unconverged << " steps\n";
  }
  return kExitOk;
}

struct CertifyFlags {
  RunFlags run;
  std::string controller = "distributed";
  std::string matrix, check, out;
  int steps = 288;
};

int report_certificate(const LyapunovCertificate& cert, const std::string& out_path, std::ostream& out) {
  out << "spectral radius: " << format_number(cert.spectral_radius) << "\n";
  out << "residual: " << format_number(cert.residual) << "\n";
  out << "bound: " << format_number(cert.bound) << "\n";
  const MatrixBundle bundle = certificate_bundle(cert);
  if (!out_path.empty()) {
    save_matrix_text(out_path, bundle, "Lyapunov certificate: A' P A - P = -F");
    out << "certificate written to " << out_path << "\n";
  }
  const bool ok = cert.residual < kCertificateTolerance && cert.spectral_radius < 1.0;
  out << (ok ? "certified" : "not certified") << "\n";
  return ok ? kExitOk : kExitCertifyFailure;
}

int cmd_certify(const CertifyFlags& f, std::ostream& out) {
  if (!f.check.empty()) {
    const CertificateCheck c = check_certificate(load_matrix_text(f.check));
    out << "spectral radius: " << format_number(c.spectral_radius) << "\n";
    out << "residual: " << format_number(c.residual) << "\n";
    out << (c.passed ? "certificate verified" : "certificate rejected") << "\n";
    return c.passed ? kExitOk : kExitCertifyFailure;
  }
  if (!f.matrix.empty()) {
    const MatrixBundle b = load_matrix_text(f.matrix);
    const Eigen::MatrixXd A = b.matrix("A");
    const Eigen::MatrixXd F = b.has_matrix("F") ? b.matrix("F") : Eigen::MatrixXd::Identity(A.rows(), A.cols());
    return report_certificate(certify(A, F), f.out, out);
  }

  RunConfig cfg = merge(f.run);
  cfg.bounds.enabled = false;
  cfg.tolerance = 1e-12;
  cfg.max_iterations = 5000;
  cfg.transcript = false;
  const BuildingModel model = load_run_model(cfg);
  const Scenario scenario = load_run_scenario(cfg);
  const StateSpaceModel ss = build_discrete_model(model, scenario.Ts, input_mode_from_string(cfg.input_mode));
  auto controller = make_controller(f.controller, cfg, ss);
  const Eigen::MatrixXd Acl = closed_loop_matrix(ss, *controller);
  out << "controller: " << f.controller;
  if (f.controller == "distributed") out << " (" << to_string(cfg.coordination) << ")";
  out << "\n";
  const LyapunovCertificate cert = certify(Acl);

  // Regulation run on the linear model from the building's initial state.
  LinearPlant plant(ss, initial_state(model).x);
  plant.override_disturbance(true);
  SimOptions options;
  options.zero_reference = true;
  options.steps = f.steps;
  const SimulationRecord rec = run_closed_loop(*controller, plant, scenario, options);
  const TrajectoryBoundReport rep = verify_trajectory_bound(rec, cert);
  out << "regulation run: " << f.steps << " steps, max ratio " << format_number(rep.max_ratio) << ", final ratio "
      << format_number(rep.final_ratio) << ", bound " << (rep.satisfied ? "holds" : "violated") << "\n";
  return report_certificate(cert, f.out, out);
}

struct ScenarioFlags {
  std::string out;
  std::uint64_t seed = 0;
  int zones = 6;
  double step_size = 0.0;
  double step_hour = 6.0;
  double forecast_noise = 0.0;
  CLI::Option* o_step = nullptr;
};

int cmd_scenario_gen(const ScenarioFlags& f, std::ostream& out) {
  Scenario s = f.o_step->count() ? build_step_scenario(f.zones, 20.0, -6.0, f.step_size, f.step_hour)
                                 : build_default_scenario(f.zones);
  s.seed = f.seed;
  s.forecast_noise = f.forecast_noise;
  s.validate();
  if (f.out.empty()) {
    out << scenario_to_json(s).dump(2) << "\n";
  } else {
    save_scenario(s, f.out);
  }
  return kExitOk;
}

struct MetricsFlags {
  std::vector<std::string> traces;
  std::string out;
};

int cmd_metrics(const MetricsFlags& f, std::ostream& out) {
  std::vector<Metrics> rows;
  for (const auto& path : f.traces) {
    SimulationRecord rec = load_trace_csv(path);
    std::string name = std::filesystem::path(path).stem().string();
    if (name.rfind("trace_", 0) == 0) name = name.substr(6);
    rec.controller = name;
    rows.push_back(compute_metrics(rec));
  }
  if (f.out.empty()) {
    write_metrics_csv(out, rows);
  } else {
    save_metrics_csv(f.out, rows);
  }
  return kExitOk;
}

struct ModelFlags {
  std::string model, out, matrices, input_mode = "supply_temperature";
  double Ts = 300.0;
};

int cmd_model(const ModelFlags& f, std::ostream& out) {
  const BuildingModel model = f.model.empty() ? default_building() : load_building(f.model);
  if (f.out.empty() && f.matrices.empty()) {
    out << building_to_json(model).dump(2) << "\n";
    return kExitOk;
  }
  if (!f.out.empty()) save_building(model, f.out);
  if (!f.matrices.empty()) {
    if (!(f.Ts > 0.0)) throw InvalidConfigError("--Ts must be positive");
    const StateSpaceModel ss = build_discrete_model(model, f.Ts, input_mode_from_string(f.input_mode));
    save_matrix_text(f.matrices, to_bundle(ss), "discrete building model");
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zone temperature control: centralized and distributed MPC on a multi-zone building", "zonempc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zonempc 1.0");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Simulate the controller(s) and write traces, metrics and a report");
  add_run_flags(run, run_flags);

  CertifyFlags cert_flags;
  auto* cert = app.add_subcommand("certify", "Certify closed-loop stability with a Lyapunov function");
  add_model_flags(cert, cert_flags.run);
  cert->add_option("--controller", cert_flags.controller, "centralized or distributed (default distributed)")
      ->check(CLI::IsMember({"centralized", "distributed"}));
  cert->add_option("--matrix", cert_flags.matrix, "Certify matrix A (and optional F) from a matrix text file");
  cert->add_option("--check", cert_flags.check, "Re-verify a dumped certificate file");
  cert->add_option("--out", cert_flags.out, "Write the certificate (A, P, F, bound, residual) to this file");
  cert->add_option("--steps", cert_flags.steps, "Length of the regulation run in samples (default 288)");

  ScenarioFlags sc_flags;
  auto* sc = app.add_subcommand("scenario-gen", "Write a scenario file");
  sc->add_option("--out", sc_flags.out, "Scenario file to write; default: standard output");
  sc->add_option("--seed", sc_flags.seed, "Seed stored in the scenario (default 0)");
  sc->add_option("--zones", sc_flags.zones, "Number of zones (default 6)");
  sc_flags.o_step = sc->add_option("--step-size", sc_flags.step_size,
                                   "Constant 20 degC setpoint with an outdoor step of this size instead of the schedule");
  sc->add_option("--step-hour", sc_flags.step_hour, "Time of the outdoor step in hours (default 6)");
  sc->add_option("--forecast-noise", sc_flags.forecast_noise, "Std dev of forecast errors in degC (default 0)");

  MetricsFlags m_flags;
  auto* met = app.add_subcommand("metrics", "Recompute metrics from trace CSV files");
  met->add_option("--trace", m_flags.traces, "Trace CSV file; repeat for several")->required();
  met->add_option("--out", m_flags.out, "Metrics CSV to write; default: standard output");

  RunFlags dump_flags;
  std::string dump_file;
  auto* dump = app.add_subcommand("dump-config", "Print the effective run configuration as JSON");
  add_run_flags(dump, dump_flags);
  dump->add_option("--file", dump_file, "Write the configuration to this file instead of standard output");

  ModelFlags model_flags;
  auto* mod = app.add_subcommand("model", "Write the building description and its discrete linear model");
  mod->add_option("--model", model_flags.model, "Building description to read; default: built-in building");
  mod->add_option("--out", model_flags.out, "Building JSON to write");
  mod->add_option("--matrices", model_flags.matrices, "Discrete model (A, B, E, C) in matrix text format");
  mod->add_option("--Ts", model_flags.Ts, "Sampling period in seconds (default 300)");
  mod->add_option("--input-mode", model_flags.input_mode, "supply_temperature (default) or lumped_heat")
      ->check(CLI::IsMember({"supply_temperature", "lumped_heat"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(merge(run_flags), out);
    if (*cert) return cmd_certify(cert_flags, out);
    if (*sc) return cmd_scenario_gen(sc_flags, out);
    if (*met) return cmd_metrics(m_flags, out);
    if (*dump) {
      const RunConfig cfg = merge(dump_flags);
      if (dump_file.empty()) {
        out << config_to_json(cfg).dump(2) << "\n";
      } else {
        save_config(cfg, dump_file);
      }
      return kExitOk;
    }
    if (*mod) return cmd_model(model_flags, out);
  } catch (const UnstableMatrixError& e) {
    err << "error: closed loop is not stable, spectral radius " << format_number(e.spectral_radius()) << "\n";
    return kExitCertifyFailure;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const CoordinationIncompleteError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const IntegrationDivergenceError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const Error& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace zonempc
