#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"
#include "zonempc/comparison.hpp"
#include "zonempc/errors.hpp"
#include "zonempc/goal_coordination.hpp"

using namespace zonempc;
using zonempc::tu::random_context;
using zonempc::tu::random_matrix;
using zonempc::tu::random_vector;

namespace {

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  const Eigen::MatrixXd a = random_matrix(rng, n, n);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

StageModel random_stage(std::mt19937_64& rng, int n, int m, int nz) {
  StageModel s;
  s.A = tu::random_stable(rng, n, 0.9);
  s.B = random_matrix(rng, n, m);
  s.C = random_matrix(rng, n, nz);
  s.Q = random_spd(rng, n);
  s.R = random_spd(rng, m);
  s.S = random_spd(rng, nz);
  return s;
}

GoalSubproblem random_subproblem(std::mt19937_64& rng, int n, int m, int nz, int K) {
  GoalSubproblem sub;
  sub.x0 = random_vector(rng, n);
  sub.reference = random_matrix(rng, K + 1, n);
  sub.exogenous = random_matrix(rng, K, n);
  sub.multipliers = random_matrix(rng, K, nz);
  sub.state_price = random_matrix(rng, K + 1, n);
  sub.input_price = random_matrix(rng, K, m);
  return sub;
}

// Cost of the local problem for inputs and interactions v = [u(0..K-1); z(0..K-1)],
// with the state obtained by forward simulation.
double subproblem_cost(const StageModel& s, const Eigen::MatrixXd& T, const GoalSubproblem& sub, int K,
                       const Eigen::VectorXd& v, bool with_z = true) {
  const int m = static_cast<int>(s.B.cols()), nz = static_cast<int>(s.C.cols());
  Eigen::VectorXd x = sub.x0;
  double J = 0.0;
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd u = v.segment(k * m, m);
    const Eigen::VectorXd z = with_z ? Eigen::VectorXd(v.segment(K * m + k * nz, nz)) : Eigen::VectorXd::Zero(nz);
    J += u.dot(s.R * u) - sub.input_price.row(k).dot(u) + z.dot(s.S * z) + sub.multipliers.row(k).dot(z);
    x = s.A * x + s.B * u + s.C * z + sub.exogenous.row(k).transpose();
    const Eigen::VectorXd e = x - sub.reference.row(k + 1).transpose();
    if (k + 1 < K)
      J += e.dot(s.Q * e) - sub.state_price.row(k + 1).dot(x);
    else
      J += e.dot(T * e);
  }
  return J;
}

Eigen::VectorXd flat_solution(const GoalSolution& sol) {
  const auto flat = [](const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (int r = 0; r < m.rows(); ++r) v.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
    return v;
  };
  Eigen::VectorXd out(sol.x.size() + sol.u.size() + sol.z.size());
  out << flat(sol.x), flat(sol.u), flat(sol.z);
  return out;
}

std::vector<double> flat_rows(const Eigen::MatrixXd& m) {
  std::vector<double> v(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c);
  return v;
}

Eigen::VectorXd run_flat(const ThreeLevelSolver& solver, const GoalSubproblem& sub, bool generic) {
  const auto x0 = flat_rows(sub.x0.transpose());
  const auto ref = flat_rows(sub.reference), exo = flat_rows(sub.exogenous);
  const auto lam = flat_rows(sub.multipliers), gx = flat_rows(sub.state_price), gu = flat_rows(sub.input_price);
  ThreeLevelSolver::FlatData data;
  data.x0 = x0.data();
  data.reference = ref.data();
  data.exogenous = exo.data();
  data.multipliers = lam.data();
  data.state_price = gx.data();
  data.input_price = gu.data();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(solver.solution_size(), -999.0);
  std::vector<double> work(2 * solver.horizon() * sub.x0.size(), 0.0);
  if (generic)
    solver.solve_flat_generic(data, out.data(), work.data());
  else
    solver.solve_flat(data, out.data(), work.data());
  return out;
}

DmpcConfig goal_config(int P, double q, double r, double s) {
  DmpcConfig cfg;
  cfg.coordination = Coordination::kGoal;
  cfg.P = P;
  cfg.M = 1;
  cfg.q = q;
  cfg.r = r;
  cfg.s = s;
  cfg.smoothing = 0.0;
  cfg.bounds.enabled = false;
  return cfg;
}

}  // namespace

TEST(Hamiltonian, ZeroArgumentsGiveZero) {
  std::mt19937_64 rng(1);
  const StageModel s = random_stage(rng, 2, 1, 2);
  const Eigen::VectorXd z2 = Eigen::VectorXd::Zero(2), z1 = Eigen::VectorXd::Zero(1);
  EXPECT_EQ(hamiltonian(s, z2, z1, z2, z2, z2, z2, z2, z2), 0.0);
}

TEST(Hamiltonian, QuadraticTermsOnly) {
  StageModel s;
  s.A = Eigen::MatrixXd::Identity(1, 1);
  s.B = s.A;
  s.C = s.A;
  s.Q = Eigen::MatrixXd::Constant(1, 1, 2.0);
  s.R = Eigen::MatrixXd::Constant(1, 1, 3.0);
  s.S = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const auto c = [](double v) { return Eigen::VectorXd::Constant(1, v); };
  // 2 (1 - 0)^2 + 4 * 0.5^2 + 3 * 2^2
  EXPECT_DOUBLE_EQ(hamiltonian(s, c(1), c(2), c(0.5), c(0), c(0), c(0), c(0), c(0)), 2.0 + 1.0 + 12.0);
  // Costate and multiplier terms.
  EXPECT_DOUBLE_EQ(hamiltonian(s, c(0), c(0), c(0), c(1), c(0), c(2), c(3), c(1), c(0.5)),
                   2.0 * (0.5 - 1.0) + 3.0 * (0.0 - 1.0));
}

TEST(Hamiltonian, InputGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(2);
  const StageModel s = random_stage(rng, 3, 2, 3);
  const Eigen::VectorXd x = random_vector(rng, 3), u = random_vector(rng, 2), z = random_vector(rng, 3);
  const Eigen::VectorXd xn = random_vector(rng, 3), xr = random_vector(rng, 3), p = random_vector(rng, 3);
  const Eigen::VectorXd lam = random_vector(rng, 3), cpl = random_vector(rng, 3);
  const Eigen::VectorXd analytic = 2.0 * s.R * u + s.B.transpose() * p;
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd up = u, um = u;
    up(i) += h;
    um(i) -= h;
    const double fd = (hamiltonian(s, x, up, z, xn, xr, p, lam, cpl) - hamiltonian(s, x, um, z, xn, xr, p, lam, cpl)) / (2 * h);
    EXPECT_NEAR(fd, analytic(i), 1e-7);
  }
}

TEST(ThreeLevelSolver, MatchesDenseOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2, m = 1 + trial % 2, nz = 2, K = 5;
    const StageModel s = random_stage(rng, n, m, nz);
    const Eigen::MatrixXd T = random_spd(rng, n);
    const GoalSubproblem sub = random_subproblem(rng, n, m, nz, K);
    const GoalSolution sol = three_level_solve(s, T, K, sub);
    const Eigen::VectorXd v = tu::numeric_quadratic_minimizer(
        [&](const Eigen::VectorXd& w) { return subproblem_cost(s, T, sub, K, w); }, K * (m + nz));
    for (int k = 0; k < K; ++k) {
      EXPECT_LT((sol.u.row(k).transpose() - v.segment(k * m, m)).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((sol.z.row(k).transpose() - v.segment(K * m + k * nz, nz)).cwiseAbs().maxCoeff(), 1e-8);
    }
    // States are consistent with the dynamics.
    EXPECT_EQ(sol.x.row(0), sub.x0.transpose());
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd next = s.A * sol.x.row(k).transpose() + s.B * sol.u.row(k).transpose() +
                                   s.C * sol.z.row(k).transpose() + sub.exogenous.row(k).transpose();
      EXPECT_LT((next - sol.x.row(k + 1).transpose()).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(ThreeLevelSolver, SingleStepClosedForm) {
  std::mt19937_64 rng(4);
  const int n = 2, m = 1, nz = 2;
  const StageModel s = random_stage(rng, n, m, nz);
  const Eigen::MatrixXd T = random_spd(rng, n);
  const GoalSubproblem sub = random_subproblem(rng, n, m, nz, 1);
  const GoalSolution sol = three_level_solve(s, T, 1, sub);
  Eigen::MatrixXd G(n, m + nz);
  G << s.B, s.C;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m + nz, m + nz);
  W.topLeftCorner(m, m) = s.R;
  W.bottomRightCorner(nz, nz) = s.S;
  const Eigen::VectorXd c = s.A * sub.x0 + sub.exogenous.row(0).transpose() - sub.reference.row(1).transpose();
  Eigen::VectorXd lin(m + nz);
  lin << -sub.input_price.row(0).transpose(), sub.multipliers.row(0).transpose();
  const Eigen::VectorXd v =
      -(2.0 * G.transpose() * T * G + 2.0 * W).partialPivLu().solve(2.0 * G.transpose() * T * c + lin);
  EXPECT_LT((sol.u.row(0).transpose() - v.head(m)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((sol.z.row(0).transpose() - v.tail(nz)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ThreeLevelSolver, StiffInteractionWeightSuppressesInteraction) {
  std::mt19937_64 rng(5);
  const int n = 2, m = 2, nz = 2, K = 4;
  StageModel s = random_stage(rng, n, m, nz);
  s.S = 1e8 * Eigen::MatrixXd::Identity(nz, nz);
  const Eigen::MatrixXd T = random_spd(rng, n);
  GoalSubproblem sub = random_subproblem(rng, n, m, nz, K);
  sub.multipliers.setZero();
  const GoalSolution sol = three_level_solve(s, T, K, sub);
  EXPECT_LT(sol.z.cwiseAbs().maxCoeff(), 1e-5);
  const Eigen::VectorXd v = tu::numeric_quadratic_minimizer(
      [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(K * (m + nz));
        full.head(K * m) = w;
        return subproblem_cost(s, T, sub, K, full, false);
      },
      K * m);
  for (int k = 0; k < K; ++k) EXPECT_LT((sol.u.row(k).transpose() - v.segment(k * m, m)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(ThreeLevelSolver, FlatScalarMatchesDense) {
  std::mt19937_64 rng(6);
  for (int nz : {0, 1}) {
    const int K = 12;
    const StageModel s = random_stage(rng, 1, 1, nz);
    const Eigen::MatrixXd T = random_spd(rng, 1);
    const GoalSubproblem sub = random_subproblem(rng, 1, 1, nz, K);
    const ThreeLevelSolver solver(s, T, K);
    const Eigen::VectorXd dense = flat_solution(solver.solve(sub));
    ASSERT_EQ(dense.size(), solver.solution_size());
    EXPECT_LT((run_flat(solver, sub, false) - dense).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((run_flat(solver, sub, true) - dense).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ThreeLevelSolver, FlatGenericMatchesDense) {
  std::mt19937_64 rng(7);
  const int n = 3, m = 2, nz = 3, K = 8;
  const StageModel s = random_stage(rng, n, m, nz);
  const Eigen::MatrixXd T = random_spd(rng, n);
  const GoalSubproblem sub = random_subproblem(rng, n, m, nz, K);
  const ThreeLevelSolver solver(s, T, K);
  const Eigen::VectorXd dense = flat_solution(solver.solve(sub));
  EXPECT_LT((run_flat(solver, sub, false) - dense).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((run_flat(solver, sub, true) - dense).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ThreeLevelSolver, RejectsBadWeightsAndShapes) {
  std::mt19937_64 rng(8);
  StageModel s = random_stage(rng, 2, 1, 2);
  const Eigen::MatrixXd T = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(ThreeLevelSolver(s, T, 0), InvalidConfigError);
  StageModel bad = s;
  bad.R = -Eigen::MatrixXd::Identity(1, 1);
  EXPECT_THROW(ThreeLevelSolver(bad, T, 3), IllPosedWeightsError);
  const ThreeLevelSolver solver(s, T, 3);
  EXPECT_THROW(solver.solve(random_subproblem(rng, 2, 1, 2, 4)), InvalidConfigError);
}

TEST(GoalCoordination, ConvergesToJointOptimum) {
  std::mt19937_64 rng(9);
  const std::vector<int> sizes{2, 1};
  for (int trial = 0; trial < 5; ++trial) {
    const auto ss = tu::random_coupled_model(rng, sizes);
    const auto d = decompose(ss, tu::block_partition(sizes));
    DmpcConfig cfg = goal_config(4, 1.0, 0.1, 1.0);
    cfg.tolerance = 1e-11;
    cfg.max_iterations = 5000;
    GoalCoordinationMpc mpc(d, cfg);
    const StepContext ctx = random_context(rng, ss, cfg.P);
    const ControlDecision dec = mpc.step(ctx);
    ASSERT_TRUE(dec.converged) << "trial " << trial;

    // Joint problem with the interaction written out from the coupling blocks.
    const int K = cfg.P, n = ss.states();
    const auto cost = [&](const Eigen::VectorXd& U) {
      Eigen::VectorXd x = ctx.y;
      double J = 0.0;
      for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd u = U.segment(k * n, n);
        J += cfg.r * u.squaredNorm();
        for (int i = 0; i < d.size(); ++i) J += cfg.s * d.interaction(i, x, u).squaredNorm();
        x = ss.A * x + ss.B * u + ss.E * ctx.forecast.row(k).transpose();
        J += cfg.q * (x - ctx.reference.row(k + 1).transpose()).squaredNorm();
      }
      return J;
    };
    const Eigen::VectorXd U = tu::numeric_quadratic_minimizer(cost, K * n);
    EXPECT_LT((dec.u - U.head(n)).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
  }
}

TEST(GoalCoordination, ConvergesOnBuilding) {
  const auto ss = build_discrete_model(default_building(), 300.0);
  const auto d = decompose(ss, zone_partition(6));
  DmpcConfig cfg;
  GoalCoordinationMpc mpc(d, cfg);
  EXPECT_DOUBLE_EQ(mpc.coordination_step(), 2.0 * cfg.s);
  StepContext ctx;
  ctx.y = Eigen::VectorXd::Constant(6, 18.0);
  ctx.u_prev = Eigen::VectorXd::Constant(6, 25.0);
  ctx.reference = Eigen::MatrixXd::Constant(cfg.P + 1, 6, 20.0);
  ctx.forecast = Eigen::MatrixXd::Constant(cfg.P, 1, -4.0);
  const ControlDecision dec = mpc.step(ctx);
  EXPECT_TRUE(dec.converged);
  EXPECT_LE(dec.iterations, cfg.max_iterations);
  EXPECT_LT(mpc.last_trace().residual.back(), cfg.tolerance);
  // Planned interactions agree with the neighbors' plans.
  for (int i = 0; i < d.size(); ++i) {
    const GoalSolution own = mpc.local_plan(i);
    for (int k = 0; k < cfg.P; ++k) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(6), u = Eigen::VectorXd::Zero(6);
      for (int j = 0; j < d.size(); ++j) {
        const GoalSolution pj = mpc.local_plan(j);
        x(j) = pj.x(k, 0);
        u(j) = pj.u(k, 0);
      }
      if (own.z.cols()) {
        EXPECT_NEAR(own.z(k, 0), d.interaction(i, x, u)(0), 10 * cfg.tolerance);
      }
    }
  }
  EXPECT_EQ(mpc.multipliers(0).rows(), cfg.P);
}

TEST(GoalCoordination, MessagesOnlyReachNeighbors) {
  const auto ss = build_discrete_model(default_building(), 300.0);
  const auto d = decompose(ss, zone_partition(6));
  DmpcConfig cfg;
  cfg.record_transcript = true;
  GoalCoordinationMpc mpc(d, cfg);
  StepContext ctx;
  ctx.y = Eigen::VectorXd::Constant(6, 19.0);
  ctx.u_prev = Eigen::VectorXd::Constant(6, 30.0);
  ctx.reference = Eigen::MatrixXd::Constant(cfg.P + 1, 6, 21.0);
  ctx.forecast = Eigen::MatrixXd::Constant(cfg.P, 1, 0.0);
  mpc.step(ctx);
  auto linked = [&](int a, int b) {
    const auto& na = d.neighbors[a];
    const auto& nb = d.neighbors[b];
    return std::find(na.begin(), na.end(), b) != na.end() || std::find(nb.begin(), nb.end(), a) != nb.end();
  };
  ASSERT_FALSE(mpc.transcript().empty());
  for (const auto& e : mpc.transcript()) EXPECT_TRUE(linked(e.sender, e.receiver));
  ASSERT_FALSE(mpc.inbox_reads().empty());
  for (const auto& [receiver, sender] : mpc.inbox_reads()) EXPECT_TRUE(linked(receiver, sender));
  for (const auto& [agent, zone] : mpc.measurement_reads()) EXPECT_EQ(agent, zone);
}

TEST(GoalCoordination, IndependentOfAgentOrderAndThreads) {
  const auto ss = build_discrete_model(default_building(), 300.0);
  const auto d = decompose(ss, zone_partition(6));
  DmpcConfig base;
  DmpcConfig other = base;
  other.agent_order = {3, 1, 5, 0, 2, 4};
  other.threads = 4;
  GoalCoordinationMpc a(d, base), b(d, other);
  StepContext ctx;
  ctx.y = Eigen::VectorXd::Constant(6, 17.0);
  ctx.u_prev = Eigen::VectorXd::Constant(6, 20.0);
  ctx.reference = Eigen::MatrixXd::Constant(base.P + 1, 6, 22.0);
  ctx.forecast = Eigen::MatrixXd::Constant(base.P, 1, -6.0);
  for (int k = 0; k < 4; ++k) {
    const auto da = a.step(ctx);
    const auto db = b.step(ctx);
    ASSERT_EQ(da.iterations, db.iterations);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(da.u(i), db.u(i));
    ctx.u_prev = da.u;
    ctx.y.array() += 0.5;
  }
}

TEST(GoalCoordination, RequiresFullStateMeasurement) {
  std::mt19937_64 rng(10);
  auto ss = tu::random_coupled_model(rng, {1, 1});
  ss.C(0, 0) = 2.0;
  DmpcConfig cfg;
  EXPECT_THROW(GoalCoordinationMpc(decompose(ss, tu::block_partition({1, 1})), cfg), InvalidConfigError);
}
