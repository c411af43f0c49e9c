#include "zonempc/box_qp.hpp"

#include <vector>

namespace zonempc {

namespace {

Eigen::VectorXd clip(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

double objective(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(H * x) + g.dot(x);
}

}  // namespace

double box_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                        const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                        const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = H * x + g;
  return (x - clip(x - grad, lower, upper)).cwiseAbs().maxCoeff();
}

// Projected Newton on the free variables, then coordinate refinement with
// clipping if the active set has not settled.
BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                         const Eigen::VectorXd& x0, const BoxQpOptions& options) {
  const Eigen::Index n = g.size();
  BoxQpResult res;
  res.x = clip(x0, lower, upper);
  if (n == 0) {
    res.converged = true;
    return res;
  }

  std::vector<Eigen::Index> free_idx;
  for (int it = 0; it < options.max_newton_iterations; ++it) {
    Eigen::VectorXd grad = H * res.x + g;
    res.kkt_residual = (res.x - clip(res.x - grad, lower, upper)).cwiseAbs().maxCoeff();
    res.iterations = it;
    if (res.kkt_residual <= options.tolerance) {
      res.converged = true;
      return res;
    }
    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = res.x(i) <= lower(i) && grad(i) > 0.0;
      const bool at_hi = res.x(i) >= upper(i) && grad(i) < 0.0;
      if (!at_lo && !at_hi) free_idx.push_back(i);
    }
    if (free_idx.empty()) break;
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::MatrixXd hff(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf(a) = grad(free_idx[a]);
      for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = H(free_idx[a], free_idx[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hff);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd df = llt.solve(-gf);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < nf; ++a) d(free_idx[a]) = df(a);

    const double f0 = objective(H, g, res.x);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd trial = clip(res.x + step * d, lower, upper);
      if (objective(H, g, trial) <= f0 + 1e-4 * grad.dot(trial - res.x)) {
        res.x = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  // Coordinate refinement.
  Eigen::VectorXd grad = H * res.x + g;
  for (int sweep = 0; sweep < options.max_coordinate_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = std::min(upper(i), std::max(lower(i), res.x(i) - grad(i) / H(i, i)));
      const double delta = xi - res.x(i);
      if (delta != 0.0) {
        res.x(i) = xi;
        grad += delta * H.col(i);
      }
    }
    res.kkt_residual = (res.x - clip(res.x - grad, lower, upper)).cwiseAbs().maxCoeff();
    if (res.kkt_residual <= options.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace zonempc
