#include "gridveil/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridveil/errors.hpp"

namespace gridveil::pdhg {

FeasibleRange feasible_range(const TheoremInputs& in) {
  const double gap = in.eta - in.xi_a;
  if (!(gap > 0.0))
    throw AnalysisPreconditionError("penalty must exceed the dual step (eta - xi_a > 0)");
  if (!(in.mu * in.delta < 1.0)) throw AnalysisPreconditionError("mu * delta must be below 1");
  const double sa_max2 = in.sigma_max_A * in.sigma_max_A;
  const double sa_min2 = in.sigma_min_A * in.sigma_min_A;
  const double sb2 = in.sigma_max_B * in.sigma_max_B;

  FeasibleRange fr;
  fr.inputs = in;
  fr.discriminant = in.xi_a * sa_max2 - gap * sa_min2;
  fr.k1 = (1.0 - in.mu * in.delta) / (in.mu * gap * sa_max2);
  const double margin = in.rho - in.xi_b * sb2;
  const double s = fr.discriminant;
  const double scale = std::max({std::abs(in.xi_a * sa_max2), std::abs(gap * sa_min2), 1e-300});
  if (std::abs(s) <= 1e-12 * scale) {
    fr.condition = 3;
    fr.k2 = std::numeric_limits<double>::infinity();
    fr.lo = 0.0;
    fr.hi = fr.k1;
    fr.empty = margin < 0.0;
  } else if (s > 0.0) {
    fr.condition = 1;
    fr.k2 = margin / s;
    fr.lo = 0.0;
    fr.hi = std::min(fr.k1, fr.k2);
    fr.empty = !(fr.hi > 0.0);
  } else {
    fr.condition = 2;
    fr.k2 = -margin / -s;
    fr.lo = std::max(0.0, fr.k2);
    fr.hi = fr.k1;
    fr.empty = fr.lo > fr.hi;
  }
  return fr;
}

double linear_rate_bound(const TheoremInputs& in, double r, double sigma_min_M) {
  const double gap = (in.eta - in.xi_a) * r;
  const double delta_eta = in.delta + gap * in.sigma_max_A * in.sigma_max_A;
  const double rho_eta = in.rho + gap * in.sigma_min_A * in.sigma_min_A;
  const double theta = 1.0 + (in.mu * in.mu * delta_eta - in.mu) * rho_eta;
  const double sm2 = sigma_min_M * sigma_min_M;
  const double l = std::max({theta, 1.0 - in.mu * in.xi_a * r * sm2, 1.0 - in.mu * in.xi_b * sm2});
  if (!(l < 1.0)) throw RateBoundError("linear rate bound is not below 1 (l = " + std::to_string(l) + ")");
  return l;
}

double sigma_min_stacked(const grid::ConstraintBlocks& cb) {
  Eigen::MatrixXd m(cb.dim, cb.A.rows() + cb.B.rows());
  m << cb.A.transpose(), cb.B.transpose();
  return grid::singular_values(m).min;
}

TheoremInputs theorem_inputs(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                             const StepSettings& steps) {
  TheoremInputs in;
  double rho = std::numeric_limits<double>::infinity();
  double delta = 0.0;
  for (int i = 1; i <= gc.agent_count(); ++i) {
    if (gc.role(i) == grid::Role::Inactive) continue;
    rho = std::min(rho, 2.0 * gc.prosumers[i].alpha);
    delta = std::max(delta, 2.0 * gc.prosumers[i].epsilon);
  }
  in.rho = std::isfinite(rho) ? rho : 0.0;
  in.delta = delta;
  in.mu = steps.mu;
  in.xi_a = steps.xi_a;
  in.xi_b = steps.xi_b;
  in.eta = steps.eta;
  in.sigma_max_A = cb.sigma_max_A;
  in.sigma_min_A = cb.sigma_min_A;
  in.sigma_max_B = cb.sigma_max_B;
  return in;
}

double weighted_error(const grid::ConstraintBlocks& cb, const AgentState& state,
                      const AgentState& optimum, double mu, double xi_a, double xi_b) {
  const double c_phi = 1.0 - mu * xi_a * cb.sigma_max_A * cb.sigma_max_A -
                       mu * xi_b * cb.sigma_max_B * cb.sigma_max_B;
  const double c_a = mu / xi_a;
  const double c_b = mu / xi_b;
  return c_phi * (state.phi - optimum.phi).squaredNorm() +
         c_a * (state.lambda_a - optimum.lambda_a).squaredNorm() +
         c_b * (state.lambda_b - optimum.lambda_b).squaredNorm();
}

}  // namespace gridveil::pdhg
