#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridveil/agent_model.hpp"
#include "gridveil/constraint_blocks.hpp"

namespace gridveil::pdhg {

/// Everything the step-coefficient analysis needs for one agent.
struct TheoremInputs {
  double rho = 0.0;    // strong-convexity modulus of G_i
  double delta = 0.0;  // smoothness modulus of G_i
  double mu = 0.0;
  double xi_a = 0.0;   // xi_a^dagger
  double xi_b = 0.0;
  double eta = 0.0;    // eta^dagger
  double sigma_max_A = 0.0;
  double sigma_min_A = 0.0;
  double sigma_max_B = 0.0;
};

struct FeasibleRange {
  int condition = 0;  // 1, 2 or 3
  double discriminant = 0.0;  // xi_a sigma_max(A)^2 - (eta - xi_a) sigma_min(A)^2
  double k1 = 0.0;
  double k2 = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;
  TheoremInputs inputs;

  bool contains(double r) const { return !empty && r > 0.0 && r >= lo && r <= hi; }
};

/// Admissible interval for the blinding coefficient r. Throws
/// AnalysisPreconditionError when eta - xi_a <= 0 or mu * delta >= 1.
/// An empty interval is reported through `empty`, never clamped.
FeasibleRange feasible_range(const TheoremInputs& in);

/// l = max(theta, 1 - mu xi_a r sigma_min(M)^2, 1 - mu xi_b sigma_min(M)^2)
/// with M = [A^T, B^T]. Throws RateBoundError when l >= 1.
double linear_rate_bound(const TheoremInputs& in, double r, double sigma_min_M);

/// sigma_min of [A^T, B^T].
double sigma_min_stacked(const grid::ConstraintBlocks& cb);

/// rho = min 2 alpha and delta = max 2 epsilon over active agents, steps from
/// `steps`, singular values from agent `agent`'s blocks.
TheoremInputs theorem_inputs(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                             const StepSettings& steps);

/// Weighted error c_Phi |Phi~|^2 + c_a |lambda_a~|^2 + c_b |lambda_b~|^2 with
/// the constants of the contraction argument for effective dual step xi_a.
double weighted_error(const grid::ConstraintBlocks& cb, const AgentState& state,
                      const AgentState& optimum, double mu, double xi_a, double xi_b);

}  // namespace gridveil::pdhg
