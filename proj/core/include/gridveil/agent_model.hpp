#pragma once

#include <Eigen/Dense>

#include "gridveil/constraint_blocks.hpp"
#include "gridveil/grid_case.hpp"

namespace gridveil::pdhg {

/// Uniform step and penalty settings; defaults are the published ones.
struct StepSettings {
  double mu = 0.07;    // primal step
  double xi_a = 0.02;  // dual step for coupling rows (xi_a^dagger)
  double xi_b = 0.015; // dual step for local rows
  double eta = 1.6;    // initial penalty (eta^dagger)
};

struct AgentState {
  Eigen::VectorXd phi;
  Eigen::VectorXd lambda_a;
  Eigen::VectorXd lambda_b;

  static AgentState zeros(const grid::ConstraintBlocks& cb);
};

/// Individual cost G_i with the literal max(., 0) utility-exchange term.
double cost(const grid::GridCase& gc, const grid::ConstraintBlocks& cb, const Eigen::VectorXd& phi);

enum class Branch {
  Active,  // utility-exchange term always on its active branch (what the solver uses)
  Exact,   // derivative of the literal max(., 0); active branch at the kink itself
};

/// Gradient of G_i. By default the utility-exchange term is differentiated on
/// its active branch (buyers: -p + sum e >= 0, sellers: p - sum e >= 0), which
/// is the side the balance rows keep every feasible point on.
Eigen::VectorXd cost_gradient(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                              const Eigen::VectorXd& phi, Branch branch = Branch::Active);

/// Coupling-row residual A_i Phi_i + foreign.
Eigen::VectorXd coupling_residual(const grid::ConstraintBlocks& cb, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& foreign);

/// Local-row slack B_i Phi_i - b_i (<= 0 when satisfied).
Eigen::VectorXd local_slack(const grid::ConstraintBlocks& cb, const Eigen::VectorXd& phi);

/// Augmented Lagrangian with penalty eta, literal max(., 0) form.
double lagrangian(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                  const AgentState& state, const Eigen::VectorXd& foreign, double eta);

/// grad G + A^T (lambda_a + penalty) + B^T lambda_b. `penalty` is eta * residual
/// in the incremental form and eta^dagger * y in the non-incremental/secure form.
/// Throws ProtocolIncompleteError when `penalty` does not cover every coupling row.
Eigen::VectorXd grad_primal(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                            const AgentState& state, const Eigen::VectorXd& penalty,
                            Branch branch = Branch::Active);

Eigen::VectorXd primal_update(const Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double mu);

/// lambda_a + xi_a * residual(Phi^{k+1}).
Eigen::VectorXd dual_update_global_incremental(const Eigen::VectorXd& lambda_a,
                                               const Eigen::VectorXd& residual_next, double xi_a);

/// lambda_a + xi_a * y, where y = r * residual(Phi^k) already carries r.
Eigen::VectorXd dual_update_global_nonincremental(const Eigen::VectorXd& lambda_a,
                                                  const Eigen::VectorXd& y, double xi_a);

/// max(0, lambda_b + xi_b (B Phi^{k+1} - b)).
Eigen::VectorXd dual_update_local(const Eigen::VectorXd& lambda_b, const Eigen::VectorXd& slack_next,
                                  double xi_b);

struct KktReport {
  double stationarity = 0.0;
  double primal_equality = 0.0;
  double primal_inequality = 0.0;
  double dual_feasibility = 0.0;
  double complementary_slackness = 0.0;

  double worst() const;
  void absorb(const KktReport& other);  // componentwise max
};

/// Norms of the five KKT groups for one agent at a candidate point.
KktReport kkt_residual(const grid::GridCase& gc, const grid::ConstraintBlocks& cb,
                       const AgentState& state, const Eigen::VectorXd& foreign, double eta);

}  // namespace gridveil::pdhg
