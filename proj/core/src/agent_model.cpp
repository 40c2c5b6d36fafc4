#include "gridveil/agent_model.hpp"

#include <algorithm>

#include "gridveil/errors.hpp"

namespace gridveil::pdhg {

using grid::ConstraintBlocks;
using grid::GridCase;
using grid::Role;

AgentState AgentState::zeros(const ConstraintBlocks& cb) {
  return {Eigen::VectorXd::Zero(cb.dim), Eigen::VectorXd::Zero(cb.A.rows()),
          Eigen::VectorXd::Zero(cb.B.rows())};
}

double cost(const GridCase& gc, const ConstraintBlocks& cb, const Eigen::VectorXd& phi) {
  if (cb.role == Role::Inactive) return 0.0;
  const auto& pp = gc.prosumers[cb.agent];
  const auto e = phi.segment(grid::kTrade0, cb.dim - grid::kTrade0);
  const double p = phi(grid::kP);
  double g = pp.alpha * e.squaredNorm() + pp.beta * e.sum() +
             pp.epsilon * (p - pp.p_desired) * (p - pp.p_desired);
  if (cb.role == Role::Buyer)
    g += gc.omega_b * std::max(-p + e.sum(), 0.0);
  else
    g -= gc.omega_s * std::max(p - e.sum(), 0.0);
  return g;
}

Eigen::VectorXd cost_gradient(const GridCase& gc, const ConstraintBlocks& cb,
                              const Eigen::VectorXd& phi, Branch branch) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(cb.dim);
  if (cb.role == Role::Inactive) return g;
  const auto& pp = gc.prosumers[cb.agent];
  double price = cb.role == Role::Buyer ? gc.omega_b : gc.omega_s;
  if (branch == Branch::Exact) {
    const double sgn = cb.role == Role::Buyer ? 1.0 : -1.0;
    const double arg = sgn * (phi.segment(grid::kTrade0, cb.dim - grid::kTrade0).sum() - phi(grid::kP));
    if (arg < 0.0) price = 0.0;
  }
  g(grid::kP) = 2.0 * pp.epsilon * (phi(grid::kP) - pp.p_desired) - price;
  for (int k = grid::kTrade0; k < cb.dim; ++k) g(k) = 2.0 * pp.alpha * phi(k) + pp.beta + price;
  return g;
}

Eigen::VectorXd coupling_residual(const ConstraintBlocks& cb, const Eigen::VectorXd& phi,
                                  const Eigen::VectorXd& foreign) {
  if (foreign.size() != cb.A.rows())
    throw ProtocolIncompleteError("coupled terms missing for agent " + std::to_string(cb.agent));
  return cb.A * phi + foreign;
}

Eigen::VectorXd local_slack(const ConstraintBlocks& cb, const Eigen::VectorXd& phi) {
  return cb.B * phi - cb.b;
}

double lagrangian(const GridCase& gc, const ConstraintBlocks& cb, const AgentState& state,
                  const Eigen::VectorXd& foreign, double eta) {
  const Eigen::VectorXd res = coupling_residual(cb, state.phi, foreign);
  return cost(gc, cb, state.phi) + state.lambda_a.dot(res) + 0.5 * eta * res.squaredNorm() +
         state.lambda_b.dot(local_slack(cb, state.phi));
}

Eigen::VectorXd grad_primal(const GridCase& gc, const ConstraintBlocks& cb, const AgentState& state,
                            const Eigen::VectorXd& penalty, Branch branch) {
  if (penalty.size() != cb.A.rows())
    throw ProtocolIncompleteError("coupled terms missing for agent " + std::to_string(cb.agent));
  return cost_gradient(gc, cb, state.phi, branch) + cb.A.transpose() * (state.lambda_a + penalty) +
         cb.B.transpose() * state.lambda_b;
}

Eigen::VectorXd primal_update(const Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double mu) {
  return phi - mu * grad;
}

Eigen::VectorXd dual_update_global_incremental(const Eigen::VectorXd& lambda_a,
                                               const Eigen::VectorXd& residual_next, double xi_a) {
  return lambda_a + xi_a * residual_next;
}

Eigen::VectorXd dual_update_global_nonincremental(const Eigen::VectorXd& lambda_a,
                                                  const Eigen::VectorXd& y, double xi_a) {
  return lambda_a + xi_a * y;
}

Eigen::VectorXd dual_update_local(const Eigen::VectorXd& lambda_b, const Eigen::VectorXd& slack_next,
                                  double xi_b) {
  return (lambda_b + xi_b * slack_next).cwiseMax(0.0);
}

double KktReport::worst() const {
  return std::max({stationarity, primal_equality, primal_inequality, dual_feasibility,
                   complementary_slackness});
}

void KktReport::absorb(const KktReport& o) {
  stationarity = std::max(stationarity, o.stationarity);
  primal_equality = std::max(primal_equality, o.primal_equality);
  primal_inequality = std::max(primal_inequality, o.primal_inequality);
  dual_feasibility = std::max(dual_feasibility, o.dual_feasibility);
  complementary_slackness = std::max(complementary_slackness, o.complementary_slackness);
}

KktReport kkt_residual(const GridCase& gc, const ConstraintBlocks& cb, const AgentState& state,
                       const Eigen::VectorXd& foreign, double eta) {
  const Eigen::VectorXd res = coupling_residual(cb, state.phi, foreign);
  const Eigen::VectorXd slack = local_slack(cb, state.phi);
  KktReport r;
  r.stationarity = grad_primal(gc, cb, state, eta * res).norm();
  r.primal_equality = res.norm();
  r.primal_inequality = slack.cwiseMax(0.0).norm();
  r.dual_feasibility = state.lambda_b.cwiseMin(0.0).norm();
  r.complementary_slackness = state.lambda_b.cwiseProduct(slack).norm();
  return r;
}

}  // namespace gridveil::pdhg
