#include "doctest.h"

#include <cmath>
#include <random>

#include "gridveil/agent_model.hpp"
#include "gridveil/centralized.hpp"
#include "gridveil/constraint_blocks.hpp"
#include "gridveil/convergence.hpp"
#include "gridveil/errors.hpp"
#include "gridveil/grid_case.hpp"

using namespace gridveil;
using namespace gridveil::pdhg;
using grid::ConstraintBlocks;
using grid::GridCase;

namespace {

const std::string kCases = std::string(GRIDVEIL_DATA_DIR) + "/cases/";

TheoremInputs published_inputs() {
  TheoremInputs in;
  in.rho = 0.02;
  in.delta = 7.0;
  in.mu = 0.07;
  in.xi_a = 0.02;
  in.xi_b = 0.015;
  in.eta = 1.6;
  in.sigma_min_A = 1.0;
  in.sigma_max_A = 1.4142;
  in.sigma_max_B = 1.9021;
  return in;
}

}  // namespace

TEST_CASE("voltage row balanced -> zero voltage gradient") {
  const GridCase gc = grid::load_case(kCases + "toy3.json");
  const auto blocks = grid::build_all_blocks(gc);
  const ConstraintBlocks& cb = blocks[2];
  std::vector<Eigen::VectorXd> phi{Eigen::VectorXd(), Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6)};
  phi[1](grid::kV) = 1.05;
  phi[2](grid::kV) = 1.0;
  // 2 (R P + X Q) / base = 0.05 with R = 0.004
  phi[2](grid::kFlowP) = 0.025 * 1000.0 / 0.004;
  AgentState st = AgentState::zeros(cb);
  st.phi = phi[2];
  const Eigen::VectorXd res = coupling_residual(cb, st.phi, grid::foreign_terms(gc, blocks, phi, 2));
  CHECK(res(cb.voltage_row()) == doctest::Approx(0.0).epsilon(1e-15));
  const Eigen::VectorXd g = grad_primal(gc, cb, st, 1.0 * res);
  CHECK(std::abs(g(grid::kV)) < 1e-12);
}

TEST_CASE("trade gradient at zero initialization") {
  const GridCase gc = grid::load_case(kCases + "toy3.json");
  const auto blocks = grid::build_all_blocks(gc);
  const Eigen::VectorXd gb = cost_gradient(gc, blocks[1], Eigen::VectorXd::Zero(6));
  CHECK(gb(grid::kTrade0) == gc.prosumers[1].beta + gc.omega_b);
  const Eigen::VectorXd gs = cost_gradient(gc, blocks[2], Eigen::VectorXd::Zero(6));
  CHECK(gs(grid::kTrade0) == gc.prosumers[2].beta + gc.omega_s);
  // first primal step inverts to beta = -e^1 / mu - omega_b
  AgentState st = AgentState::zeros(blocks[1]);
  const Eigen::VectorXd next =
      primal_update(st.phi, grad_primal(gc, blocks[1], st, Eigen::VectorXd::Zero(4)), 0.07);
  CHECK(-next(grid::kTrade0) / 0.07 - gc.omega_b == doctest::Approx(gc.prosumers[1].beta));
}

TEST_CASE("analytic gradient matches central differences") {
  const GridCase gc = grid::load_case(kCases + "ieee15.json");
  const auto blocks = grid::build_all_blocks(gc);
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const ConstraintBlocks& cb = blocks[1 + t % gc.agent_count()];
    AgentState st = AgentState::zeros(cb);
    for (int k = 0; k < cb.dim; ++k) st.phi(k) = 20.0 * u(gen);
    st.phi(grid::kV) = 1.0 + 0.1 * u(gen);
    for (int k = 0; k < st.lambda_a.size(); ++k) st.lambda_a(k) = u(gen);
    for (int k = 0; k < st.lambda_b.size(); ++k) st.lambda_b(k) = std::abs(u(gen));
    Eigen::VectorXd foreign(cb.A.rows());
    for (int k = 0; k < foreign.size(); ++k) foreign(k) = 5.0 * u(gen);
    const double eta = 1.6;
    const double kink = cb.dim > grid::kTrade0
                            ? st.phi.segment(grid::kTrade0, cb.dim - grid::kTrade0).sum() - st.phi(grid::kP)
                            : 1.0;
    if (std::abs(kink) < 1.0) continue;
    const Eigen::VectorXd res = coupling_residual(cb, st.phi, foreign);
    const Eigen::VectorXd g = grad_primal(gc, cb, st, eta * res, Branch::Exact);
    for (int k = 0; k < cb.dim; ++k) {
      // exact on quadratics; the step only has to stay clear of the kink
      const double h = 1e-3 * std::max(1.0, std::abs(st.phi(k)));
      AgentState a = st, b = st;
      a.phi(k) += h;
      b.phi(k) -= h;
      const double fd = (lagrangian(gc, cb, a, foreign, eta) - lagrangian(gc, cb, b, foreign, eta)) / (2 * h);
      CHECK(std::abs(fd - g(k)) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("primal step arithmetic") {
  Eigen::VectorXd phi(3), g(3);
  phi << 1.0, -2.0, 0.5;
  g << 10.0, -1.0, 0.0;
  const Eigen::VectorXd next = primal_update(phi, g, 0.07);
  CHECK(next(0) == doctest::Approx(1.0 - 0.7));
  CHECK(next(1) == doctest::Approx(-2.0 + 0.07));
  CHECK(next(2) == 0.5);
  CHECK(primal_update(phi, Eigen::VectorXd::Zero(3), 0.07) == phi);
}

TEST_CASE("global dual updates") {
  Eigen::VectorXd lam(2), res(2);
  lam << 0.3, -0.1;
  res << 0.0, 0.0;
  CHECK(dual_update_global_incremental(lam, res, 0.02) == lam);
  // reciprocity row e_12 + e_21 = -4 + 4.5
  res << -4.0 + 4.5, 2.0;
  const Eigen::VectorXd next = dual_update_global_incremental(lam, res, 0.02);
  CHECK(next(0) == doctest::Approx(0.3 + 0.02 * 0.5));
  CHECK(next(1) == doctest::Approx(-0.1 + 0.04));
  // y = r * res; r = 1 gives the same update
  CHECK(dual_update_global_nonincremental(lam, res, 0.02) == next);
  CHECK(dual_update_global_nonincremental(lam, Eigen::VectorXd::Zero(2), 0.02) == lam);
}

TEST_CASE("penalty enters the gradient with the residual sign") {
  const GridCase gc = grid::load_case(kCases + "toy3.json");
  const auto cb = grid::build_constraint_blocks(gc, 1);
  AgentState st = AgentState::zeros(cb);
  Eigen::VectorXd pen = Eigen::VectorXd::Zero(4);
  pen(0) = 1.6 * 0.5;  // eta (e_12 + e_21)
  const Eigen::VectorXd g0 = grad_primal(gc, cb, st, Eigen::VectorXd::Zero(4));
  const Eigen::VectorXd g1 = grad_primal(gc, cb, st, pen);
  CHECK(g1(grid::kTrade0) - g0(grid::kTrade0) == doctest::Approx(0.8));
}

TEST_CASE("local dual projection") {
  Eigen::VectorXd lam(2), slack(2);
  lam << 0.0, 0.0;
  slack << -3.0, 2.0;
  const Eigen::VectorXd next = dual_update_local(lam, slack, 0.015);
  CHECK(next(0) == 0.0);
  CHECK(next(1) == doctest::Approx(0.03));
  lam << 0.01, 0.5;
  const Eigen::VectorXd n2 = dual_update_local(lam, slack, 0.015);
  CHECK(n2(0) == 0.0);
  CHECK(n2(1) == doctest::Approx(0.53));
}

TEST_CASE("published step settings give condition 2 and the published range") {
  const FeasibleRange fr = feasible_range(published_inputs());
  CHECK(fr.condition == 2);
  CHECK_FALSE(fr.empty);
  CHECK(std::abs(fr.lo - 0.0223) <= 1e-4);
  CHECK(std::abs(fr.hi - 2.3057) <= 1e-4);
  CHECK(fr.discriminant == doctest::Approx(-1.54).epsilon(1e-4));
  // direct substitution
  const double k1 = (1.0 - 0.49) / (0.07 * 1.58 * 2.0);
  const double k2 = (0.015 * 3.618 - 0.02) / 1.54;
  CHECK(std::abs(fr.k1 - k1) < 2e-4);
  CHECK(std::abs(fr.k2 - k2) < 1e-4);
  CHECK(k1 == doctest::Approx(2.3056).epsilon(1e-4));
  CHECK(k2 == doctest::Approx(0.02226).epsilon(1e-3));
}

TEST_CASE("range conditions 1 and 3 and preconditions") {
  TheoremInputs in = published_inputs();
  in.sigma_min_A = std::sqrt(in.xi_a * in.sigma_max_A * in.sigma_max_A / (in.eta - in.xi_a));
  const FeasibleRange c3 = feasible_range(in);
  CHECK(c3.condition == 3);
  CHECK(c3.hi == doctest::Approx(c3.k1));
  CHECK(c3.empty);  // xi_b sigma_B^2 > rho

  in = published_inputs();
  in.eta = 0.021;
  in.xi_b = 0.001;
  const FeasibleRange c1 = feasible_range(in);
  CHECK(c1.condition == 1);
  CHECK(c1.lo == 0.0);
  CHECK(c1.hi == doctest::Approx(std::min(c1.k1, c1.k2)));

  in = published_inputs();
  in.eta = 0.01;
  CHECK_THROWS_AS(feasible_range(in), AnalysisPreconditionError);
  in = published_inputs();
  in.mu = 0.2;
  CHECK_THROWS_AS(feasible_range(in), AnalysisPreconditionError);
}

TEST_CASE("linear rate bound") {
  const TheoremInputs in = published_inputs();
  const FeasibleRange fr = feasible_range(in);
  for (double r : {1.0, fr.lo, fr.hi * (1.0 - 1e-6)}) {
    const double l = linear_rate_bound(in, r, 0.5);
    CHECK(l < 1.0);
    CHECK(l > 0.0);
  }
  // k1 is where mu * delta_eta = 1, so theta reaches 1 exactly there
  CHECK_THROWS_AS(linear_rate_bound(in, fr.k1 * (1.0 + 1e-9), 0.5), RateBoundError);
  TheoremInputs slow = in;
  slow.mu = 1e-6;
  const double theta = 1.0 + (slow.mu * slow.mu * (slow.delta + (slow.eta - slow.xi_a) * 2.0) - slow.mu) *
                                 (slow.rho + (slow.eta - slow.xi_a) * 1.0);
  CHECK(theta < 1.0);
  CHECK(theta > 1.0 - 1e-5);
  CHECK(linear_rate_bound(slow, 1.0, 0.5) >= theta);
  CHECK_THROWS_AS(linear_rate_bound(in, 1.0, 0.0), RateBoundError);
}

TEST_CASE("interior point on a tiny QP") {
  // min (x - 1)^2 + (y - 2)^2  s.t.  x + y = 1, x >= 0, y <= 0.8
  // optimum on y = 0.8, x = 0.2 (checked by a grid search below)
  QuadraticProgram qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.c = Eigen::Vector2d(-2.0, -4.0);
  qp.A = Eigen::RowVector2d(1.0, 1.0);
  qp.b = Eigen::VectorXd::Constant(1, 1.0);
  qp.G = Eigen::MatrixXd(2, 2);
  qp.G << -1.0, 0.0, 0.0, 1.0;
  qp.h = Eigen::Vector2d(0.0, 0.8);
  const QpSolution s = solve_qp(qp);
  REQUIRE(s.converged);

  double best = 1e300, bx = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = i * 1e-5, y = 1.0 - x;
    if (y > 0.8) continue;
    const double f = (x - 1) * (x - 1) + (y - 2) * (y - 2);
    if (f < best) best = f, bx = x;
  }
  CHECK(s.x(0) == doctest::Approx(bx).epsilon(1e-4));
  CHECK(s.x(1) == doctest::Approx(1.0 - bx).epsilon(1e-4));
  CHECK(s.z.minCoeff() >= -1e-12);
}

TEST_CASE("KKT residuals") {
  const GridCase gc = grid::load_case(kCases + "toy3.json");
  const CentralizedResult c = solve_centralized(gc);
  REQUIRE(c.converged);
  CHECK(c.kkt.worst() < 1e-6);

  const auto cb = grid::build_constraint_blocks(gc, 1);
  AgentState st = AgentState::zeros(cb);
  st.phi(grid::kP) = -30.0;
  st.phi(grid::kV) = 1.0;
  const Eigen::VectorXd foreign = -cb.A * st.phi;
  const KktReport interior = kkt_residual(gc, cb, st, foreign, 1.6);
  CHECK(interior.complementary_slackness == 0.0);
  CHECK(interior.primal_equality == 0.0);

  st.phi(grid::kP) = 5.0;  // above p_max = 0
  CHECK(kkt_residual(gc, cb, st, -cb.A * st.phi, 1.6).primal_inequality > 0.0);
  st.lambda_b(0) = -1.0;
  CHECK(kkt_residual(gc, cb, st, -cb.A * st.phi, 1.6).dual_feasibility == 1.0);
}

TEST_CASE("weighted error vanishes at the optimum") {
  const GridCase gc = grid::load_case(kCases + "toy3.json");
  const auto cb = grid::build_constraint_blocks(gc, 2);
  AgentState st = AgentState::zeros(cb);
  st.phi.setConstant(0.3);
  CHECK(weighted_error(cb, st, st, 0.07, 0.02, 0.015) == 0.0);
  AgentState off = st;
  off.lambda_a(0) += 1.0;
  CHECK(weighted_error(cb, off, st, 0.07, 0.02, 0.015) == doctest::Approx(0.07 / 0.02));
}
