#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "gridveil/case_generator.hpp"
#include "gridveil/constraint_blocks.hpp"
#include "gridveil/errors.hpp"
#include "gridveil/grid_case.hpp"

using namespace gridveil;
using namespace gridveil::grid;

namespace {

const std::string kCases = std::string(GRIDVEIL_DATA_DIR) + "/cases/";

// two-bus line, agent 2 child of agent 1
std::string line_case(const std::string& parent_of_1) {
  return R"({"buses": [
    {"id": 1, "parent": )" + parent_of_1 + R"(, "r_pu": 0.01, "x_pu": 0.01, "v_min": 0.9, "v_max": 1.1,
     "p_flow_min": -100, "p_flow_max": 100, "q_flow_min": -100, "q_flow_max": 100},
    {"id": 2, "parent": 1, "r_pu": 0.01, "x_pu": 0.01, "v_min": 0.9, "v_max": 1.1,
     "p_flow_min": -100, "p_flow_max": 100, "q_flow_min": -100, "q_flow_max": 100}],
  "prosumers": [
    {"bus": 1, "alpha": 0.05, "beta": 2, "epsilon": 3, "p_desired": -5, "p_min": -10, "p_max": 0, "q_min": -1, "q_max": 1},
    {"bus": 2, "alpha": 0.05, "beta": 1, "epsilon": 3, "p_desired": 3, "p_min": 0, "p_max": 6, "q_min": -1, "q_max": 1}],
  "market": {"omega_b": 2.0, "omega_s": 0.6, "partners": "complete"}})";
}

// Singular values as square roots of the eigenvalues of M^T M.
std::vector<double> svals_by_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  std::vector<double> out;
  for (int i = 0; i < es.eigenvalues().size(); ++i) out.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("roles from the desired injection sign") {
  CHECK(classify(-5.0) == Role::Buyer);
  CHECK(classify(0.0) == Role::Inactive);
  CHECK(classify(3.0) == Role::Seller);
}

TEST_CASE("toy case") {
  const GridCase gc = load_case(kCases + "toy3.json");
  CHECK(gc.agent_count() == 2);
  REQUIRE(gc.children.size() == 3);
  CHECK(gc.children[1] == std::vector<int>{2});
  CHECK(gc.children[2].empty());
  CHECK(gc.partners[1] == std::vector<int>{2});
  CHECK(gc.partners[2] == std::vector<int>{1});
  CHECK(gc.role(1) == Role::Buyer);
  CHECK(gc.role(2) == Role::Seller);
  CHECK(path_to_root(gc, 2) == std::vector<int>{2, 1});
}

TEST_CASE("bundled 15-bus case") {
  const GridCase gc = load_case(kCases + "ieee15.json");
  CHECK(gc.agent_count() == 15);
  CHECK(gc.buses[0].parent == -1);
  for (int i = 1; i <= 15; ++i) {
    const auto path = path_to_root(gc, i);
    CHECK(gc.buses[path.back()].parent == 0);
  }
  const Partition part = classify_agents(gc);
  CHECK(part.buyers.size() + part.sellers.size() + part.inactive.size() == 15);
  for (int b : part.buyers)
    CHECK(gc.partners[b].size() == part.sellers.size());
}

TEST_CASE("validation") {
  CHECK_NOTHROW(parse_case(line_case("0")));
  CHECK_THROWS_AS(parse_case(line_case("2")), ValidationError);   // cycle 1 -> 2 -> 1
  CHECK_THROWS_AS(parse_case(line_case("7")), ValidationError);   // unknown parent
  CHECK_THROWS_AS(parse_case("{not json"), ValidationError);
}

TEST_CASE("case JSON round trip") {
  const GridCase gc = load_case(kCases + "toy3.json");
  const GridCase back = parse_case(case_to_json(gc, true));
  CHECK(back.agent_count() == gc.agent_count());
  CHECK(back.partners == gc.partners);
  CHECK(back.prosumers[2].beta == gc.prosumers[2].beta);
  CHECK(back.buses[2].x_pu == gc.buses[2].x_pu);
}

TEST_CASE("toy buyer blocks by hand") {
  const GridCase gc = load_case(kCases + "toy3.json");
  const ConstraintBlocks cb = build_constraint_blocks(gc, 1);
  REQUIRE(cb.dim == 6);
  REQUIRE(cb.A.rows() == 4);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(4, 6);
  expect(0, kTrade0) = 1.0;
  expect(1, kV) = -1.0;
  expect(1, kFlowP) = -2.0 * 0.005 / 1000.0;
  expect(1, kFlowQ) = -2.0 * 0.004 / 1000.0;
  expect(2, kP) = -1.0;
  expect(2, kFlowP) = -1.0;
  expect(3, kQ) = -1.0;
  expect(3, kFlowQ) = -1.0;
  CHECK((cb.A - expect).norm() == doctest::Approx(0.0));
  CHECK(cb.rows[0].kind == RowKind::Reciprocity);
  CHECK(cb.rows[0].peer == 2);
  CHECK(cb.rows[1].kind == RowKind::Voltage);
  CHECK(cb.rows[2].neighbours == std::vector<int>{2});

  // the local rows restricted to (p, e) are the trading block
  std::vector<int> rows;
  for (int r = 0; r < cb.B.rows(); ++r)
    if (cb.B(r, kP) != 0.0 || cb.B(r, kTrade0) != 0.0) rows.push_back(r);
  Eigen::MatrixXd sub(rows.size(), 2);
  for (std::size_t k = 0; k < rows.size(); ++k) sub.row(k) << cb.B(rows[k], kP), cb.B(rows[k], kTrade0);
  const double smax = singular_values(sub).max;
  CHECK(smax == doctest::Approx(std::sqrt((5.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-12));
  CHECK(smax == doctest::Approx(1.9021).epsilon(1e-4));
}

TEST_CASE("foreign terms and residual by hand") {
  const GridCase gc = load_case(kCases + "toy3.json");
  const auto blocks = build_all_blocks(gc);
  std::vector<Eigen::VectorXd> phi(3);
  phi[1] = Eigen::VectorXd(6);
  phi[1] << -10, 1, 5, 2, 0.99, -4;
  phi[2] = Eigen::VectorXd(6);
  phi[2] << 8, -1, 3, 0.5, 0.98, 4.5;
  const Eigen::VectorXd f = foreign_terms(gc, blocks, phi, 1);
  REQUIRE(f.size() == 4);
  CHECK(f(0) == 4.5);   // e_21
  CHECK(f(1) == 1.0);   // v_root
  CHECK(f(2) == 3.0);   // P_2
  CHECK(f(3) == 0.5);   // Q_2
  const Eigen::VectorXd res = blocks[1].A * phi[1] + f;
  CHECK(res(0) == doctest::Approx(0.5));
  CHECK(res(1) == doctest::Approx(1.0 - 0.99 - 2.0 * (0.005 * 5 + 0.004 * 2) / 1000.0));
  CHECK(res(2) == doctest::Approx(3.0 + 10.0 - 5.0));
  CHECK(res(3) == doctest::Approx(0.5 - 1.0 - 2.0));

  const Eigen::VectorXd f2 = foreign_terms(gc, blocks, phi, 2);
  CHECK(f2(0) == -4.0);  // e_12
  CHECK(f2(1) == 0.99);  // v_1
  CHECK(f2(2) == 0.0);   // leaf
}

TEST_CASE("cached singular values match an independent eigen solve") {
  for (const char* name : {"toy3.json", "ieee15.json", "inactive4.json"}) {
    const GridCase gc = load_case(kCases + name);
    for (const auto& cb : build_all_blocks(gc)) {
      if (cb.agent == 0) continue;
      const auto sa = svals_by_eigen(cb.A);
      const int ka = std::min<int>(cb.A.rows(), cb.A.cols());
      CHECK(cb.sigma_max_A == doctest::Approx(sa.back()).epsilon(1e-10));
      CHECK(cb.sigma_min_A == doctest::Approx(sa[sa.size() - ka]).epsilon(1e-8));
      CHECK(cb.sigma_max_B == doctest::Approx(svals_by_eigen(cb.B).back()).epsilon(1e-10));
    }
  }
}

TEST_CASE("random small blocks match brute-force singular values") {
  std::srand(4);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Random(3 + t % 4, 2 + t % 3);
    const auto s = svals_by_eigen(m);
    const auto r = singular_values(m);
    CHECK(r.max == doctest::Approx(s.back()).epsilon(1e-10));
    const std::size_t k = std::min(m.rows(), m.cols());
    CHECK(r.min == doctest::Approx(s[s.size() - k]).epsilon(1e-8));
  }
}

TEST_CASE("inactive agents keep network rows only") {
  const GridCase gc = load_case(kCases + "inactive4.json");
  for (int i = 1; i <= gc.agent_count(); ++i) {
    const auto cb = build_constraint_blocks(gc, i);
    CHECK(cb.role == Role::Inactive);
    CHECK(cb.partners.empty());
    CHECK(cb.dim == kTrade0);
    CHECK(cb.A.rows() == 3);
  }
}

TEST_CASE("generators are deterministic and valid") {
  const GridCase a = random_tree_case(34, 99);
  const GridCase b = random_tree_case(34, 99);
  CHECK(case_to_json(a) == case_to_json(b));
  CHECK_NOTHROW(validate(a));
  CHECK_NOTHROW(validate(fifteen_bus_case(5)));
  CHECK_NOTHROW(validate(three_bus_case()));
  CHECK(classify_agents(inactive_case(3)).inactive.size() == 3);
}
