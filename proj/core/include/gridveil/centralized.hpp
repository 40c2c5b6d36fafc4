#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gridveil/agent_model.hpp"
#include "gridveil/constraint_blocks.hpp"

namespace gridveil::pdhg {

/// min 1/2 x'Hx + c'x  s.t.  A x = b,  G x <= h.
struct QuadraticProgram {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // inequality multipliers (>= 0)
  int iterations = 0;
  bool converged = false;
};

/// Mehrotra predictor-corrector interior point on the dense KKT system.
QpSolution solve_qp(const QuadraticProgram& qp, double tol = 1e-10, int max_iters = 200);

struct CentralizedResult {
  std::vector<Eigen::VectorXd> phi;  // per agent, same layout as the blocks
  double objective = 0.0;
  double traded_energy = 0.0;
  KktReport kkt;
  int iterations = 0;
  bool converged = false;
};

/// Stacked problem with one reciprocity row per partner pair.
QuadraticProgram build_centralized_qp(const grid::GridCase& gc,
                                      const std::vector<grid::ConstraintBlocks>& blocks,
                                      std::vector<int>* offsets = nullptr);

CentralizedResult solve_centralized(const grid::GridCase& gc);

/// Sum over sellers of their traded energy.
double traded_energy(const grid::GridCase& gc, const std::vector<grid::ConstraintBlocks>& blocks,
                     const std::vector<Eigen::VectorXd>& phi);

/// Total cost sum_i G_i.
double total_cost(const grid::GridCase& gc, const std::vector<grid::ConstraintBlocks>& blocks,
                  const std::vector<Eigen::VectorXd>& phi);

}  // namespace gridveil::pdhg
