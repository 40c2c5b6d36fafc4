#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridveil/grid_case.hpp"

namespace gridveil::grid {

// Local primal layout: [p, q, P, Q, v, e_{i,j} for each partner j].
inline constexpr int kP = 0;
inline constexpr int kQ = 1;
inline constexpr int kFlowP = 2;
inline constexpr int kFlowQ = 3;
inline constexpr int kV = 4;
inline constexpr int kTrade0 = 5;

enum class RowKind { Reciprocity, Voltage, FlowP, FlowQ };

const char* row_kind_name(RowKind k);

/// One coupling row of agent i. Its residual is A_row * Phi_i + foreign, where
/// the foreign term is e_{j,i} (reciprocity), v_t (voltage drop) or the sum of
/// the children's P or Q (flow balance).
struct GlobalRow {
  RowKind kind;
  int peer = -1;                // partner j, or parent t for voltage rows
  std::vector<int> neighbours;  // agents whose data enter the foreign term
};

struct ConstraintBlocks {
  int agent = 0;
  Role role = Role::Inactive;
  int dim = 0;
  std::vector<int> partners;  // order of the e entries

  Eigen::MatrixXd A;
  std::vector<GlobalRow> rows;
  Eigen::MatrixXd B;
  Eigen::VectorXd b;
  std::vector<std::string> local_labels;

  double sigma_max_A = 0.0;
  double sigma_min_A = 0.0;
  double sigma_max_B = 0.0;
  std::vector<std::string> warnings;

  int trade_index(int partner) const;  // -1 if not a partner
  int voltage_row() const { return static_cast<int>(partners.size()); }
  int flow_p_row() const { return voltage_row() + 1; }
  int flow_q_row() const { return voltage_row() + 2; }
};

struct SingularRange {
  double max = 0.0;
  double min = 0.0;  // smallest of the min(rows, cols) singular values
};

SingularRange singular_values(const Eigen::MatrixXd& m);

ConstraintBlocks build_constraint_blocks(const GridCase& gc, int agent);

/// Blocks for agents 1..N (index 0 left empty).
std::vector<ConstraintBlocks> build_all_blocks(const GridCase& gc);

/// Plaintext foreign terms for every global row of `agent`, read directly from
/// the neighbours' primal vectors. Used by the plaintext engine and by tests.
Eigen::VectorXd foreign_terms(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                              const std::vector<Eigen::VectorXd>& phi, int agent);

}  // namespace gridveil::grid
