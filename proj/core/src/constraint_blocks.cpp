#include "gridveil/constraint_blocks.hpp"

#include <algorithm>

#include "gridveil/errors.hpp"

namespace gridveil::grid {

const char* row_kind_name(RowKind k) {
  switch (k) {
    case RowKind::Reciprocity: return "reciprocity";
    case RowKind::Voltage: return "voltage";
    case RowKind::FlowP: return "flow_p";
    case RowKind::FlowQ: return "flow_q";
  }
  return "?";
}

int ConstraintBlocks::trade_index(int partner) const {
  auto it = std::find(partners.begin(), partners.end(), partner);
  return it == partners.end() ? -1 : kTrade0 + static_cast<int>(it - partners.begin());
}

SingularRange singular_values(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return {};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return {s.maxCoeff(), s.minCoeff()};
}

ConstraintBlocks build_constraint_blocks(const GridCase& gc, int agent) {
  if (agent < 1 || agent > gc.agent_count())
    throw ConfigError("agent " + std::to_string(agent) + " is not in the case");
  ConstraintBlocks cb;
  cb.agent = agent;
  cb.role = gc.role(agent);
  const Bus& bus = gc.buses[agent];
  const ProsumerParams& pp = gc.prosumers[agent];
  if (cb.role != Role::Inactive) cb.partners = gc.partners[agent];
  const int s = static_cast<int>(cb.partners.size());
  cb.dim = kTrade0 + s;
  if (cb.role != Role::Inactive && s == 0)
    cb.warnings.push_back("agent " + std::to_string(agent) + " has nonzero p_desired but no partners");

  cb.A = Eigen::MatrixXd::Zero(s + 3, cb.dim);
  for (int k = 0; k < s; ++k) {
    cb.A(k, kTrade0 + k) = 1.0;
    cb.rows.push_back({RowKind::Reciprocity, cb.partners[k], {cb.partners[k]}});
  }
  const int rv = s;
  cb.A(rv, kV) = -1.0;
  cb.A(rv, kFlowP) = -2.0 * bus.r_pu / gc.base_kva;
  cb.A(rv, kFlowQ) = -2.0 * bus.x_pu / gc.base_kva;
  GlobalRow vrow{RowKind::Voltage, bus.parent, {}};
  if (bus.parent > 0) vrow.neighbours.push_back(bus.parent);
  cb.rows.push_back(vrow);
  cb.A(rv + 1, kP) = -1.0;
  cb.A(rv + 1, kFlowP) = -1.0;
  cb.rows.push_back({RowKind::FlowP, -1, gc.children[agent]});
  cb.A(rv + 2, kQ) = -1.0;
  cb.A(rv + 2, kFlowQ) = -1.0;
  cb.rows.push_back({RowKind::FlowQ, -1, gc.children[agent]});

  std::vector<Eigen::VectorXd> brows;
  std::vector<double> bvals;
  auto add = [&](int col, double coef, double rhs, std::string label) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(cb.dim);
    row(col) = coef;
    brows.push_back(row);
    bvals.push_back(rhs);
    cb.local_labels.push_back(std::move(label));
  };
  add(kP, -1.0, -pp.p_min, "p_min");
  add(kP, 1.0, pp.p_max, "p_max");
  add(kQ, -1.0, -pp.q_min, "q_min");
  add(kQ, 1.0, pp.q_max, "q_max");
  add(kV, -1.0, -bus.v_min, "v_min");
  add(kV, 1.0, bus.v_max, "v_max");
  add(kFlowP, -1.0, -bus.p_flow_min, "P_min");
  add(kFlowP, 1.0, bus.p_flow_max, "P_max");
  add(kFlowQ, -1.0, -bus.q_flow_min, "Q_min");
  add(kFlowQ, 1.0, bus.q_flow_max, "Q_max");
  if (cb.role != Role::Inactive) {
    // Buyers: e <= 0 and p - sum e <= 0. Sellers: e >= 0 and sum e - p <= 0.
    const double sign = cb.role == Role::Buyer ? 1.0 : -1.0;
    for (int k = 0; k < s; ++k) add(kTrade0 + k, sign, 0.0, "sign_e" + std::to_string(cb.partners[k]));
    Eigen::VectorXd bal = Eigen::VectorXd::Zero(cb.dim);
    bal(kP) = sign;
    for (int k = 0; k < s; ++k) bal(kTrade0 + k) = -sign;
    brows.push_back(bal);
    bvals.push_back(0.0);
    cb.local_labels.push_back("balance");
  }
  cb.B.resize(static_cast<Eigen::Index>(brows.size()), cb.dim);
  cb.b.resize(static_cast<Eigen::Index>(bvals.size()));
  for (std::size_t r = 0; r < brows.size(); ++r) {
    cb.B.row(static_cast<Eigen::Index>(r)) = brows[r].transpose();
    cb.b(static_cast<Eigen::Index>(r)) = bvals[r];
  }

  const SingularRange sa = singular_values(cb.A);
  cb.sigma_max_A = sa.max;
  cb.sigma_min_A = sa.min;
  cb.sigma_max_B = singular_values(cb.B).max;
  return cb;
}

std::vector<ConstraintBlocks> build_all_blocks(const GridCase& gc) {
  std::vector<ConstraintBlocks> out(gc.agent_count() + 1);
  for (int i = 1; i <= gc.agent_count(); ++i) out[i] = build_constraint_blocks(gc, i);
  return out;
}

Eigen::VectorXd foreign_terms(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                              const std::vector<Eigen::VectorXd>& phi, int agent) {
  const ConstraintBlocks& cb = blocks[agent];
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cb.rows.size()));
  for (std::size_t r = 0; r < cb.rows.size(); ++r) {
    const GlobalRow& row = cb.rows[r];
    double value = 0.0;
    switch (row.kind) {
      case RowKind::Reciprocity: {
        const int j = row.peer;
        value = phi[j](blocks[j].trade_index(agent));
        break;
      }
      case RowKind::Voltage:
        value = row.peer > 0 ? phi[row.peer](kV) : gc.v_root;
        break;
      case RowKind::FlowP:
        for (int c : row.neighbours) value += phi[c](kFlowP);
        break;
      case RowKind::FlowQ:
        for (int c : row.neighbours) value += phi[c](kFlowQ);
        break;
    }
    f(static_cast<Eigen::Index>(r)) = value;
  }
  return f;
}

}  // namespace gridveil::grid
