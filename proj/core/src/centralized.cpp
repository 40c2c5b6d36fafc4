#include "gridveil/centralized.hpp"

#include <algorithm>
#include <cmath>

#include "gridveil/errors.hpp"

namespace gridveil::pdhg {

using grid::ConstraintBlocks;
using grid::GridCase;
using grid::Role;

namespace {

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, double tol, int max_iters) {
  const Eigen::Index n = qp.H.rows();
  const Eigen::Index me = qp.A.rows();
  const Eigen::Index mi = qp.G.rows();
  QpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  sol.y = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd s = (qp.h - qp.G * sol.x).cwiseMax(1.0);
  sol.z = Eigen::VectorXd::Ones(mi);

  const double scale = 1.0 + std::max({qp.c.lpNorm<Eigen::Infinity>(), qp.b.size() ? qp.b.lpNorm<Eigen::Infinity>() : 0.0,
                                       qp.h.size() ? qp.h.lpNorm<Eigen::Infinity>() : 0.0});
  Eigen::MatrixXd kkt(n + me, n + me);
  for (int it = 0; it < max_iters; ++it) {
    sol.iterations = it;
    const Eigen::VectorXd rd = qp.H * sol.x + qp.c + qp.A.transpose() * sol.y + qp.G.transpose() * sol.z;
    const Eigen::VectorXd rp = qp.A * sol.x - qp.b;
    const Eigen::VectorXd ri = qp.G * sol.x + s - qp.h;
    const double mu = mi > 0 ? s.dot(sol.z) / static_cast<double>(mi) : 0.0;
    const double res = std::max({rd.lpNorm<Eigen::Infinity>(), rp.size() ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                                 ri.size() ? ri.lpNorm<Eigen::Infinity>() : 0.0});
    if (res < tol * scale && mu < tol * 1e-2) {
      sol.converged = true;
      return sol;
    }

    const Eigen::VectorXd w = sol.z.cwiseQuotient(s);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = qp.H + qp.G.transpose() * w.asDiagonal() * qp.G;
    kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
    kkt.topRightCorner(n, me) = qp.A.transpose();
    kkt.bottomLeftCorner(me, n) = qp.A;
    kkt.bottomRightCorner(me, me).diagonal().array() = -1e-12;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);

    auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                         Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      // Z ds + S dz = rc with ds = -ri - G dx.
      const Eigen::VectorXd t = (rc + sol.z.cwiseProduct(ri)).cwiseQuotient(s);
      Eigen::VectorXd rhs(n + me);
      rhs.head(n) = -rd - qp.G.transpose() * t;
      rhs.tail(me) = -rp;
      const Eigen::VectorXd d = lu.solve(rhs);
      dx = d.head(n);
      dy = d.tail(me);
      ds = -ri - qp.G * dx;
      dz = (rc - sol.z.cwiseProduct(ds)).cwiseQuotient(s);
    };

    Eigen::VectorXd dx, dy, ds, dz;
    direction(-s.cwiseProduct(sol.z), dx, dy, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(sol.z, dz));
    const double mu_aff =
        mi > 0 ? (s + a_aff * ds).dot(sol.z + a_aff * dz) / static_cast<double>(mi) : 0.0;
    const double sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : 0.0;
    const Eigen::VectorXd rc =
        -s.cwiseProduct(sol.z) - ds.cwiseProduct(dz) + Eigen::VectorXd::Constant(mi, sigma * mu);
    direction(rc, dx, dy, ds, dz);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(sol.z, dz)));
    sol.x += alpha * dx;
    sol.y += alpha * dy;
    s += alpha * ds;
    sol.z += alpha * dz;
  }
  return sol;
}

QuadraticProgram build_centralized_qp(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                                      std::vector<int>* offsets_out) {
  const int n_agents = gc.agent_count();
  std::vector<int> off(n_agents + 2, 0);
  for (int i = 1; i <= n_agents; ++i) off[i + 1] = off[i] + blocks[i].dim;
  const int n = off[n_agents + 1];
  if (offsets_out) *offsets_out = off;

  QuadraticProgram qp;
  qp.H = Eigen::MatrixXd::Zero(n, n);
  qp.c = Eigen::VectorXd::Zero(n);
  for (int i = 1; i <= n_agents; ++i) {
    const ConstraintBlocks& cb = blocks[i];
    if (cb.role == Role::Inactive) continue;
    const auto& pp = gc.prosumers[i];
    const double price = cb.role == Role::Buyer ? gc.omega_b : gc.omega_s;
    qp.H(off[i] + grid::kP, off[i] + grid::kP) = 2.0 * pp.epsilon;
    qp.c(off[i] + grid::kP) = -2.0 * pp.epsilon * pp.p_desired - price;
    for (int k = grid::kTrade0; k < cb.dim; ++k) {
      qp.H(off[i] + k, off[i] + k) = 2.0 * pp.alpha;
      qp.c(off[i] + k) = pp.beta + price;
    }
  }

  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  for (int i = 1; i <= n_agents; ++i) {
    const ConstraintBlocks& cb = blocks[i];
    for (std::size_t r = 0; r < cb.rows.size(); ++r) {
      const grid::GlobalRow& row = cb.rows[r];
      Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
      a.segment(off[i], cb.dim) = cb.A.row(static_cast<Eigen::Index>(r)).transpose();
      double rhs = 0.0;
      switch (row.kind) {
        case grid::RowKind::Reciprocity:
          if (row.peer < i) continue;  // one row per pair
          a(off[row.peer] + blocks[row.peer].trade_index(i)) += 1.0;
          break;
        case grid::RowKind::Voltage:
          if (row.peer > 0)
            a(off[row.peer] + grid::kV) += 1.0;
          else
            rhs = -gc.v_root;
          break;
        case grid::RowKind::FlowP:
          for (int c : row.neighbours) a(off[c] + grid::kFlowP) += 1.0;
          break;
        case grid::RowKind::FlowQ:
          for (int c : row.neighbours) a(off[c] + grid::kFlowQ) += 1.0;
          break;
      }
      eq_rows.push_back(a);
      eq_rhs.push_back(rhs);
    }
  }
  qp.A.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
  qp.b.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t r = 0; r < eq_rows.size(); ++r) {
    qp.A.row(static_cast<Eigen::Index>(r)) = eq_rows[r].transpose();
    qp.b(static_cast<Eigen::Index>(r)) = eq_rhs[r];
  }

  Eigen::Index mi = 0;
  for (int i = 1; i <= n_agents; ++i) mi += blocks[i].B.rows();
  qp.G = Eigen::MatrixXd::Zero(mi, n);
  qp.h.resize(mi);
  Eigen::Index r0 = 0;
  for (int i = 1; i <= n_agents; ++i) {
    const ConstraintBlocks& cb = blocks[i];
    qp.G.block(r0, off[i], cb.B.rows(), cb.dim) = cb.B;
    qp.h.segment(r0, cb.B.rows()) = cb.b;
    r0 += cb.B.rows();
  }
  return qp;
}

double traded_energy(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                     const std::vector<Eigen::VectorXd>& phi) {
  double total = 0.0;
  for (int i = 1; i <= gc.agent_count(); ++i)
    if (blocks[i].role == Role::Seller)
      total += phi[i].segment(grid::kTrade0, blocks[i].dim - grid::kTrade0).sum();
  return total;
}

double total_cost(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                  const std::vector<Eigen::VectorXd>& phi) {
  double total = 0.0;
  for (int i = 1; i <= gc.agent_count(); ++i) total += cost(gc, blocks[i], phi[i]);
  return total;
}

CentralizedResult solve_centralized(const GridCase& gc) {
  const auto blocks = grid::build_all_blocks(gc);
  std::vector<int> off;
  const QuadraticProgram qp = build_centralized_qp(gc, blocks, &off);
  const QpSolution sol = solve_qp(qp);
  CentralizedResult out;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.phi.assign(gc.agent_count() + 1, Eigen::VectorXd());
  for (int i = 1; i <= gc.agent_count(); ++i) out.phi[i] = sol.x.segment(off[i], blocks[i].dim);
  out.objective = total_cost(gc, blocks, out.phi);
  out.traded_energy = traded_energy(gc, blocks, out.phi);

  const Eigen::VectorXd slack = qp.G * sol.x - qp.h;
  out.kkt.stationarity =
      (qp.H * sol.x + qp.c + qp.A.transpose() * sol.y + qp.G.transpose() * sol.z).norm();
  out.kkt.primal_equality = (qp.A * sol.x - qp.b).norm();
  out.kkt.primal_inequality = slack.cwiseMax(0.0).norm();
  out.kkt.dual_feasibility = sol.z.cwiseMin(0.0).norm();
  out.kkt.complementary_slackness = sol.z.cwiseProduct(slack).norm();
  return out;
}

}  // namespace gridveil::pdhg
