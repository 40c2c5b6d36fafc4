#include "gridveil/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gridveil/errors.hpp"

namespace gridveil::adversary {

using grid::GridCase;
using grid::Role;
using nlohmann::json;

PublicSettings settings_from_header(const std::string& header_json) {
  const json h = json::parse(header_json);
  PublicSettings s;
  s.mode = h.at("mode").get<std::string>();
  s.case_path = h.value("case", "");
  const json& st = h.at("steps");
  s.steps.mu = st.at("mu");
  s.steps.xi_a = st.at("xi_a");
  s.steps.xi_b = st.at("xi_b");
  s.steps.eta = st.at("eta");
  if (h.contains("fixed_r") && !h["fixed_r"].is_null()) s.r = h["fixed_r"];
  s.omega_b = h.at("omega_b");
  s.omega_s = h.at("omega_s");
  s.v_root = h.value("v_root", 1.0);
  s.base_kva = h.value("base_kva", 1000.0);
  s.tau = h.value("tau", 4u);
  s.key_bits = h.value("key_bits", 128u);
  s.seed = h.value("seed", std::uint64_t{1});
  return s;
}

PlainObservation observe_plaintext(const protocol::Transcript& t) {
  PlainObservation obs;
  obs.settings = settings_from_header(t.header_json);
  if (obs.settings.mode != "plaintext-p3" && obs.settings.mode != "plaintext-p4")
    throw AnalysisPreconditionError("transcript mode '" + obs.settings.mode + "' carries no plaintext states");
  for (const auto& e : t.envelopes) {
    if (e.round < 0) continue;
    if (e.round >= obs.rounds) {
      obs.rounds = e.round + 1;
      obs.state.resize(obs.rounds);
      obs.trade.resize(obs.rounds);
    }
    auto num = [&](std::size_t i) { return std::strtod(e.payload.at(i).c_str(), nullptr); };
    if (e.tag == "state")
      obs.state[e.round][e.sender] = {num(0), num(1), num(2)};
    else if (e.tag == "e")
      obs.trade[e.round][{e.sender, e.recipient}] = num(0);
  }
  return obs;
}

namespace {

const std::array<double, 3>& seen_state(const PlainObservation& obs, int k, int agent) {
  if (k >= obs.rounds) throw AnalysisPreconditionError("transcript ends before round " + std::to_string(k));
  auto it = obs.state[k].find(agent);
  if (it == obs.state[k].end())
    throw AnalysisPreconditionError("no state of agent " + std::to_string(agent) + " in round " + std::to_string(k));
  return it->second;
}

double seen_trade(const PlainObservation& obs, int k, int i, int j) {
  if (k >= obs.rounds) throw AnalysisPreconditionError("transcript ends before round " + std::to_string(k));
  auto it = obs.trade[k].find({i, j});
  if (it == obs.trade[k].end())
    throw AnalysisPreconditionError("no trade " + std::to_string(i) + "->" + std::to_string(j));
  return it->second;
}

bool incremental(const PublicSettings& s) { return s.mode == "plaintext-p3"; }

// Global-row dual tracked by an observer who can reconstruct the residual of
// every round. `effective` returns lambda + eta * res as used in the primal step.
struct DualTrack {
  double lambda = 0.0;

  // Given the effective multiplier, recover the residual and advance.
  double residual_from_effective(double effective, int t, const PublicSettings& s) {
    const auto& st = s.steps;
    double res;
    if (incremental(s)) {
      res = t == 0 ? effective / st.eta : (effective - lambda) / (st.xi_a + st.eta);
      if (t > 0) lambda += st.xi_a * res;
    } else {
      res = (effective - lambda) / (st.eta * s.r);
      lambda += st.xi_a * s.r * res;
    }
    return res;
  }

  // Given the residual, produce the effective multiplier and advance.
  double effective_from_residual(double res, int t, const PublicSettings& s) {
    const auto& st = s.steps;
    if (incremental(s)) {
      if (t > 0) lambda += st.xi_a * res;
      return lambda + st.eta * res;
    }
    const double eff = lambda + st.eta * s.r * res;
    lambda += st.xi_a * s.r * res;
    return eff;
  }
};

}  // namespace

InjectionEstimate infer_injection_literal(const PlainObservation& obs, const GridCase& pub, int agent, int k) {
  InjectionEstimate est{agent, k, true, 0.0, 0.0};
  const auto& own = seen_state(obs, k, agent);
  double sp = 0.0, sq = 0.0;
  for (int c : pub.children[agent]) {
    sp += seen_state(obs, k, c)[0];
    sq += seen_state(obs, k, c)[1];
  }
  est.p = sp - own[0];
  est.q = sq - own[1];
  return est;
}

InjectionEstimate infer_injections(const PlainObservation& obs, const GridCase& pub, int agent, int k) {
  const PublicSettings& s = obs.settings;
  const auto& bus = pub.buses[agent];
  const double cp = -2.0 * bus.r_pu / s.base_kva;
  const double cq = -2.0 * bus.x_pu / s.base_kva;
  DualTrack dv, dfp, dfq;
  double lp_max = 0, lp_min = 0, lq_max = 0, lq_min = 0;
  InjectionEstimate est{agent, k, false, 0.0, 0.0};
  for (int t = 0; t <= k; ++t) {
    const auto& now = seen_state(obs, t, agent);
    const auto& next = seen_state(obs, t + 1, agent);
    const double v_par = bus.parent > 0 ? seen_state(obs, t, bus.parent)[2] : s.v_root;
    if (t > 0) {
      const double xb = s.steps.xi_b;
      lp_max = std::max(0.0, lp_max + xb * (now[0] - bus.p_flow_max));
      lp_min = std::max(0.0, lp_min + xb * (bus.p_flow_min - now[0]));
      lq_max = std::max(0.0, lq_max + xb * (now[1] - bus.q_flow_max));
      lq_min = std::max(0.0, lq_min + xb * (bus.q_flow_min - now[1]));
    }
    const double res_v = v_par - now[2] + cp * now[0] + cq * now[1];
    const double lv = dv.effective_from_residual(res_v, t, s);
    const double mu = s.steps.mu;
    // dP = -mu (cp lv - Lf + lp_max - lp_min)  =>  Lf = cp lv + lp_max - lp_min + dP / mu
    const double lfp = cp * lv + lp_max - lp_min + (next[0] - now[0]) / mu;
    const double lfq = cq * lv + lq_max - lq_min + (next[1] - now[1]) / mu;
    const double res_p = dfp.residual_from_effective(lfp, t, s);
    const double res_q = dfq.residual_from_effective(lfq, t, s);
    if (t == k) {
      double sp = 0.0, sq = 0.0;
      for (int c : pub.children[agent]) {
        sp += seen_state(obs, t, c)[0];
        sq += seen_state(obs, t, c)[1];
      }
      // Row: sum_c P_c - p - P = res.
      est.p = sp - now[0] - res_p;
      est.q = sq - now[1] - res_q;
      est.determined = true;
    }
  }
  return est;
}

UtilityEstimate infer_utility_params(const PlainObservation& obs, const GridCase& pub, int agent, int partner) {
  const PublicSettings& s = obs.settings;
  UtilityEstimate u{agent, partner, false, 0.0, 0.0};
  const Role role = pub.role(agent);
  if (role == Role::Inactive) return u;
  const double price = role == Role::Buyer ? s.omega_b : s.omega_s;
  const double sign = role == Role::Buyer ? 1.0 : -1.0;
  const double mu = s.steps.mu;
  const double e1 = seen_trade(obs, 1, agent, partner);
  const double e2 = seen_trade(obs, 2, agent, partner);
  u.beta = -e1 / mu - price;
  if (std::abs(e1) < 1e-300) return u;  // no first trade, alpha is not identifiable

  double sum_e1 = 0.0;
  for (const auto& [key, val] : obs.trade[1])
    if (key.first == agent) sum_e1 += val;
  const double p1 = infer_injections(obs, pub, agent, 1).p;
  const double xb = s.steps.xi_b;
  const double l_sign = std::max(0.0, xb * sign * e1);
  const double l_bal = std::max(0.0, xb * sign * (p1 - sum_e1));
  const double res1 = e1 + seen_trade(obs, 1, partner, agent);
  const double l_rec = incremental(s) ? (s.steps.xi_a + s.steps.eta) * res1 : s.steps.eta * s.r * res1;
  // (e1 - e2) / mu = 2 alpha e1 + beta + price + sign l_sign - sign l_bal + l_rec
  u.alpha = ((e1 - e2) / mu - u.beta - price - sign * l_sign + sign * l_bal - l_rec) / (2.0 * e1);
  u.conclusive = true;
  return u;
}

SecureAttackResult attack_secured(const harness::CuriousTrace& tr, const GridCase& gc, const PublicSettings& s) {
  SecureAttackResult out;
  out.agent = tr.agent;
  out.partner = tr.partner;
  const int samples = static_cast<int>(tr.y.size());
  if (samples == 0) throw AnalysisPreconditionError("empty curious trace");

  // Unknowns per round: the partner's term x_j and its coefficient r_j, with
  // y = c_i r_j (x_i + x_j) and c_i the attacker's own coefficient.
  const double r_guess = 0.5 * (std::sqrt(tr.agreed.lo) + std::sqrt(tr.agreed.hi));
  const int K1 = samples;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K1, 2 * K1);
  for (int k = 0; k < K1; ++k) {
    const double c = tr.own_coefficient[k];
    const double sum = tr.own_x[k] + tr.partner_x_truth[k];
    const double r_j = std::abs(sum) > 0 ? tr.y[k] / (c * sum) : r_guess;
    J(k, k) = c * r_j;
    J(k, K1 + k) = c * sum;
  }
  out.rank.equations = K1;
  out.rank.unknowns = 2 * K1;
  out.rank.rank = static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(J).rank());
  out.rank.deficient = out.rank.rank < out.rank.unknowns;

  double worst = 0.0;
  out.recovered_x.resize(samples);
  for (int k = 0; k < samples; ++k) {
    const double scale = tr.own_coefficient[k] * r_guess;
    out.recovered_x[k] = tr.y[k] / scale - tr.own_x[k];
    worst = std::max(worst, std::abs(out.recovered_x[k] - tr.partner_x_truth[k]) /
                                std::max(1.0, std::abs(tr.partner_x_truth[k])));
  }
  out.stream_rel_error = worst;

  const Role prole = gc.role(tr.partner);
  const double price = prole == Role::Buyer ? s.omega_b : s.omega_s;
  if (samples > 1) {
    out.beta_estimate = -out.recovered_x[1] / s.steps.mu - price;
    out.beta_true = gc.prosumers[tr.partner].beta;
    out.beta_rel_error = std::abs(out.beta_estimate - out.beta_true) / std::abs(out.beta_true);
  }
  const int last = samples - 1;
  out.tail_relation_error = std::abs(out.recovered_x[last] + tr.own_x[last]);
  out.tail_truth_gap = std::abs(tr.partner_x_truth[last] + tr.own_x[last]);
  return out;
}

OffsetCheck masked_offset(const harness::MaskedTrace& tr) {
  OffsetCheck c{tr.holder, tr.child, 0.0, 0.0, 0.0};
  if (tr.masked_p.empty()) return c;
  double lo = 1e300, hi = -1e300, sum = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < tr.masked_p.size(); ++k) {
    const double off = tr.masked_p[k] - tr.true_p[k];
    lo = std::min(lo, off);
    hi = std::max(hi, off);
    sum += off;
    worst = std::max(worst, std::abs(off) / std::max(1.0, std::abs(tr.true_p[k])));
  }
  c.offset_mean = sum / static_cast<double>(tr.masked_p.size());
  c.offset_spread = hi - lo;
  c.estimate_rel_error = worst;
  return c;
}

TranscriptAudit audit(const protocol::Transcript& t) {
  TranscriptAudit a;
  for (const auto& e : t.envelopes) {
    ++a.by_kind[protocol::payload_kind_name(e.kind)];
    if (e.kind == protocol::PayloadKind::Plain) a.plain_present = true;
    ++a.envelopes;
  }
  return a;
}

namespace {

double rel(double est, double truth) {
  return std::abs(est - truth) / std::max(std::abs(truth), 1e-300);
}

json plaintext_report(const protocol::Transcript& t, const GridCase& gc) {
  const PlainObservation obs = observe_plaintext(t);
  json inferred = json::array(), truth = json::array(), errors = json::array(), inj = json::array();
  double worst_param = 0.0;
  const int K = std::max(0, obs.rounds - 2);
  for (int i = 1; i <= gc.agent_count(); ++i) {
    if (gc.role(i) != Role::Inactive && !gc.partners[i].empty() && obs.rounds >= 3) {
      const auto u = infer_utility_params(obs, gc, i, gc.partners[i].front());
      if (u.conclusive) {
        const auto& pp = gc.prosumers[i];
        const double ea = rel(u.alpha, pp.alpha), eb = rel(u.beta, pp.beta);
        worst_param = std::max({worst_param, ea, eb});
        inferred.push_back({{"agent", i}, {"alpha", u.alpha}, {"beta", u.beta}});
        truth.push_back({{"agent", i}, {"alpha", pp.alpha}, {"beta", pp.beta}});
        errors.push_back({{"agent", i}, {"alpha", ea}, {"beta", eb}});
      }
    }
    if (K >= 1) {
      const auto est = infer_injections(obs, gc, i, K);
      const auto lit = infer_injection_literal(obs, gc, i, K);
      inj.push_back({{"agent", i}, {"k", K}, {"p", est.p}, {"q", est.q}, {"p_literal", lit.p}, {"q_literal", lit.q}});
    }
  }
  json r;
  r["mode"] = obs.settings.mode;
  r["inferred_params"] = inferred;
  r["true_params"] = truth;
  r["relative_errors"] = errors;
  r["max_relative_error"] = worst_param;
  r["inferred_injections"] = inj;
  r["rank_analysis"] = {{"determined", true}};
  return r;
}

json secure_report(const protocol::Transcript& t, const GridCase& gc, const std::string& case_path) {
  const PublicSettings s = settings_from_header(t.header_json);
  const TranscriptAudit a = audit(t);
  int last_round = -1;
  for (const auto& e : t.envelopes) last_round = std::max(last_round, e.round);

  // The curious agent's own view is not on the channel; replay the run.
  harness::RunConfig cfg;
  cfg.case_path = case_path;
  cfg.mode = harness::Mode::Secure;
  cfg.key_bits = s.key_bits;
  cfg.tau = s.tau;
  cfg.seed = s.seed;
  cfg.steps = s.steps;
  cfg.max_iters = last_round + 1;
  cfg.tol = 1e-300;
  const json h = json::parse(t.header_json);
  if (h.contains("fixed_r") && !h["fixed_r"].is_null()) cfg.fixed_r = h["fixed_r"].get<double>();
  const auto run = harness::run_market(gc, cfg);

  json inferred = json::array(), truth = json::array(), errors = json::array(), ranks = json::array();
  for (const auto& tr : run.curious) {
    const auto res = attack_secured(tr, gc, s);
    inferred.push_back({{"agent", res.partner}, {"beta", res.beta_estimate}});
    truth.push_back({{"agent", res.partner}, {"beta", res.beta_true}});
    errors.push_back({{"agent", res.partner}, {"beta", res.beta_rel_error}, {"stream", res.stream_rel_error}});
    ranks.push_back({{"attacker", res.agent},
                     {"partner", res.partner},
                     {"equations", res.rank.equations},
                     {"unknowns", res.rank.unknowns},
                     {"rank", res.rank.rank},
                     {"deficient", res.rank.deficient},
                     {"tail_relation_error", res.tail_relation_error}});
  }
  json masked = json::array();
  for (const auto& m : run.masked) {
    const auto c = masked_offset(m);
    masked.push_back({{"holder", c.holder},
                      {"child", c.child},
                      {"offset_mean", c.offset_mean},
                      {"offset_spread", c.offset_spread},
                      {"estimate_relative_error", c.estimate_rel_error}});
  }
  json r;
  r["mode"] = s.mode;
  r["inferred_params"] = inferred;
  r["true_params"] = truth;
  r["relative_errors"] = errors;
  r["rank_analysis"] = ranks;
  r["masked_streams"] = masked;
  r["audit"] = {{"envelopes", a.envelopes}, {"by_kind", a.by_kind}, {"plain_present", a.plain_present}};
  return r;
}

}  // namespace

std::string attack_report(const std::string& transcript_path, const std::string& case_override) {
  const protocol::Transcript t = protocol::read_transcript(transcript_path);
  const PublicSettings s = settings_from_header(t.header_json);
  const std::string case_path = case_override.empty() ? s.case_path : case_override;
  if (case_path.empty()) throw ConfigError("transcript header names no case; pass --case");
  const GridCase gc = grid::load_case(case_path);
  if (s.mode == "secure") return secure_report(t, gc, case_path).dump(2);
  return plaintext_report(t, gc).dump(2);
}

}  // namespace gridveil::adversary
