#include "gridveil/market_engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gridveil/centralized.hpp"
#include "gridveil/errors.hpp"
#include "gridveil/fixed_point.hpp"
#include "gridveil/messages.hpp"
#include "gridveil/paillier.hpp"
#include "gridveil/secret_sharing.hpp"

namespace gridveil::harness {

using crypto::Ciphertext;
using Eigen::VectorXd;
using grid::ConstraintBlocks;
using grid::GridCase;
using grid::RowKind;
using protocol::Envelope;
using protocol::MessageBus;
using protocol::PayloadKind;
using protocol::SubRange;

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Centralized: return "centralized";
    case Mode::PlaintextP3: return "plaintext-p3";
    case Mode::PlaintextP4: return "plaintext-p4";
    case Mode::Secure: return "secure";
  }
  return "?";
}

Mode mode_from_name(const std::string& name) {
  for (Mode m : {Mode::Centralized, Mode::PlaintextP3, Mode::PlaintextP4, Mode::Secure})
    if (name == mode_name(m)) return m;
  throw ConfigError("unknown mode '" + name + "'");
}

void CryptoCost::add(const CryptoCost& o) {
  encryptions += o.encryptions;
  decryptions += o.decryptions;
  hom_ops += o.hom_ops;
  modexps += o.modexps;
  encrypt_us += o.encrypt_us;
  decrypt_us += o.decrypt_us;
  hom_us += o.hom_us;
}

std::vector<VectorXd> all_residuals(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                                    const std::vector<VectorXd>& phi) {
  std::vector<VectorXd> out(blocks.size());
  for (int i = 1; i <= gc.agent_count(); ++i)
    out[i] = pdhg::coupling_residual(blocks[i], phi[i], grid::foreign_terms(gc, blocks, phi, i));
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double us_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

// Bulk-synchronous fan-out over agents 1..n; the first exception wins.
template <class F>
void for_agents(int n, int threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 1; i <= n; ++i) f(i);
    return;
  }
  std::atomic<int> next{1};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, n); ++t)
    pool.emplace_back([&] {
      for (int i = next++; i <= n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double stacked_norm(const std::vector<VectorXd>& v) {
  double s = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) s += v[i].squaredNorm();
  return std::sqrt(s);
}

std::vector<VectorXd> phis(const std::vector<pdhg::AgentState>& st) {
  std::vector<VectorXd> out(st.size());
  for (std::size_t i = 1; i < st.size(); ++i) out[i] = st[i].phi;
  return out;
}

double parse_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

int parent_of(const GridCase& gc, int i) { return gc.buses[i].parent; }

// ---------------------------------------------------------------- plaintext

// Every agent sends (P, Q, v) to its parent (the utility included) and its
// children, and e_ij to each partner; foreign terms are read back from the
// delivered messages only.
std::vector<VectorXd> plaintext_exchange(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                                         const std::vector<pdhg::AgentState>& st, MessageBus& bus, int k,
                                         int threads) {
  const int n = gc.agent_count();
  for_agents(n, threads, [&](int i) {
    const VectorXd& phi = st[i].phi;
    std::vector<std::string> state{shortest_decimal(phi(grid::kFlowP)), shortest_decimal(phi(grid::kFlowQ)),
                                   shortest_decimal(phi(grid::kV))};
    std::vector<int> to{parent_of(gc, i)};
    to.insert(to.end(), gc.children[i].begin(), gc.children[i].end());
    for (int t : to) bus.post({k, 0, i, t, PayloadKind::Plain, "state", state, 0});
    for (int j : blocks[i].partners)
      bus.post({k, 0, i, j, PayloadKind::Plain, "e", {shortest_decimal(phi(blocks[i].trade_index(j)))}, 0});
  });
  bus.close_phase(k, 0);

  std::vector<VectorXd> foreign(n + 1);
  for_agents(n, threads, [&](int i) {
    const ConstraintBlocks& cb = blocks[i];
    std::map<int, std::array<double, 3>> states;
    std::map<int, double> trades;
    for (const Envelope& e : bus.inbox(i)) {
      if (e.tag == "state")
        states[e.sender] = {parse_double(e.payload[0]), parse_double(e.payload[1]), parse_double(e.payload[2])};
      else if (e.tag == "e")
        trades[e.sender] = parse_double(e.payload[0]);
    }
    VectorXd f = VectorXd::Zero(static_cast<Eigen::Index>(cb.rows.size()));
    for (std::size_t r = 0; r < cb.rows.size(); ++r) {
      const auto& row = cb.rows[r];
      double v = 0.0;
      auto need = [&](const auto& m, int who) -> const auto& {
        auto it = m.find(who);
        if (it == m.end())
          throw ProtocolIncompleteError("agent " + std::to_string(i) + " missing data from " + std::to_string(who));
        return it->second;
      };
      switch (row.kind) {
        case RowKind::Reciprocity: v = need(trades, row.peer); break;
        case RowKind::Voltage: v = row.peer > 0 ? need(states, row.peer)[2] : gc.v_root; break;
        case RowKind::FlowP:
          for (int c : row.neighbours) v += need(states, c)[0];
          break;
        case RowKind::FlowQ:
          for (int c : row.neighbours) v += need(states, c)[1];
          break;
      }
      f(static_cast<Eigen::Index>(r)) = v;
    }
    foreign[i] = f;
  });
  return foreign;
}

// ------------------------------------------------------------------- secure

struct SecureContext {
  unsigned tau = 4;
  std::vector<crypto::KeyMaterial> keys;
  std::vector<std::optional<crypto::SignedFixedCodec>> codecs;
  std::vector<std::map<int, crypto::PublicKey>> peer_keys;  // peer_keys[t][i]: i's key as received by t
  std::vector<SubRange> own_range;
  std::vector<std::map<int, SubRange>> peer_range;  // peer_range[t][i]: i's sub-range as received by t
  std::vector<std::map<int, mpz_class>> rec_coef;   // drawn this round, per partner
  std::vector<int> holder_of;                       // multi-party holder of a child, else -1
  std::map<int, protocol::MultiPartyGroup> groups;
  std::map<int, protocol::OfflineResult> offline_p, offline_q;
  std::vector<CryptoCost> cost;
};

SubRange quantize_inward(SubRange s, unsigned tau) {
  const double q = std::pow(10.0, static_cast<double>(tau));
  SubRange out{std::ceil(s.lo * q - 1e-9) / q, std::floor(s.hi * q + 1e-9) / q};
  if (!(out.hi > out.lo)) throw ConfigError("sub-range collapses at the fixed-point resolution");
  return out;
}

SubRange intersect(const SubRange& a, const SubRange& b) {
  SubRange s{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (!(s.hi > s.lo)) throw ConfigError("partner sub-ranges do not overlap");
  return s;
}

// Each side of a reciprocity pair multiplies the product it decrypts by its own
// coefficient, so the two coefficients come from the square roots of the
// agreed range and their product stays inside it.
SubRange sqrt_range(const SubRange& s) { return {std::sqrt(s.lo), std::sqrt(s.hi)}; }

crypto::PublicKey pk_from_modulus(const std::string& n_dec, unsigned bits) {
  crypto::PublicKey pk;
  pk.n = mpz_class(n_dec);
  pk.g = pk.n + 1;
  pk.n_squared = pk.n * pk.n;
  pk.key_bits = bits;
  return pk;
}

Ciphertext timed_encrypt(CryptoCost& c, const crypto::PublicKey& pk, const crypto::SignedFixedCodec& codec,
                         const mpz_class& scaled, Rng& rng) {
  const auto t0 = Clock::now();
  Ciphertext out = crypto::encrypt_scaled(pk, codec, scaled, rng);
  c.encrypt_us += us_since(t0);
  ++c.encryptions;
  ++c.modexps;
  return out;
}

mpz_class timed_decrypt(CryptoCost& c, const crypto::KeyMaterial& sk, const Ciphertext& e,
                        const crypto::SignedFixedCodec& codec) {
  const auto t0 = Clock::now();
  mpz_class out = crypto::decrypt_crt_scaled(sk, e, codec);
  c.decrypt_us += us_since(t0);
  ++c.decryptions;
  c.modexps += 2;
  return out;
}

Ciphertext ciphertext_from_payload(const Envelope& e, int scale_exp) {
  if (e.kind != PayloadKind::Ciphertext || e.payload.size() != 1)
    throw ProtocolError("expected one ciphertext in " + e.tag);
  return {mpz_class(e.payload[0]), scale_exp};
}

}  // namespace

namespace {

struct SecureSetupTiming {
  double keygen_ms = 0.0;
  double offline_ms = 0.0;
  CryptoCost offline;
};

// Session partners of agent i as requester: parent (voltage), single child
// (flow rows) and trading partners.
std::vector<int> session_peers(const GridCase& gc, const ConstraintBlocks& cb) {
  std::vector<int> out(cb.partners);
  const int t = gc.buses[cb.agent].parent;
  if (t > 0) out.push_back(t);
  if (gc.children[cb.agent].size() == 1) out.push_back(gc.children[cb.agent][0]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SecureContext secure_setup(const GridCase& gc, const std::vector<ConstraintBlocks>& blocks,
                           const RunConfig& cfg, const std::vector<pdhg::FeasibleRange>& ranges,
                           std::vector<Rng>& rngs, MessageBus& bus, SecureSetupTiming& timing) {
  const int n = gc.agent_count();
  SecureContext ctx;
  ctx.tau = cfg.tau;
  ctx.keys.resize(n + 1);
  ctx.codecs.resize(n + 1);
  ctx.peer_keys.resize(n + 1);
  ctx.own_range.resize(n + 1);
  ctx.peer_range.resize(n + 1);
  ctx.rec_coef.resize(n + 1);
  ctx.holder_of.assign(n + 1, -1);
  ctx.cost.resize(n + 1);

  auto t0 = Clock::now();
  for_agents(n, cfg.threads, [&](int i) {
    ctx.keys[i] = crypto::keygen(cfg.key_bits, rngs[i]);
    ctx.codecs[i] = crypto::SignedFixedCodec::for_key(ctx.keys[i].public_key(), cfg.tau);
  });
  timing.keygen_ms = us_since(t0) / 1000.0;

  // Round -1, phase 0: public keys to every session peer and to the parent.
  const int setup = -1;
  for (int i = 1; i <= n; ++i) {
    std::vector<int> to = session_peers(gc, blocks[i]);
    for (int c : gc.children[i]) to.push_back(c);
    to.push_back(gc.buses[i].parent);
    std::sort(to.begin(), to.end());
    to.erase(std::unique(to.begin(), to.end()), to.end());
    for (int t : to)
      bus.post({setup, 0, i, t, PayloadKind::PublicKey, "pk", {ctx.keys[i].n.get_str()}, 0});
  }
  bus.close_phase(setup, 0);
  for (int t = 1; t <= n; ++t)
    for (const Envelope& e : bus.inbox(t))
      ctx.peer_keys[t][e.sender] = pk_from_modulus(e.payload.at(0), cfg.key_bits);

  // Phase 1: each requester sends its sub-range, encrypted under the peer's key.
  for (int i = 1; i <= n; ++i) {
    SubRange s = cfg.random_subrange ? protocol::negotiate_subrange(ranges[i], rngs[i])
                                     : protocol::clip_subrange(ranges[i], {cfg.subrange_lo, cfg.subrange_hi});
    ctx.own_range[i] = quantize_inward(s, cfg.tau);
  }
  for (int i = 1; i <= n; ++i) {
    for (int t : session_peers(gc, blocks[i])) {
      const crypto::PublicKey& pk = ctx.peer_keys[i].at(t);
      const auto codec = crypto::SignedFixedCodec::for_key(pk, cfg.tau);
      const Ciphertext lo = timed_encrypt(timing.offline, pk, codec, codec.scale(ctx.own_range[i].lo), rngs[i]);
      const Ciphertext hi = timed_encrypt(timing.offline, pk, codec, codec.scale(ctx.own_range[i].hi), rngs[i]);
      bus.post({setup, 1, i, t, PayloadKind::Ciphertext, "subrange", {lo.value.get_str(), hi.value.get_str()}, 0});
    }
  }
  bus.close_phase(setup, 1);
  for (int t = 1; t <= n; ++t)
    for (const Envelope& e : bus.inbox(t)) {
      const auto& codec = *ctx.codecs[t];
      const double lo = codec.unscale(timed_decrypt(timing.offline, ctx.keys[t], {mpz_class(e.payload.at(0)), 1}, codec), 1);
      const double hi = codec.unscale(timed_decrypt(timing.offline, ctx.keys[t], {mpz_class(e.payload.at(1)), 1}, codec), 1);
      ctx.peer_range[t][e.sender] = {lo, hi};
    }

  // Phase 2: offline share distribution for every flow row with two or more children.
  t0 = Clock::now();
  std::map<int, const crypto::KeyMaterial*> keyptr;
  std::map<int, Rng*> rngptr;
  for (int i = 1; i <= n; ++i) {
    keyptr[i] = &ctx.keys[i];
    rngptr[i] = &rngs[i];
  }
  const mpz_class bound = mpz_class(1000000) * pow10(cfg.tau);
  for (int h = 1; h <= n; ++h) {
    if (gc.children[h].size() < 2) continue;
    auto group = protocol::make_group(h, gc.children[h]);
    for (int c : gc.children[h]) ctx.holder_of[c] = h;
    for (const char* comp : {"p", "q"}) {
      auto observer = [&, comp](int from, int to, const std::string& what, const Ciphertext& c) {
        bus.post({setup, 2, from, to, PayloadKind::Ciphertext, what + "_" + comp, {c.value.get_str()}, 0});
      };
      auto res = protocol::multiparty_offline(group, keyptr, cfg.tau, bound, rngptr, observer);
      timing.offline.encryptions += res.stats.encryptions;
      timing.offline.decryptions += res.stats.decryptions;
      (std::string(comp) == "p" ? ctx.offline_p : ctx.offline_q)[h] = std::move(res);
    }
    ctx.groups[h] = group;
  }
  bus.close_phase(setup, 2);
  timing.offline_ms = us_since(t0) / 1000.0;
  return ctx;
}

double responder_term(const ConstraintBlocks& cb, const VectorXd& phi, const std::string& tag, int requester) {
  if (tag == "rec") {
    const int idx = cb.trade_index(requester);
    if (idx < 0) throw ProtocolError("reciprocity request from non-partner " + std::to_string(requester));
    return phi(idx);
  }
  if (tag == "volt") return phi(grid::kV);
  if (tag == "flow_p") return phi(grid::kFlowP);
  if (tag == "flow_q") return phi(grid::kFlowQ);
  throw ProtocolError("unknown request tag " + tag);
}

int row_for_tag(const ConstraintBlocks& cb, const std::string& tag, int sender) {
  if (tag == "rec:s3") return cb.trade_index(sender) - grid::kTrade0;
  if (tag == "volt:s3") return cb.voltage_row();
  if (tag == "flow_p:s3") return cb.flow_p_row();
  if (tag == "flow_q:s3") return cb.flow_q_row();
  throw ProtocolError("unexpected reply tag " + tag);
}

}  // namespace

RunResult run_market(const GridCase& gc, const RunConfig& cfg, const Observer& observer) {
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  const auto wall0 = Clock::now();
  const int n = gc.agent_count();
  const auto blocks = grid::build_all_blocks(gc);
  const auto& st = cfg.steps;

  RunResult out;
  out.mode = cfg.mode;
  out.case_name = gc.name;
  out.crypto.resize(n + 1);

  if (cfg.mode == Mode::Centralized) {
    const auto c = pdhg::solve_centralized(gc);
    out.converged = c.converged;
    out.iterations = c.iterations;
    out.traded_energy = c.traded_energy;
    out.objective = c.objective;
    out.kkt = c.kkt;
    out.states.resize(n + 1);
    for (int i = 1; i <= n; ++i) {
      out.states[i] = pdhg::AgentState::zeros(blocks[i]);
      out.states[i].phi = c.phi[i];
    }
    out.wall_ms = us_since(wall0) / 1000.0;
    if (!c.converged) out.diagnostic = "interior point did not converge";
    return out;
  }

  Rng master(cfg.seed);
  std::vector<Rng> rngs;
  rngs.reserve(n + 1);
  for (int i = 0; i <= n; ++i) rngs.push_back(master.split(static_cast<std::uint64_t>(i)));

  std::unique_ptr<protocol::TranscriptWriter> writer;
  if (!cfg.transcript_path.empty()) {
    writer = std::make_unique<protocol::TranscriptWriter>(cfg.transcript_path);
    nlohmann::json h;
    h["record"] = "header";
    h["mode"] = mode_name(cfg.mode);
    h["case"] = cfg.case_path;
    h["case_name"] = gc.name;
    h["tau"] = cfg.tau;
    h["key_bits"] = cfg.key_bits;
    h["seed"] = cfg.seed;
    h["steps"] = {{"mu", st.mu}, {"xi_a", st.xi_a}, {"xi_b", st.xi_b}, {"eta", st.eta}};
    h["fixed_r"] = cfg.fixed_r ? nlohmann::json(*cfg.fixed_r) : nlohmann::json(nullptr);
    h["omega_b"] = gc.omega_b;
    h["omega_s"] = gc.omega_s;
    h["v_root"] = gc.v_root;
    h["base_kva"] = gc.base_kva;
    writer->header(h.dump());
  }
  MessageBus bus(n);
  bus.set_transcript(writer.get());

  std::vector<pdhg::AgentState> state(n + 1);
  for (int i = 1; i <= n; ++i) state[i] = pdhg::AgentState::zeros(blocks[i]);

  SecureContext ctx;
  const bool secure = cfg.mode == Mode::Secure;
  if (secure) {
    out.ranges.resize(n + 1);
    for (int i = 1; i <= n; ++i) {
      out.ranges[i] = pdhg::feasible_range(pdhg::theorem_inputs(gc, blocks[i], st));
      if (out.ranges[i].empty)
        throw ConfigError("empty feasible range for agent " + std::to_string(i) + "; secure mode unavailable");
    }
    SecureSetupTiming timing;
    ctx = secure_setup(gc, blocks, cfg, out.ranges, rngs, bus, timing);
    out.keygen_ms = timing.keygen_ms;
    out.offline_ms = timing.offline_ms;
    out.offline_crypto = timing.offline;
  }

  int curious = cfg.curious_agent;
  if (curious == 0)
    for (int i = 1; i <= n; ++i)
      if (gc.role(i) == grid::Role::Buyer) {
        curious = i;
        break;
      }
  std::map<int, std::size_t> curious_slot;
  if (secure && curious > 0 && curious <= n) {
    for (int j : blocks[curious].partners) {
      CuriousTrace ct;
      ct.agent = curious;
      ct.partner = j;
      ct.full_range = out.ranges[curious];
      ct.agreed = intersect(ctx.own_range[curious], ctx.peer_range[curious].at(j));
      curious_slot[j] = out.curious.size();
      out.curious.push_back(std::move(ct));
    }
  }
  int masked_holder = -1, masked_child = -1;
  if (secure && !ctx.groups.empty()) {
    masked_holder = ctx.groups.begin()->first;
    masked_child = ctx.groups.begin()->second.members.at(1);
    out.masked.push_back({masked_holder, masked_child, {}, {}});
  }

  const double r_plain = cfg.fixed_r.value_or(1.0);
  std::vector<double> gamma_hist;
  if (cfg.record_history) out.history.push_back(phis(state));

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    const auto t_round = Clock::now();
    const std::vector<VectorXd> phi_k = phis(state);
    // Simulator-side residual, used only for the stopping test and the trace.
    const double gamma_p = stacked_norm(all_residuals(gc, blocks, phi_k));

    std::vector<VectorXd> y(n + 1);  // value multiplying eta and xi_a this round
    if (!secure) {
      const auto foreign = plaintext_exchange(gc, blocks, state, bus, k, cfg.threads);
      for_agents(n, cfg.threads, [&](int i) {
        const VectorXd res = pdhg::coupling_residual(blocks[i], state[i].phi, foreign[i]);
        if (cfg.mode == Mode::PlaintextP3) {
          if (k >= 1) state[i].lambda_a = pdhg::dual_update_global_incremental(state[i].lambda_a, res, st.xi_a);
          y[i] = res;
        } else {
          y[i] = r_plain * res;
        }
      });
    } else {
      const unsigned tau = ctx.tau;
      // Phase A: requests, masked flows.
      for_agents(n, cfg.threads, [&](int i) {
        const ConstraintBlocks& cb = blocks[i];
        const VectorXd& phi = state[i].phi;
        const auto pk = ctx.keys[i].public_key();
        const auto& codec = *ctx.codecs[i];
        auto request = [&](int to, const std::string& tag, double x) {
          const Ciphertext c = timed_encrypt(ctx.cost[i], pk, codec, codec.scale(x), rngs[i]);
          bus.post({k, 0, i, to, PayloadKind::Ciphertext, tag, {c.value.get_str()}, 0});
        };
        for (std::size_t r = 0; r < cb.rows.size(); ++r) {
          const auto& row = cb.rows[r];
          const double x = cb.A.row(static_cast<Eigen::Index>(r)).dot(phi);
          switch (row.kind) {
            case RowKind::Reciprocity: request(row.peer, "rec", x); break;
            case RowKind::Voltage:
              if (row.peer > 0) request(row.peer, "volt", x);
              break;
            case RowKind::FlowP:
              if (row.neighbours.size() == 1) request(row.neighbours[0], "flow_p", x);
              break;
            case RowKind::FlowQ:
              if (row.neighbours.size() == 1) request(row.neighbours[0], "flow_q", x);
              break;
          }
        }
        if (const int h = ctx.holder_of[i]; h > 0) {
          const auto mp = sharing::mask(i, codec.scale(phi(grid::kFlowP)), ctx.offline_p.at(h).bundles.at(i).secret);
          const auto mq = sharing::mask(i, codec.scale(phi(grid::kFlowQ)), ctx.offline_q.at(h).bundles.at(i).secret);
          bus.post({k, 0, i, h, PayloadKind::Masked, "mask",
                    {to_decimal_string(mp.payload, tau), to_decimal_string(mq.payload, tau)}, 0});
        }
      });
      bus.close_phase(k, 0);
      std::vector<std::vector<Envelope>> phase_a(n + 1);
      for (int i = 1; i <= n; ++i) phase_a[i] = bus.inbox(i);

      // Phase B: responders add their term and blind with a fresh coefficient.
      for_agents(n, cfg.threads, [&](int t) {
        ctx.rec_coef[t].clear();
        for (const Envelope& e : phase_a[t]) {
          if (e.kind != PayloadKind::Ciphertext) continue;
          const int i = e.sender;
          const crypto::PublicKey& pk = ctx.peer_keys[t].at(i);
          const auto codec = crypto::SignedFixedCodec::for_key(pk, tau);
          const double x_t = responder_term(blocks[t], state[t].phi, e.tag, i);
          mpz_class coef;
          if (e.tag == "rec") {
            const SubRange agreed = intersect(ctx.own_range[t], ctx.peer_range[t].at(i));
            coef = cfg.fixed_r ? scale_decimal(std::sqrt(*cfg.fixed_r), tau)
                               : protocol::draw_coefficient(sqrt_range(agreed), tau, rngs[t]);
            ctx.rec_coef[t][i] = coef;
          } else {
            coef = cfg.fixed_r ? scale_decimal(*cfg.fixed_r, tau)
                               : protocol::draw_coefficient(ctx.peer_range[t].at(i), tau, rngs[t]);
          }
          CryptoCost& cost = ctx.cost[t];
          const Ciphertext s2 = timed_encrypt(cost, pk, codec, codec.scale(x_t), rngs[t]);
          const auto t0 = Clock::now();
          const Ciphertext s3 =
              crypto::hom_scalar_mul_scaled(crypto::hom_add(ciphertext_from_payload(e, 1), s2, pk), coef, pk);
          cost.hom_us += us_since(t0);
          cost.hom_ops += 2;
          ++cost.modexps;
          bus.post({k, 1, t, i, PayloadKind::Ciphertext, e.tag + ":s3", {s3.value.get_str()}, 0});
        }
      });
      bus.close_phase(k, 1);

      // Phase C: decrypt, unmask, fill local rows.
      for_agents(n, cfg.threads, [&](int i) {
        const ConstraintBlocks& cb = blocks[i];
        const VectorXd& phi = state[i].phi;
        const auto& codec = *ctx.codecs[i];
        VectorXd yi = VectorXd::Zero(cb.A.rows());
        std::vector<char> have(cb.rows.size(), 0);
        for (const Envelope& e : bus.inbox(i)) {
          const int r = row_for_tag(cb, e.tag, e.sender);
          const mpz_class d = timed_decrypt(ctx.cost[i], ctx.keys[i], ciphertext_from_payload(e, 2), codec);
          if (e.tag == "rec:s3") {
            const mpz_class prod = d * ctx.rec_coef[i].at(e.sender);
            yi(r) = unscale(prod, 3 * tau);
          } else {
            yi(r) = codec.unscale(d, 2);
          }
          have[r] = 1;
        }
        std::vector<sharing::MaskedValue> mp, mq;
        for (const Envelope& e : phase_a[i])
          if (e.kind == PayloadKind::Masked) {
            mp.push_back({e.sender, scale_decimal(std::string_view(e.payload.at(0)), tau)});
            mq.push_back({e.sender, scale_decimal(std::string_view(e.payload.at(1)), tau)});
          }
        for (std::size_t r = 0; r < cb.rows.size(); ++r) {
          if (have[r]) continue;
          const auto& row = cb.rows[r];
          const double own = cb.A.row(static_cast<Eigen::Index>(r)).dot(phi);
          if (row.kind == RowKind::Voltage && row.peer == 0) {
            yi(r) = own + gc.v_root;
          } else if ((row.kind == RowKind::FlowP || row.kind == RowKind::FlowQ) && row.neighbours.empty()) {
            yi(r) = own;
          } else if ((row.kind == RowKind::FlowP || row.kind == RowKind::FlowQ) && row.neighbours.size() >= 2) {
            const bool is_p = row.kind == RowKind::FlowP;
            const auto& off = is_p ? ctx.offline_p.at(i) : ctx.offline_q.at(i);
            const mpz_class sum = protocol::multiparty_online(ctx.groups.at(i), off, is_p ? mp : mq);
            yi(r) = own + unscale(sum, tau);
          } else {
            throw ProtocolIncompleteError("agent " + std::to_string(i) + " got no product for row " +
                                          std::to_string(r) + " in round " + std::to_string(k));
          }
          have[r] = 1;
        }
        y[i] = yi;
        if (i == masked_holder)
          for (const auto& m : mp)
            if (m.agent_id == masked_child) {
              out.masked[0].masked_p.push_back(unscale(m.payload, tau));
              out.masked[0].true_p.push_back(state[masked_child].phi(grid::kFlowP));
            }
        if (i == curious)
          for (auto& [j, slot] : curious_slot) {
            auto& ct = out.curious[slot];
            const int r = cb.trade_index(j) - grid::kTrade0;
            ct.own_x.push_back(phi(cb.trade_index(j)));
            ct.y.push_back(yi(r));
            ct.own_coefficient.push_back(unscale(ctx.rec_coef[i].at(j), tau));
            ct.partner_x_truth.push_back(state[j].phi(blocks[j].trade_index(i)));
          }
      });
    }

    // Primal step, then dual steps.
    std::vector<VectorXd> dphi(n + 1);
    for_agents(n, cfg.threads, [&](int i) {
      auto& s = state[i];
      const VectorXd g = pdhg::grad_primal(gc, blocks[i], s, st.eta * y[i]);
      const VectorXd next = pdhg::primal_update(s.phi, g, st.mu);
      if (cfg.mode != Mode::PlaintextP3) s.lambda_a = pdhg::dual_update_global_nonincremental(s.lambda_a, y[i], st.xi_a);
      s.lambda_b = pdhg::dual_update_local(s.lambda_b, pdhg::local_slack(blocks[i], next), st.xi_b);
      dphi[i] = next - s.phi;
      s.phi = next;
    });
    const double gamma_d = stacked_norm(dphi);

    IterationRecord rec;
    rec.k = k;
    rec.gamma_p = gamma_p;
    rec.gamma_d = gamma_d;
    rec.traded_energy = pdhg::traded_energy(gc, blocks, phis(state));
    rec.wall_us = us_since(t_round);
    out.trace.push_back(rec);
    if (cfg.record_history) out.history.push_back(phis(state));
    if (observer) observer(rec, state);

    gamma_hist.push_back(gamma_p);
    if (!std::isfinite(gamma_p) || !std::isfinite(gamma_d)) {
      out.diverged = true;
      out.diagnostic = "non-finite residual at round " + std::to_string(k);
      break;
    }
    if (k >= 500 && gamma_p > 10.0 * std::max(gamma_hist[k - 500], cfg.tol)) {
      out.diverged = true;
      out.diagnostic = "primal residual grew tenfold over 500 rounds at round " + std::to_string(k);
      break;
    }
    if (gamma_p < cfg.tol && gamma_d < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(k + 1, cfg.max_iters);
  if (!out.converged && !out.diverged)
    out.diagnostic = "iteration cap " + std::to_string(cfg.max_iters) + " reached";

  const auto phi_end = phis(state);
  for (int i = 1; i <= n; ++i)
    out.kkt.absorb(pdhg::kkt_residual(gc, blocks[i], state[i], grid::foreign_terms(gc, blocks, phi_end, i),
                                      cfg.mode == Mode::PlaintextP3 ? st.eta : st.eta * r_plain));
  out.traded_energy = pdhg::traded_energy(gc, blocks, phi_end);
  out.objective = pdhg::total_cost(gc, blocks, phi_end);
  out.states = std::move(state);
  if (secure) out.crypto = ctx.cost;
  out.messages = bus.message_count();
  out.bytes = bus.byte_count();
  if (writer) writer->flush();
  out.wall_ms = us_since(wall0) / 1000.0;
  return out;
}

std::string summary_json(const RunResult& r) {
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["case"] = r.case_name;
  j["converged"] = r.converged;
  j["diverged"] = r.diverged;
  j["iterations"] = r.iterations;
  j["traded_energy"] = r.traded_energy;
  j["objective"] = r.objective;
  j["kkt_residuals"] = {{"stationarity", r.kkt.stationarity},
                        {"primal_equality", r.kkt.primal_equality},
                        {"primal_inequality", r.kkt.primal_inequality},
                        {"dual_feasibility", r.kkt.dual_feasibility},
                        {"complementary_slackness", r.kkt.complementary_slackness}};
  j["wall_ms"] = r.wall_ms;
  j["messages"] = r.messages;
  j["bytes"] = r.bytes;
  if (r.mode == Mode::Secure) {
    CryptoCost total;
    for (const auto& c : r.crypto) total.add(c);
    j["keygen_ms"] = r.keygen_ms;
    j["offline_ms"] = r.offline_ms;
    j["online_crypto"] = {{"encryptions", total.encryptions},
                          {"decryptions", total.decryptions},
                          {"hom_ops", total.hom_ops},
                          {"total_us", total.total_us()}};
  }
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  if (!r.trace.empty()) {
    j["gamma_p"] = r.trace.back().gamma_p;
    j["gamma_d"] = r.trace.back().gamma_d;
  }
  return j.dump(2);
}

std::string trace_csv(const RunResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << "k,gamma_p,gamma_d,traded_energy,wall_us\n";
  for (const auto& t : r.trace)
    os << t.k << ',' << t.gamma_p << ',' << t.gamma_d << ',' << t.traded_energy << ',' << t.wall_us << '\n';
  return os.str();
}

}  // namespace gridveil::harness
