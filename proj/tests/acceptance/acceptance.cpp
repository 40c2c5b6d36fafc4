// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance [--out DIR] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gridveil/adversary.hpp"
#include "gridveil/agent_model.hpp"
#include "gridveil/bench.hpp"
#include "gridveil/centralized.hpp"
#include "gridveil/constraint_blocks.hpp"
#include "gridveil/convergence.hpp"
#include "gridveil/errors.hpp"
#include "gridveil/fixed_point.hpp"
#include "gridveil/market_engine.hpp"
#include "gridveil/messages.hpp"
#include "gridveil/paillier.hpp"
#include "gridveil/secret_sharing.hpp"

using namespace gridveil;
using harness::Mode;
using harness::RunConfig;
using harness::RunResult;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kCases = std::string(GRIDVEIL_DATA_DIR) + "/cases/";
std::filesystem::path g_out = std::filesystem::temp_directory_path() / "gridveil_acceptance";

std::string fmt(const char* f, ...) {
  char buf[4096];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Runs shared by criteria 5, 7, 8 and 9.
struct Ieee15 {
  grid::GridCase gc;
  RunResult p3;
  RunResult secure;
  std::string p3_transcript;
  std::string secure_transcript;
  double secure_seconds = 0.0;
  pdhg::CentralizedResult central;
  double worst_plain_beta_error = -1.0;  // set by criterion 7
};

Ieee15& ieee15() {
  static std::optional<Ieee15> cache;
  if (!cache) {
    Ieee15 s;
    s.gc = grid::load_case(kCases + "ieee15.json");
    s.central = pdhg::solve_centralized(s.gc);

    RunConfig p3;
    p3.case_path = kCases + "ieee15.json";
    p3.mode = Mode::PlaintextP3;
    p3.record_history = true;
    s.p3_transcript = (g_out / "ieee15_plaintext_p3.jsonl").string();
    p3.transcript_path = s.p3_transcript;
    s.p3 = harness::run_market(s.gc, p3);

    RunConfig sec;
    sec.case_path = kCases + "ieee15.json";
    sec.mode = Mode::Secure;
    sec.tau = 8;
    s.secure_transcript = (g_out / "ieee15_secure.jsonl").string();
    sec.transcript_path = s.secure_transcript;
    const auto t0 = Clock::now();
    s.secure = harness::run_market(s.gc, sec);
    s.secure_seconds = seconds_since(t0);
    cache = std::move(s);
  }
  return *cache;
}

// 1 --------------------------------------------------------------------------

Verdict crypto_properties() {
  const auto t0 = Clock::now();
  const int cases = 10000;
  Rng rng(101);
  const crypto::KeyMaterial key = crypto::keygen(128, rng);
  const crypto::PublicKey pk = key.public_key();
  const unsigned tau = 4;
  const auto codec = crypto::SignedFixedCodec::for_key(pk, tau);
  const mpz_class bound = codec.max_magnitude();
  auto draw = [&](const mpz_class& b) { return mpz_class(rng.below(2 * b - 1) - (b - 1)); };

  int rt_bad = 0, add_bad = 0, mul_bad = 0, crt_bad = 0;
  double mul_worst = 0.0;
  for (int t = 0; t < cases; ++t) {
    const mpz_class d = draw(bound);
    const auto e = crypto::encrypt_scaled(pk, codec, d, rng);
    if (crypto::decrypt_crt_scaled(key, e, codec) != d) ++rt_bad;
    if (crypto::crt_residue(key, e.value) != crypto::standard_residue(key, e.value) ||
        crypto::decrypt_standard_scaled(key, e, codec) != d)
      ++crt_bad;
  }
  const mpz_class half = bound / 2;
  for (int t = 0; t < cases; ++t) {
    const mpz_class a = draw(half), b = draw(half);
    const auto sum = crypto::hom_add(crypto::encrypt_scaled(pk, codec, a, rng),
                                     crypto::encrypt_scaled(pk, codec, b, rng), pk);
    if (crypto::decrypt_crt_scaled(key, sum, codec) != a + b) ++add_bad;
    if (crypto::decrypt_standard_scaled(key, sum, codec) != a + b) ++crt_bad;
  }
  // d and s carry exactly tau fraction digits; the product must fit a third of n
  const mpz_class d_bound = pow10(12), s_bound = pow10(8);
  for (int t = 0; t < cases; ++t) {
    const mpz_class D = draw(d_bound);
    const mpz_class S = 1 + rng.below(s_bound);
    const double d = unscale(D, tau), s = unscale(S, tau);
    const auto e = crypto::hom_scalar_mul(crypto::encrypt(pk, codec, d, rng), s, codec, pk);
    const mpz_class got = crypto::decrypt_crt_scaled(key, e, codec);
    const double err = std::abs(unscale(got, 2 * tau) - unscale(mpz_class(D * S), 2 * tau));
    mul_worst = std::max(mul_worst, err);
    if (err > 1e-8 || got != D * S) ++mul_bad;
    if (crypto::decrypt_standard_scaled(key, e, codec) != got) ++crt_bad;
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = rt_bad == 0 && add_bad == 0 && mul_bad == 0 && crt_bad == 0 && secs < 60.0;
  v.detail = fmt("%d cases/op at 128-bit: round-trip failures %d, add %d, scalar %d (worst |err| %.1e), "
                 "CRT!=standard %d, %.1f s",
                 cases, rt_bad, add_bad, mul_bad, mul_worst, crt_bad, secs);
  return v;
}

// 2 --------------------------------------------------------------------------

Verdict crt_speedup() {
  const auto rows = harness::bench_crypto({128, 512, 1024, 2048}, 30);
  std::ofstream(g_out / "bench_crypto.csv") << harness::bench_csv(rows);
  double s128 = 0.0, s2048 = 0.0;
  std::string all;
  for (const auto& r : rows) {
    if (r.op != "decrypt_crt") continue;
    if (r.key_bits == 128) s128 = r.speedup;
    if (r.key_bits == 2048) s2048 = r.speedup;
    all += fmt(" %u:%.2fx", r.key_bits, r.speedup);
  }
  Verdict v;
  v.pass = s2048 >= 2.0 && s2048 > s128;
  v.detail = fmt("standard/CRT decryption time%s (need >= 2x at 2048 and above 128-bit)", all.c_str());
  return v;
}

// 3 --------------------------------------------------------------------------

Verdict sharing_exactness() {
  Rng rng(303);
  const mpz_class bound = scale_decimal(1e6, 4);
  int omega_bad = 0, unmask_bad = 0, groups = 0;
  for (int m = 2; m <= 10; ++m) {
    std::vector<long> z;
    std::vector<int> senders, children;
    for (int i = 1; i <= m; ++i) {
      z.push_back(i);
      senders.push_back(i - 1);
      if (i > 1) children.push_back(i - 1);
    }
    for (int g = 0; g < 1000; ++g, ++groups) {
      std::vector<sharing::ShareBundle> b;
      mpz_class total = 0;
      for (int i = 0; i < m; ++i) {
        b.push_back(sharing::make_bundle(i, m, z, bound, rng));
        total += b.back().secret;
      }
      std::vector<std::pair<long, mpz_class>> sums;
      for (int j = 0; j < m; ++j) {
        std::map<int, mpz_class> in;
        for (int i = 0; i < m; ++i) in[i] = b[i].outgoing[j];
        sums.emplace_back(z[j], sharing::sum_received_shares(in, senders));
      }
      const mpz_class omega = sharing::reconstruct_omega(sums);
      if (omega != total) ++omega_bad;
      std::vector<sharing::MaskedValue> masked;
      mpz_class plain = 0;
      for (int c : children) {
        const mpz_class v = sharing::uniform_symmetric(bound, rng);
        plain += v;
        masked.push_back(sharing::mask(c, v, b[c].secret));
      }
      if (sharing::unmask_sum(masked, children, b[0].secret, omega) != plain) ++unmask_bad;
    }
  }
  Verdict v;
  v.pass = omega_bad == 0 && unmask_bad == 0;
  v.detail = fmt("%d groups, m in [2, 10]: omega mismatches %d, unmask mismatches %d", groups, omega_bad,
                 unmask_bad);
  return v;
}

// 4 --------------------------------------------------------------------------

Verdict feasible_range_published() {
  pdhg::TheoremInputs in;
  in.rho = 0.02;
  in.delta = 7.0;
  in.mu = 0.07;
  in.xi_a = 0.02;
  in.xi_b = 0.015;
  in.eta = 1.6;
  in.sigma_min_A = 1.0;
  in.sigma_max_A = 1.4142;
  in.sigma_max_B = 1.9021;
  const auto fr = pdhg::feasible_range(in);
  // substitution oracle, written out independently of feasible_range
  const double k1 = (1.0 - 0.07 * 7.0) / (0.07 * (1.6 - 0.02) * 2.0);
  const double k2 = (0.015 * 3.618 - 0.02) / 1.54;
  const bool ends = std::abs(fr.lo - 0.0223) <= 1e-4 && std::abs(fr.hi - 2.3057) <= 1e-4;
  const bool oracle = std::abs(fr.k1 - k1) <= 1e-4 && std::abs(fr.k2 - k2) <= 1e-4 &&
                      std::abs(k1 - 2.3056) <= 1e-4 && std::abs(k2 - 0.02226) <= 1e-5;
  Verdict v;
  v.pass = fr.condition == 2 && !fr.empty && ends && oracle;
  v.detail = fmt("condition %d, range [%.5f, %.5f]; oracle k1 %.5f (code %.5f), k2 %.5f (code %.5f)",
                 fr.condition, fr.lo, fr.hi, k1, fr.k1, k2, fr.k2);
  return v;
}

// 5 --------------------------------------------------------------------------

Verdict mode_equivalence() {
  Ieee15& s = ieee15();
  const auto& lp = s.p3.trace.back();
  const auto& ls = s.secure.trace.back();
  const double dT = std::abs(s.p3.traded_energy - s.secure.traded_energy);
  const double gap = std::abs(s.secure.objective - s.central.objective) / std::abs(s.central.objective);
  Verdict v;
  v.pass = s.p3.converged && s.secure.converged && lp.gamma_p < 1e-4 && lp.gamma_d < 1e-4 &&
           ls.gamma_p < 1e-4 && ls.gamma_d < 1e-4 && dT < 5e-4 && s.central.converged && gap < 1e-4 &&
           s.secure_seconds < 300.0;
  v.detail = fmt("ieee15: plaintext T=%.4f (%d it, gp %.1e gd %.1e), secure tau=8 T=%.4f (%d it, gp %.1e gd %.1e, "
                 "%.1f s), |dT| %.1e, centralized T=%.4f, objective gap %.1e",
                 s.p3.traded_energy, s.p3.iterations, lp.gamma_p, lp.gamma_d, s.secure.traded_energy,
                 s.secure.iterations, ls.gamma_p, ls.gamma_d, s.secure_seconds, dT, s.central.traded_energy, gap);
  return v;
}

// 6 --------------------------------------------------------------------------

Verdict contraction() {
  const grid::GridCase gc = grid::load_case(kCases + "toy3.json");
  const auto blocks = grid::build_all_blocks(gc);
  const pdhg::StepSettings steps;
  const double r = 1.2;

  double l = 0.0;
  for (int i = 1; i <= gc.agent_count(); ++i) {
    const auto in = pdhg::theorem_inputs(gc, blocks[i], steps);
    const auto fr = pdhg::feasible_range(in);
    if (!fr.contains(r)) return {false, fmt("r = %.2f outside agent %d's range [%.4f, %.4f]", r, i, fr.lo, fr.hi)};
    l = std::max(l, pdhg::linear_rate_bound(in, r, pdhg::sigma_min_stacked(blocks[i])));
  }

  RunConfig cfg;
  cfg.mode = Mode::PlaintextP4;
  cfg.fixed_r = r;
  cfg.tol = 1e-13;
  cfg.max_iters = 200000;
  const RunResult opt = harness::run_market(gc, cfg);
  if (!opt.converged) return {false, "reference run did not reach 1e-13"};

  std::vector<double> err;
  cfg.tol = 1e-11;
  harness::run_market(gc, cfg, [&](const harness::IterationRecord&, const std::vector<pdhg::AgentState>& st) {
    double e = 0.0;
    for (int i = 1; i <= gc.agent_count(); ++i)
      e += pdhg::weighted_error(blocks[i], st[i], opt.states[i], steps.mu, steps.xi_a * r, steps.xi_b);
    err.push_back(e);
  });

  // windows of 50 rounds while the error is well above the reference's own accuracy
  const double floor = 1e-16 * err.front();
  double worst = 0.0, log_sum = 0.0;
  int windows = 0;
  for (std::size_t k = 0; k + 50 < err.size() && err[k + 50] > floor; k += 50) {
    const double f = std::pow(err[k + 50] / err[k], 1.0 / 50.0);
    worst = std::max(worst, f);
    log_sum += std::log(f);
    ++windows;
  }
  const double mean = windows ? std::exp(log_sum / windows) : 1.0;
  Verdict v;
  v.pass = windows >= 5 && worst <= l;
  v.detail = fmt("toy3, r = %.1f: %d windows, mean factor %.5f, worst window %.5f, bound l = %.5f", r, windows,
                 mean, worst, l);
  return v;
}

// 7 --------------------------------------------------------------------------

Verdict plaintext_attack() {
  Ieee15& s = ieee15();
  const auto t = protocol::read_transcript(s.p3_transcript);
  const auto obs = adversary::observe_plaintext(t);
  double worst_param = 0.0, worst_beta = 0.0, worst_inj = 0.0;
  int params = 0, injections = 0, inconclusive = 0;
  for (int i = 1; i <= s.gc.agent_count(); ++i) {
    if (s.gc.role(i) == grid::Role::Inactive) continue;
    for (int j : s.gc.partners[i]) {
      const auto u = adversary::infer_utility_params(obs, s.gc, i, j);
      if (!u.conclusive) {
        ++inconclusive;
        continue;
      }
      const auto& pp = s.gc.prosumers[i];
      const double eb = std::abs(u.beta - pp.beta) / std::abs(pp.beta);
      worst_beta = std::max(worst_beta, eb);
      worst_param = std::max({worst_param, std::abs(u.alpha - pp.alpha) / std::abs(pp.alpha), eb});
      ++params;
    }
  }
  // the last observed round has no successor, so the update-rule inversion stops one short
  for (int k = 0; k + 1 < obs.rounds; ++k) {
    for (int i = 1; i <= s.gc.agent_count(); ++i) {
      const auto est = adversary::infer_injections(obs, s.gc, i, k);
      const auto& truth = s.p3.history[k][i];
      const double ep = std::abs(est.p - truth(grid::kP)) / std::max(1.0, std::abs(truth(grid::kP)));
      const double eq = std::abs(est.q - truth(grid::kQ)) / std::max(1.0, std::abs(truth(grid::kQ)));
      worst_inj = std::max({worst_inj, ep, eq});
      if (!est.determined) worst_inj = INFINITY;
      ++injections;
    }
  }
  s.worst_plain_beta_error = worst_beta;
  Verdict v;
  v.pass = params > 0 && inconclusive == 0 && worst_param < 1e-9 && worst_inj < 1e-12;
  v.detail = fmt("ieee15 P3 transcript: %d (alpha, beta) inversions, worst rel error %.1e; %d injections over %d "
                 "rounds, worst rel error %.1e",
                 params, worst_param, injections, obs.rounds - 1, worst_inj);
  return v;
}

// 8 --------------------------------------------------------------------------

Verdict secure_attack() {
  Ieee15& s = ieee15();
  if (s.worst_plain_beta_error < 0.0) plaintext_attack();
  const auto t = protocol::read_transcript(s.secure_transcript);
  const auto aud = adversary::audit(t);
  bool refused = false;
  try {
    adversary::observe_plaintext(t);
  } catch (const AnalysisPreconditionError&) {
    refused = true;
  }
  const auto settings = adversary::settings_from_header(t.header_json);
  const double floor = 1e3 * std::max(s.worst_plain_beta_error, 1e-12);

  int streams = 0, deficient = 0, failed = 0;
  double min_beta_err = INFINITY, worst_tail = 0.0, worst_gap = 0.0;
  for (const auto& tr : s.secure.curious) {
    const auto res = adversary::attack_secured(tr, s.gc, settings);
    ++streams;
    if (res.rank.deficient) ++deficient;
    if (res.beta_rel_error >= floor) ++failed;
    min_beta_err = std::min(min_beta_err, res.beta_rel_error);
    worst_tail = std::max(worst_tail, res.tail_relation_error);
    worst_gap = std::max(worst_gap, res.tail_truth_gap);
  }
  double min_offset = INFINITY, worst_spread = 0.0;
  for (const auto& m : s.secure.masked) {
    const auto c = adversary::masked_offset(m);
    min_offset = std::min(min_offset, c.estimate_rel_error);
    worst_spread = std::max(worst_spread, c.offset_spread);
  }
  const bool masked_ok = s.secure.masked.empty() || (min_offset > 1.0 && worst_spread < 1e-6);
  Verdict v;
  v.pass = !aud.plain_present && refused && streams > 0 && deficient == streams && failed == streams &&
           worst_tail < 1e-3 && worst_gap < 1e-4 && masked_ok;
  v.detail = fmt("%zu envelopes, plain payloads %s; %d streams, %d rank-deficient, min beta error %.2e vs "
                 "required %.1e; tail |x_hat + x_i| <= %.1e (true gap %.1e); %zu masked streams, min rel offset "
                 "%.1e",
                 aud.envelopes, aud.plain_present ? "present" : "none", streams, deficient, min_beta_err, floor,
                 worst_tail, worst_gap, s.secure.masked.size(), min_offset);
  return v;
}

// 9 --------------------------------------------------------------------------

Verdict kkt_certification() {
  // Every converged run counts, at the default stopping tolerance as well as
  // at a tight one. With gamma_d = |Phi^{k+1} - Phi^k| = mu |grad L|, a run
  // stopped at gamma_d < tol can carry a stationarity residual near tol / mu.
  std::string tight, loose;
  bool pass = true;
  int runs = 0;
  auto score = [&](const std::string& label, const RunResult& r, std::string& into) {
    if (!r.converged) {
      into += " " + label + " not-converged(!)";
      pass = false;
      return;
    }
    ++runs;
    const auto& k = r.kkt;
    const std::pair<double, const char*> groups[] = {{k.stationarity, "stat"},
                                                     {k.primal_equality, "eq"},
                                                     {k.primal_inequality, "ineq"},
                                                     {k.dual_feasibility, "dual"},
                                                     {k.complementary_slackness, "cs"}};
    const auto worst = *std::max_element(std::begin(groups), std::end(groups));
    const bool ok = worst.first < 1e-4;
    pass = pass && ok;
    into += fmt(" %s %.1e%s", label.c_str(), worst.first, ok ? "" : (std::string(" (!") + worst.second + ")").c_str());
  };
  for (const char* name : {"toy3", "ieee15"}) {
    const grid::GridCase gc = grid::load_case(kCases + std::string(name) + ".json");
    for (Mode m : {Mode::Centralized, Mode::PlaintextP3, Mode::PlaintextP4, Mode::Secure}) {
      for (double tol : {1e-4, 1e-6}) {
        const std::string label = std::string(name) + "/" + harness::mode_name(m);
        if (std::string(name) == "ieee15" && tol == 1e-4 && m == Mode::PlaintextP3) {
          score(label, ieee15().p3, loose);
          continue;
        }
        if (std::string(name) == "ieee15" && tol == 1e-4 && m == Mode::Secure) {
          score(label, ieee15().secure, loose);
          continue;
        }
        RunConfig cfg;
        cfg.mode = m;
        cfg.tol = tol;
        cfg.tau = 8;
        score(label, harness::run_market(gc, cfg), tol == 1e-4 ? loose : tight);
      }
    }
  }
  return {pass, fmt("%d converged runs, worst KKT group; stopped at tol 1e-4:", runs) + loose +
                    "; stopped at tol 1e-6:" + tight};
}

// 10 -------------------------------------------------------------------------

Verdict gradient_oracle() {
  const grid::GridCase gc = grid::load_case(kCases + "ieee15.json");
  const auto blocks = grid::build_all_blocks(gc);
  Rng rng(1010);
  const double eta = 1.6;
  double worst_active = 0.0, worst_exact = 0.0;
  int states = 0;

  auto check = [&](const grid::ConstraintBlocks& cb, const pdhg::AgentState& st, const Eigen::VectorXd& foreign,
                   pdhg::Branch branch) {
    const Eigen::VectorXd res = pdhg::coupling_residual(cb, st.phi, foreign);
    const Eigen::VectorXd g = pdhg::grad_primal(gc, cb, st, eta * res, branch);
    double worst = 0.0;
    for (int k = 0; k < cb.dim; ++k) {
      // central differences are exact on quadratics, so the step only has to keep clear of the kink
      const double h = 1e-3 * std::max(1.0, std::abs(st.phi(k)));
      auto a = st, b = st;
      a.phi(k) += h;
      b.phi(k) -= h;
      const double fd = (pdhg::lagrangian(gc, cb, a, foreign, eta) - pdhg::lagrangian(gc, cb, b, foreign, eta)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(fd - g(k)) / std::max(1.0, std::abs(g(k))));
    }
    return worst;
  };

  for (int t = 0; states < 1000; ++t) {
    const auto& cb = blocks[1 + t % gc.agent_count()];
    pdhg::AgentState st = pdhg::AgentState::zeros(cb);
    for (int k = 0; k < cb.dim; ++k) st.phi(k) = rng.uniform(-60.0, 60.0);
    st.phi(grid::kV) = rng.uniform(0.81, 1.21);
    for (int k = 0; k < st.lambda_a.size(); ++k) st.lambda_a(k) = rng.uniform(-5.0, 5.0);
    for (int k = 0; k < st.lambda_b.size(); ++k) st.lambda_b(k) = rng.uniform(0.0, 5.0);
    Eigen::VectorXd foreign(cb.A.rows());
    for (int k = 0; k < foreign.size(); ++k) foreign(k) = rng.uniform(-60.0, 60.0);

    const bool trades = cb.dim > grid::kTrade0;
    const double sgn = cb.role == grid::Role::Buyer ? 1.0 : -1.0;
    auto arg = [&](const Eigen::VectorXd& phi) {
      return trades ? sgn * (phi.segment(grid::kTrade0, cb.dim - grid::kTrade0).sum() - phi(grid::kP)) : 1.0;
    };
    // literal derivative, away from the kink
    if (std::abs(arg(st.phi)) > 1.0) worst_exact = std::max(worst_exact, check(cb, st, foreign, pdhg::Branch::Exact));
    else continue;
    // solver's gradient on the balance-feasible side
    if (trades && arg(st.phi) < 0.0) st.phi(grid::kP) += sgn * (arg(st.phi) - rng.uniform(1.0, 10.0));
    worst_active = std::max(worst_active, check(cb, st, foreign, pdhg::Branch::Active));
    ++states;
  }
  Verdict v;
  v.pass = worst_active < 1e-5 && worst_exact < 1e-5;
  v.detail = fmt("%d random states: literal-branch gradient worst rel error %.1e, solver gradient on the "
                 "balance-feasible side %.1e",
                 states, worst_exact, worst_active);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--out") && a + 1 < argc) g_out = argv[++a];
    else if (!std::strcmp(argv[a], "--only") && a + 1 < argc) only = std::atoi(argv[++a]);
    else {
      std::cerr << "usage: acceptance [--out DIR] [--only N]\n";
      return 2;
    }
  }
  std::filesystem::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"crypto round-trip and homomorphism", crypto_properties},
      {"CRT decryption speedup", crt_speedup},
      {"secret-sharing exactness", sharing_exactness},
      {"feasible coefficient range", feasible_range_published},
      {"plaintext/secure mode equivalence", mode_equivalence},
      {"linear convergence rate", contraction},
      {"plaintext attack succeeds", plaintext_attack},
      {"secure attack fails", secure_attack},
      {"KKT certification", kkt_certification},
      {"gradient oracle", gradient_oracle},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("[%s] %zu %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
