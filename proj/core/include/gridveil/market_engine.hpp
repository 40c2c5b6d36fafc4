#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridveil/agent_model.hpp"
#include "gridveil/constraint_blocks.hpp"
#include "gridveil/convergence.hpp"
#include "gridveil/grid_case.hpp"
#include "gridveil/secure_protocols.hpp"

namespace gridveil::harness {

enum class Mode { Centralized, PlaintextP3, PlaintextP4, Secure };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);  // ConfigError on unknown names

struct RunConfig {
  std::string case_path;  // informational, copied into the transcript header
  Mode mode = Mode::PlaintextP3;
  unsigned key_bits = 128;
  unsigned tau = 4;
  int max_iters = 20000;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  std::string transcript_path;  // empty: no transcript
  pdhg::StepSettings steps;

  // Blinding coefficients. `fixed_r` pins every two-party product to r (P4
  // plaintext multiplies its residuals by it); otherwise each agent draws
  // from its sub-range, which is [subrange_lo, subrange_hi] clipped to the
  // agent's feasible range, or a random sub-range when `random_subrange`.
  std::optional<double> fixed_r;
  double subrange_lo = 0.5;
  double subrange_hi = 1.5;
  bool random_subrange = false;

  int threads = 1;
  bool record_history = false;  // keep Phi^k of every agent for every k
  int curious_agent = 0;        // 0: first buyer
};

struct IterationRecord {
  int k = 0;
  double gamma_p = 0.0;
  double gamma_d = 0.0;
  double traded_energy = 0.0;
  double wall_us = 0.0;
};

struct CryptoCost {
  std::size_t encryptions = 0;
  std::size_t decryptions = 0;
  std::size_t hom_ops = 0;
  std::size_t modexps = 0;  // encryptions count one, scalar products one, decryptions two (CRT)
  double encrypt_us = 0.0;
  double decrypt_us = 0.0;
  double hom_us = 0.0;
  double total_us() const { return encrypt_us + decrypt_us + hom_us; }
  void add(const CryptoCost& o);
};

/// What the curious agent sees on one reciprocity session: its own term, the
/// decrypted blinded product and its own coefficient. The partner's true term
/// is kept beside it only for scoring attacks.
struct CuriousTrace {
  int agent = 0;
  int partner = 0;
  std::vector<double> own_x;
  std::vector<double> y;
  std::vector<double> own_coefficient;
  pdhg::FeasibleRange full_range;
  protocol::SubRange agreed;  // intersection the coefficients come from
  std::vector<double> partner_x_truth;
};

/// Holder's view of one masked child stream in a multi-party group.
struct MaskedTrace {
  int holder = 0;
  int child = 0;
  std::vector<double> masked_p;  // P_c + R_c as seen by the holder
  std::vector<double> true_p;    // scoring only
};

struct RunResult {
  Mode mode = Mode::PlaintextP3;
  std::string case_name;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  double traded_energy = 0.0;
  double objective = 0.0;
  pdhg::KktReport kkt;
  std::vector<pdhg::AgentState> states;  // index 0 unused
  std::vector<IterationRecord> trace;
  std::vector<std::vector<Eigen::VectorXd>> history;  // history[k][i] = Phi_i^k

  std::vector<pdhg::FeasibleRange> ranges;  // per agent, secure mode
  std::vector<CryptoCost> crypto;           // per agent, online phase
  CryptoCost offline_crypto;
  double keygen_ms = 0.0;
  double offline_ms = 0.0;
  double wall_ms = 0.0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  std::vector<CuriousTrace> curious;
  std::vector<MaskedTrace> masked;
  std::string diagnostic;
};

using Observer = std::function<void(const IterationRecord&, const std::vector<pdhg::AgentState>&)>;

/// Runs the market. Stops when gamma_p and gamma_d both drop below tol, when
/// gamma_p grows tenfold over 500 rounds (diverged) or at max_iters.
/// Throws ConfigError when secure mode meets an empty feasible range.
RunResult run_market(const grid::GridCase& gc, const RunConfig& cfg, const Observer& observer = {});

/// Stacked per-agent residual vectors A_i Phi_i + foreign_i.
std::vector<Eigen::VectorXd> all_residuals(const grid::GridCase& gc,
                                           const std::vector<grid::ConstraintBlocks>& blocks,
                                           const std::vector<Eigen::VectorXd>& phi);

/// {iterations, traded_energy, kkt_residuals, mode, ...}
std::string summary_json(const RunResult& r);

/// Header "k,gamma_p,gamma_d,traded_energy,wall_us" then one row per round.
std::string trace_csv(const RunResult& r);

}  // namespace gridveil::harness
