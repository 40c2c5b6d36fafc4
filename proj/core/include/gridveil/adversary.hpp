#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridveil/agent_model.hpp"
#include "gridveil/grid_case.hpp"
#include "gridveil/market_engine.hpp"
#include "gridveil/messages.hpp"

namespace gridveil::adversary {

/// Public settings a wiretapper is assumed to know, read from the transcript header.
struct PublicSettings {
  std::string mode;
  std::string case_path;
  pdhg::StepSettings steps;
  double r = 1.0;  // plaintext P4 residual multiplier
  double omega_b = 0.0;
  double omega_s = 0.0;
  double v_root = 1.0;
  double base_kva = 1000.0;
  unsigned tau = 4;
  unsigned key_bits = 128;
  std::uint64_t seed = 1;
};

PublicSettings settings_from_header(const std::string& header_json);

/// Everything that crossed a channel in a plaintext run, indexed by round.
struct PlainObservation {
  PublicSettings settings;
  int rounds = 0;
  std::vector<std::map<int, std::array<double, 3>>> state;   // [k][agent] = (P, Q, v)
  std::vector<std::map<std::pair<int, int>, double>> trade;  // [k][(i, j)] = e_ij
};

/// Throws AnalysisPreconditionError for a secure-mode transcript.
PlainObservation observe_plaintext(const protocol::Transcript& t);

struct InjectionEstimate {
  int agent = 0;
  int k = 0;
  bool determined = false;  // false: the channel data do not pin the value down
  double p = 0.0;
  double q = 0.0;
};

/// Literal flow balance p = sum_c P_c - P_i (exact only when the row residual is zero).
InjectionEstimate infer_injection_literal(const PlainObservation& obs, const grid::GridCase& pub, int agent, int k);

/// Exact injections at round k: the flow-row residual is recovered by inverting
/// the P_i and Q_i update rules, tracking the duals from observed data. Needs
/// round k + 1. `pub` supplies only public grid data (topology, lines, bounds).
InjectionEstimate infer_injections(const PlainObservation& obs, const grid::GridCase& pub, int agent, int k);

struct UtilityEstimate {
  int agent = 0;
  int partner = 0;
  bool conclusive = false;
  double alpha = 0.0;
  double beta = 0.0;
};

/// (alpha, beta) of agent i from its first two trades with `partner`, using
/// the P3 or P4 inversion according to the transcript mode.
UtilityEstimate infer_utility_params(const PlainObservation& obs, const grid::GridCase& pub, int agent,
                                     int partner);

struct RankAnalysis {
  int equations = 0;
  int unknowns = 0;
  int rank = 0;
  bool deficient = false;
};

struct SecureAttackResult {
  int agent = 0;
  int partner = 0;
  RankAnalysis rank;
  std::vector<double> recovered_x;  // least-squares estimate of the partner's stream
  double stream_rel_error = 0.0;    // max_k |x_hat - x| / max(1, |x|)
  double beta_estimate = 0.0;
  double beta_true = 0.0;
  double beta_rel_error = 0.0;
  double tail_relation_error = 0.0;  // |x_hat_K + x_i,K| at the last round
  double tail_truth_gap = 0.0;       // |x_j,K + x_i,K|, what the relation actually discloses
};

/// Attack of the curious agent on one reciprocity stream y^k = r^k (x_i^k + x_j^k).
/// The coefficient guess is the midpoint of the agreed range.
SecureAttackResult attack_secured(const harness::CuriousTrace& trace, const grid::GridCase& gc,
                                  const PublicSettings& settings);

struct OffsetCheck {
  int holder = 0;
  int child = 0;
  double offset_mean = 0.0;    // masked - true, i.e. the child's secret
  double offset_spread = 0.0;  // max - min over rounds (fixed-point quantum only)
  double estimate_rel_error = 0.0;
};

/// The holder's naive reading of a masked stream is off by the child's constant secret.
OffsetCheck masked_offset(const harness::MaskedTrace& trace);

/// Channel audit: counts by payload kind and whether any raw value appears.
struct TranscriptAudit {
  std::map<std::string, std::size_t> by_kind;
  bool plain_present = false;
  std::size_t envelopes = 0;
};

TranscriptAudit audit(const protocol::Transcript& t);

/// Report JSON {mode, inferred_params, true_params, relative_errors, rank_analysis, ...}
/// for a transcript. Secure transcripts are replayed from their header to
/// obtain the curious agent's own view; `case_override` replaces the case path.
std::string attack_report(const std::string& transcript_path, const std::string& case_override = "");

}  // namespace gridveil::adversary
