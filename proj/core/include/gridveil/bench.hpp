#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridveil/grid_case.hpp"

namespace gridveil::harness {

struct BenchRow {
  std::string op;
  unsigned key_bits = 0;
  double mean_us = 0.0;
  double speedup = 0.0;  // standard / CRT, filled on the decrypt_crt row only
};

/// Mean single-threaded timings of encrypt, both decryptions and the two
/// homomorphic operations for every key size.
std::vector<BenchRow> bench_crypto(const std::vector<unsigned>& key_bits, int ops, std::uint64_t seed = 7);

/// "op,key_bits,mean_us,speedup"
std::string bench_csv(const std::vector<BenchRow>& rows);

struct ScalingRow {
  std::string case_name;
  int agents = 0;
  int groups = 0;  // multi-party groups
  int rounds = 0;
  double keygen_ms = 0.0;
  double offline_ms = 0.0;
  double online_us_per_agent_iter = 0.0;  // crypto time only
  double modexps_per_agent_iter = 0.0;
};

/// Secure run for a fixed number of rounds, reporting offline and per-agent
/// online crypto cost.
ScalingRow scaling_run(const grid::GridCase& gc, int rounds, unsigned key_bits, unsigned tau, std::uint64_t seed);

/// "case,agents,groups,rounds,keygen_ms,offline_ms,online_us_per_agent_iter,modexps_per_agent_iter"
std::string scaling_csv(const std::vector<ScalingRow>& rows);

}  // namespace gridveil::harness
