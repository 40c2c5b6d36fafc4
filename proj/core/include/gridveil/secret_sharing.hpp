#pragma once

#include <map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "gridveil/random.hpp"

namespace gridveil::sharing {

// All quantities here are integers already scaled by 10^tau, so every step of
// split / sum / interpolate / unmask is exact.

/// One participant's secret material for a single shared component.
struct ShareBundle {
  int agent_id = -1;
  mpz_class secret;                        // R_i
  std::vector<mpz_class> coeffs;           // phi_{i,1..m-1}
  std::vector<long> eval_points;           // Z_1..Z_n
  std::vector<mpz_class> outgoing;         // G_i(Z_j), same order as eval_points
  mpz_class incoming_sum;                  // P_i(Z_i), set by sum_received_shares
  mpz_class omega;                         // only meaningful at the holder
};

struct MaskedValue {
  int agent_id = -1;
  mpz_class payload;  // value + R_i
};

/// Polynomial evaluation G(Z) = R + sum_t phi_t Z^t at every point.
/// Throws ConfigError on duplicate or non-positive points, or when there are
/// fewer points than m = coeffs.size() + 1.
std::vector<mpz_class> split_secret(const mpz_class& secret, const std::vector<mpz_class>& coeffs,
                                    const std::vector<long>& eval_points);

/// Uniform integer in [-bound, bound].
mpz_class uniform_symmetric(const mpz_class& bound, Rng& rng);

/// Draws R_i and phi_{i,1..m-1} uniformly from [-bound, bound] and evaluates the shares.
ShareBundle make_bundle(int agent_id, int m, const std::vector<long>& eval_points,
                        const mpz_class& bound, Rng& rng);

/// Sum of the m shares addressed to one evaluation point, keyed by sender.
/// Throws ProtocolIncompleteError if any of `expected_senders` is missing.
mpz_class sum_received_shares(const std::map<int, mpz_class>& shares,
                              const std::vector<int>& expected_senders);

/// Lagrange interpolation at zero over exact rationals. Throws
/// InterpolationError on coincident points or a non-integral result.
mpz_class reconstruct_omega(const std::vector<std::pair<long, mpz_class>>& sums);

MaskedValue mask(int agent_id, const mpz_class& value, const mpz_class& secret);

/// sum_j (Phi_j + R_j) + R_c - Omega. Throws ProtocolError when the masked
/// senders differ from `children`.
mpz_class unmask_sum(const std::vector<MaskedValue>& masked, const std::vector<int>& children,
                     const mpz_class& holder_secret, const mpz_class& omega);

}  // namespace gridveil::sharing
