#include "gridveil/secret_sharing.hpp"

#include <algorithm>
#include <set>

#include "gridveil/errors.hpp"

namespace gridveil::sharing {

std::vector<mpz_class> split_secret(const mpz_class& secret,
                                    const std::vector<mpz_class>& coeffs,
                                    const std::vector<long>& eval_points) {
  const std::size_t m = coeffs.size() + 1;
  if (m < 2) throw ConfigError("secret sharing needs m >= 2");
  if (eval_points.size() < m) throw ConfigError("need at least m evaluation points");
  std::set<long> seen;
  for (long z : eval_points) {
    if (z <= 0) throw ConfigError("evaluation points must be positive");
    if (!seen.insert(z).second) throw ConfigError("duplicate evaluation point " + std::to_string(z));
  }
  std::vector<mpz_class> shares;
  shares.reserve(eval_points.size());
  for (long z : eval_points) {
    // Horner from the highest coefficient down to the constant term.
    mpz_class acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc + *it) * z;
    shares.push_back(acc + secret);
  }
  return shares;
}

mpz_class uniform_symmetric(const mpz_class& bound, Rng& rng) {
  return rng.below(2 * bound + 1) - bound;
}

ShareBundle make_bundle(int agent_id, int m, const std::vector<long>& eval_points,
                        const mpz_class& bound, Rng& rng) {
  ShareBundle b;
  b.agent_id = agent_id;
  b.eval_points = eval_points;
  b.secret = uniform_symmetric(bound, rng);
  for (int t = 1; t < m; ++t) b.coeffs.push_back(uniform_symmetric(bound, rng));
  b.outgoing = split_secret(b.secret, b.coeffs, eval_points);
  return b;
}

mpz_class sum_received_shares(const std::map<int, mpz_class>& shares,
                              const std::vector<int>& expected_senders) {
  mpz_class total = 0;
  for (int sender : expected_senders) {
    auto it = shares.find(sender);
    if (it == shares.end())
      throw ProtocolIncompleteError("missing share from participant " + std::to_string(sender));
    total += it->second;
  }
  if (shares.size() != expected_senders.size())
    throw ProtocolError("received shares from agents outside the group");
  return total;
}

mpz_class reconstruct_omega(const std::vector<std::pair<long, mpz_class>>& sums) {
  mpq_class omega = 0;
  for (std::size_t j = 0; j < sums.size(); ++j) {
    mpq_class basis = 1;
    for (std::size_t h = 0; h < sums.size(); ++h) {
      if (h == j) continue;
      const long den = sums[h].first - sums[j].first;
      if (den == 0) throw InterpolationError("coincident evaluation points");
      mpq_class factor(sums[h].first, den);
      factor.canonicalize();  // gmp requires a positive denominator before arithmetic
      basis *= factor;
    }
    omega += basis * sums[j].second;
  }
  omega.canonicalize();
  if (omega.get_den() != 1) throw InterpolationError("interpolated value is not integral");
  return omega.get_num();
}

MaskedValue mask(int agent_id, const mpz_class& value, const mpz_class& secret) {
  return {agent_id, value + secret};
}

mpz_class unmask_sum(const std::vector<MaskedValue>& masked, const std::vector<int>& children,
                     const mpz_class& holder_secret, const mpz_class& omega) {
  std::vector<int> got;
  got.reserve(masked.size());
  mpz_class total = 0;
  for (const auto& mv : masked) {
    got.push_back(mv.agent_id);
    total += mv.payload;
  }
  std::vector<int> want = children;
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  if (got != want) throw ProtocolError("masked values do not match the participant group");
  return total + holder_secret - omega;
}

}  // namespace gridveil::sharing
