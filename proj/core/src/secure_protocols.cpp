#include "gridveil/secure_protocols.hpp"

#include <algorithm>
#include <cmath>

#include "gridveil/errors.hpp"
#include "gridveil/fixed_point.hpp"

namespace gridveil::protocol {

using crypto::Ciphertext;

SubRange negotiate_subrange(const pdhg::FeasibleRange& full, Rng& rng, double min_fraction) {
  if (full.empty || !(full.hi >= full.lo) || !(full.hi > 0.0))
    throw ConfigError("feasible range is empty; secure mode unavailable");
  const double lo_full = std::max(full.lo, 1e-9);
  const double width = full.hi - lo_full;
  if (!(width > 0.0)) return {full.hi, full.hi};
  const double w = width * rng.uniform(min_fraction, 1.0);
  const double lo = lo_full + rng.uniform(0.0, width - w);
  return {lo, std::min(lo + w, full.hi)};
}

SubRange clip_subrange(const pdhg::FeasibleRange& full, SubRange wanted) {
  if (full.empty) throw ConfigError("feasible range is empty; secure mode unavailable");
  SubRange out{std::max(wanted.lo, full.lo), std::min(wanted.hi, full.hi)};
  if (!(out.hi > out.lo) || out.lo <= 0.0)
    throw ConfigError("requested coefficient range does not meet the feasible range");
  return out;
}

mpz_class draw_coefficient(const SubRange& range, unsigned tau, Rng& rng) {
  // Smallest integer with lo / 10^tau >= range.lo.
  mpz_class lo = scale_decimal(range.lo, tau);
  while (unscale(lo, tau) < range.lo) lo += 1;
  mpz_class hi = scale_decimal(range.hi, tau);
  if (lo < 1) lo = 1;
  if (hi < lo) throw ProtocolError("coefficient range narrower than the fixed-point quantum");
  return lo + rng.below(hi - lo + 1);
}

Ciphertext two_party_request(const crypto::PublicKey& pk, const crypto::SignedFixedCodec& codec,
                             const mpz_class& x_i, Rng& rng) {
  return crypto::encrypt_scaled(pk, codec, x_i, rng);
}

Ciphertext two_party_respond(const crypto::PublicKey& pk, const crypto::SignedFixedCodec& codec,
                             const Ciphertext& s1, const mpz_class& x_t, const mpz_class& coefficient,
                             Rng& rng) {
  if (coefficient <= 0) throw ProtocolError("blinding coefficient must be positive");
  const Ciphertext s2 = crypto::encrypt_scaled(pk, codec, x_t, rng);
  return crypto::hom_scalar_mul_scaled(crypto::hom_add(s1, s2, pk), coefficient, pk);
}

mpz_class two_party_finish(const crypto::KeyMaterial& sk, const crypto::SignedFixedCodec& codec,
                           const Ciphertext& s3) {
  if (s3.scale_exp != 2) throw ProtocolError("two-party result must carry a coefficient product");
  return crypto::decrypt_crt_scaled(sk, s3, codec);
}

double two_party_exchange(const crypto::KeyMaterial& requester_key, const crypto::SignedFixedCodec& codec,
                          const SubRange& range, double x_i, double x_t, Rng& requester_rng,
                          Rng& responder_rng, std::optional<double> forced_r) {
  const crypto::PublicKey pk = requester_key.public_key();
  const Ciphertext s1 = two_party_request(pk, codec, codec.scale(x_i), requester_rng);
  mpz_class coef;
  if (forced_r) {
    coef = codec.scale(*forced_r);
  } else {
    coef = draw_coefficient(range, codec.tau(), responder_rng);
    if (unscale(coef, codec.tau()) < range.lo || unscale(coef, codec.tau()) > range.hi)
      throw ProtocolError("drawn coefficient left the agreed range");
  }
  const Ciphertext s3 = two_party_respond(pk, codec, s1, codec.scale(x_t), coef, responder_rng);
  return codec.unscale(two_party_finish(requester_key, codec, s3), 2);
}

long MultiPartyGroup::eval_point(int agent) const {
  auto it = std::find(members.begin(), members.end(), agent);
  if (it == members.end()) throw ProtocolError("agent " + std::to_string(agent) + " is not in the group");
  return static_cast<long>(it - members.begin()) + 1;
}

MultiPartyGroup make_group(int holder, std::vector<int> children) {
  std::sort(children.begin(), children.end());
  MultiPartyGroup g;
  g.holder = holder;
  g.members.push_back(holder);
  g.members.insert(g.members.end(), children.begin(), children.end());
  return g;
}

OfflineResult multiparty_offline(const MultiPartyGroup& group,
                                 const std::map<int, const crypto::KeyMaterial*>& keys, unsigned tau,
                                 const mpz_class& secret_bound, std::map<int, Rng*>& rngs,
                                 const OfflineObserver& observer) {
  const int m = group.size();
  if (m < 2) throw ConfigError("multi-party group needs at least two members");
  std::vector<long> points;
  for (int a : group.members) points.push_back(group.eval_point(a));

  OfflineResult out;
  auto key_of = [&](int agent) -> const crypto::KeyMaterial& {
    auto it = keys.find(agent);
    if (it == keys.end() || !it->second) throw ProtocolIncompleteError("no key for agent " + std::to_string(agent));
    return *it->second;
  };
  auto rng_of = [&](int agent) -> Rng& {
    auto it = rngs.find(agent);
    if (it == rngs.end() || !it->second) throw ProtocolIncompleteError("no rng for agent " + std::to_string(agent));
    return *it->second;
  };

  for (int a : group.members) out.bundles[a] = sharing::make_bundle(a, m, points, secret_bound, rng_of(a));

  // Share delivery: G_i(Z_j) encrypted under j's key, decrypted by j.
  std::map<int, std::map<int, mpz_class>> received;
  for (int i : group.members) {
    const auto& bundle = out.bundles[i];
    for (int idx = 0; idx < m; ++idx) {
      const int j = group.members[idx];
      if (j == i) {
        received[j][i] = bundle.outgoing[idx];
        continue;
      }
      const auto& kj = key_of(j);
      const crypto::SignedFixedCodec codec = crypto::SignedFixedCodec::for_key(kj.public_key(), tau);
      const Ciphertext c = crypto::encrypt_scaled(kj.public_key(), codec, bundle.outgoing[idx], rng_of(i));
      if (observer) observer(i, j, "share", c);
      ++out.stats.encryptions;
      ++out.stats.messages;
      out.stats.bytes += c.byte_size();
      received[j][i] = crypto::decrypt_crt_scaled(kj, c, codec);
      ++out.stats.decryptions;
    }
  }
  for (int j : group.members) out.bundles[j].incoming_sum = sharing::sum_received_shares(received[j], group.members);

  // Share sums travel to the holder under the holder's key.
  const auto& kc = key_of(group.holder);
  const crypto::SignedFixedCodec codec_c = crypto::SignedFixedCodec::for_key(kc.public_key(), tau);
  std::vector<std::pair<long, mpz_class>> sums;
  for (int j : group.members) {
    mpz_class value = out.bundles[j].incoming_sum;
    if (j != group.holder) {
      const Ciphertext c = crypto::encrypt_scaled(kc.public_key(), codec_c, value, rng_of(j));
      if (observer) observer(j, group.holder, "share_sum", c);
      ++out.stats.encryptions;
      ++out.stats.messages;
      out.stats.bytes += c.byte_size();
      value = crypto::decrypt_crt_scaled(kc, c, codec_c);
      ++out.stats.decryptions;
    }
    sums.emplace_back(group.eval_point(j), value);
  }
  out.omega = sharing::reconstruct_omega(sums);
  out.bundles[group.holder].omega = out.omega;
  return out;
}

mpz_class multiparty_online(const MultiPartyGroup& group, const OfflineResult& offline,
                            const std::vector<sharing::MaskedValue>& masked) {
  std::vector<int> children(group.members.begin() + 1, group.members.end());
  return sharing::unmask_sum(masked, children, offline.bundles.at(group.holder).secret, offline.omega);
}

double deviation_check(double eta, double eta_prime, double r1, double r2, double q1, double q2,
                       double flow_i, double inj_i) {
  const double h = (-flow_i - inj_i) / 2.0;
  return (eta - eta_prime * r1) * (q1 + h) + (eta - eta_prime * r2) * (q2 + h);
}

}  // namespace gridveil::protocol
