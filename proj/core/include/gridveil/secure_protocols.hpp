#pragma once

#include <functional>
#include <map>
#include <string>
#include <optional>
#include <vector>

#include <gmpxx.h>

#include "gridveil/convergence.hpp"
#include "gridveil/paillier.hpp"
#include "gridveil/random.hpp"
#include "gridveil/secret_sharing.hpp"

namespace gridveil::protocol {

struct SubRange {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

/// Random closed sub-interval of the full range, at least `min_fraction` of its width.
/// Throws ConfigError when the full range is empty.
SubRange negotiate_subrange(const pdhg::FeasibleRange& full, Rng& rng, double min_fraction = 0.1);

/// [lo, hi] intersected with the full range; ConfigError if the result is empty.
SubRange clip_subrange(const pdhg::FeasibleRange& full, SubRange wanted);

/// Integer coefficient R = floor(10^tau r) with r drawn uniformly so that
/// R / 10^tau stays inside [lo, hi] and R > 0.
mpz_class draw_coefficient(const SubRange& range, unsigned tau, Rng& rng);

/// One requester/responder pair. The requester owns the key.
struct TwoPartySession {
  int requester = 0;
  int responder = 0;
  crypto::PublicKey requester_pk;
  SubRange range;
};

/// S1: the requester encrypts its own (scaled) term.
crypto::Ciphertext two_party_request(const crypto::PublicKey& pk, const crypto::SignedFixedCodec& codec,
                                     const mpz_class& x_i, Rng& rng);

/// S2 + S3: the responder encrypts its term under the requester's key, adds
/// homomorphically and raises to its coefficient.
crypto::Ciphertext two_party_respond(const crypto::PublicKey& pk, const crypto::SignedFixedCodec& codec,
                                     const crypto::Ciphertext& s1, const mpz_class& x_t,
                                     const mpz_class& coefficient, Rng& rng);

/// S4: the requester decrypts R * (X_i + X_t), an integer carrying 10^(2 tau).
mpz_class two_party_finish(const crypto::KeyMaterial& sk, const crypto::SignedFixedCodec& codec,
                           const crypto::Ciphertext& s3);

/// Whole exchange in one call; returns y = r (x_i + x_t). With `forced_r` set
/// the responder uses that coefficient instead of a draw.
double two_party_exchange(const crypto::KeyMaterial& requester_key, const crypto::SignedFixedCodec& codec,
                          const SubRange& range, double x_i, double x_t, Rng& requester_rng,
                          Rng& responder_rng, std::optional<double> forced_r = std::nullopt);

/// Holder plus children of one flow-balance row.
struct MultiPartyGroup {
  int holder = 0;
  std::vector<int> members;  // holder first, then children in ascending order
  long eval_point(int agent) const;  // 1-based position in `members`
  int size() const { return static_cast<int>(members.size()); }
};

MultiPartyGroup make_group(int holder, std::vector<int> children);

struct OfflineStats {
  std::size_t encryptions = 0;
  std::size_t decryptions = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
};

struct OfflineResult {
  std::map<int, sharing::ShareBundle> bundles;  // per member
  mpz_class omega;                              // at the holder
  OfflineStats stats;
};

/// Sees every offline ciphertext as it leaves its sender ("share" or "share_sum").
using OfflineObserver =
    std::function<void(int from, int to, const std::string& what, const crypto::Ciphertext& c)>;

/// Offline phase: each member splits a fresh secret, every share travels as a
/// ciphertext under the recipient's key, members sum what they receive and the
/// non-holders send their sums to the holder (again encrypted), which
/// interpolates Omega. `keys` and `rngs` are indexed by agent id.
OfflineResult multiparty_offline(const MultiPartyGroup& group,
                                 const std::map<int, const crypto::KeyMaterial*>& keys, unsigned tau,
                                 const mpz_class& secret_bound, std::map<int, Rng*>& rngs,
                                 const OfflineObserver& observer = {});

/// Online phase at the holder: exact sum of the children's values from their
/// masked copies.
mpz_class multiparty_online(const MultiPartyGroup& group, const OfflineResult& offline,
                            const std::vector<sharing::MaskedValue>& masked);

/// Gradient deviation when the two-party scheme is reused for a two-child
/// flow row with penalty eta' and coefficients r1, r2:
/// (eta - eta' r1)(Q1 + h) + (eta - eta' r2)(Q2 + h), h = (-Q_i - q_i) / 2.
double deviation_check(double eta, double eta_prime, double r1, double r2, double q1, double q2,
                       double flow_i, double inj_i);

}  // namespace gridveil::protocol
