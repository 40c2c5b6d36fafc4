#include "gridveil/paillier.hpp"

#include <array>

#include <nlohmann/json.hpp>

#include "gridveil/errors.hpp"
#include "gridveil/fixed_point.hpp"

namespace gridveil::crypto {

namespace {

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

mpz_class invert(const mpz_class& a, const mpz_class& mod) {
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw KeyGenerationError("value has no modular inverse");
  return out;
}

mpz_class mod_floor(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

mpz_class gcd(const mpz_class& a, const mpz_class& b) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}

// L_x(u) = (u - 1) / x
mpz_class ell(const mpz_class& u, const mpz_class& x) { return (u - 1) / x; }

constexpr std::array<unsigned, 24> kSmallPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                  41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

mpz_class random_prime(unsigned bits, Rng& rng) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    mpz_class c = rng.random_bits(bits);
    // Top two bits set so that the product of two such primes has exactly 2*bits bits.
    mpz_setbit(c.get_mpz_t(), bits - 1);
    if (bits >= 2) mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (is_probable_prime(c, rng)) return c;
  }
  throw KeyGenerationError("prime generation exhausted its retries for " + std::to_string(bits) +
                           " bits");
}

mpz_class parse_mpz(const nlohmann::json& v, const char* field) {
  if (!v.contains(field) || !v[field].is_string())
    throw ConfigError(std::string("missing decimal-string field '") + field + "'");
  mpz_class out;
  if (out.set_str(v[field].get<std::string>(), 10) != 0)
    throw ConfigError(std::string("field '") + field + "' is not a decimal integer");
  return out;
}

}  // namespace

bool is_probable_prime(const mpz_class& candidate, Rng& rng, int rounds) {
  if (candidate < 2) return false;
  for (unsigned sp : kSmallPrimes) {
    if (candidate == sp) return true;
    if (mpz_divisible_ui_p(candidate.get_mpz_t(), sp)) return false;
  }
  mpz_class d = candidate - 1;
  unsigned s = 0;
  while (mpz_even_p(d.get_mpz_t())) {
    d >>= 1;
    ++s;
  }
  const mpz_class nm1 = candidate - 1;
  const mpz_class span = candidate - 3;  // bases in [2, n-2]
  for (int round = 0; round < rounds; ++round) {
    mpz_class a = rng.below(span) + 2;
    mpz_class x = powm(a, d, candidate);
    if (x == 1 || x == nm1) continue;
    bool witness = true;
    for (unsigned i = 1; i < s; ++i) {
      x = x * x % candidate;
      if (x == nm1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

KeyMaterial key_from_primes(const mpz_class& p, const mpz_class& q) {
  if (p == q) throw KeyGenerationError("p and q must be distinct");
  if (p < 3 || q < 3) throw KeyGenerationError("primes must be odd");
  KeyMaterial k;
  k.p = p;
  k.q = q;
  k.n = p * q;
  k.g = k.n + 1;
  k.pi = (p - 1) * (q - 1);
  if (gcd(k.n, k.pi) != 1) throw KeyGenerationError("gcd(pq, (p-1)(q-1)) != 1");
  k.theta = invert(k.pi, k.n);
  k.p_squared = p * p;
  k.q_squared = q * q;
  k.n_squared = k.n * k.n;
  k.gamma_p = invert(ell(powm(k.g, p - 1, k.p_squared), p), p);
  k.gamma_q = invert(ell(powm(k.g, q - 1, k.q_squared), q), q);
  k.q_inv_mod_p = invert(q, p);
  k.key_bits = static_cast<unsigned>(mpz_sizeinbase(k.n.get_mpz_t(), 2));
  return k;
}

KeyMaterial keygen(unsigned key_bits, Rng& rng) {
  if (key_bits < 16 || key_bits > 4096)
    throw KeyGenerationError("key_bits must lie in [16, 4096], got " + std::to_string(key_bits));
  const unsigned p_bits = key_bits / 2;
  const unsigned q_bits = key_bits - p_bits;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    mpz_class p = random_prime(p_bits, rng);
    mpz_class q = random_prime(q_bits, rng);
    if (p == q) continue;
    if (gcd(p * q, (p - 1) * (q - 1)) != 1) continue;
    KeyMaterial k = key_from_primes(p, q);
    if (k.key_bits == key_bits) return k;
  }
  throw KeyGenerationError("could not find a prime pair for " + std::to_string(key_bits) + " bits");
}

SignedFixedCodec::SignedFixedCodec(unsigned tau, mpz_class z_star)
    : tau_(tau), z_star_(std::move(z_star)) {
  if (z_star_ < 3) throw ConfigError("Z* must be at least 3");
}

mpz_class SignedFixedCodec::max_magnitude() const {
  mpz_class third;
  mpz_cdiv_q_ui(third.get_mpz_t(), z_star_.get_mpz_t(), 3);
  return third;
}

mpz_class SignedFixedCodec::scale(double d) const {
  mpz_class scaled = scale_decimal(d, tau_);
  if (abs(scaled) * 3 >= z_star_)
    throw EncodingOverflowError("plaintext " + shortest_decimal(d) + " exceeds Z*/3 after scaling");
  return scaled;
}

mpz_class SignedFixedCodec::to_domain(const mpz_class& scaled) const {
  if (abs(scaled) * 3 >= z_star_) throw EncodingOverflowError("scaled plaintext exceeds Z*/3");
  return scaled >= 0 ? scaled : scaled + z_star_;
}

mpz_class SignedFixedCodec::from_domain(const mpz_class& domain_value) const {
  const mpz_class v = mod_floor(domain_value, z_star_);
  if (v * 3 < z_star_) return v;
  if (v * 3 > 2 * z_star_) return v - z_star_;
  throw ArithmeticOverflowError("decrypted value falls in the reserved middle interval");
}

double SignedFixedCodec::unscale(const mpz_class& scaled, int scale_exp) const {
  return gridveil::unscale(scaled, tau_ * static_cast<unsigned>(scale_exp));
}

std::size_t Ciphertext::byte_size() const {
  return (mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8;
}

mpz_class draw_blinding(const PublicKey& pk, Rng& rng) {
  for (;;) {
    mpz_class r = rng.below(pk.n);
    if (r != 0 && gcd(r, pk.n) == 1) return r;
  }
}

Ciphertext encrypt_scaled(const PublicKey& pk, const SignedFixedCodec& codec,
                          const mpz_class& scaled, const mpz_class& blinding) {
  const mpz_class d_star = codec.to_domain(scaled);
  const mpz_class head = (1 + pk.n * d_star) % pk.n_squared;
  return {head * powm(blinding, pk.n, pk.n_squared) % pk.n_squared, 1};
}

Ciphertext encrypt_scaled(const PublicKey& pk, const SignedFixedCodec& codec,
                          const mpz_class& scaled, Rng& rng) {
  return encrypt_scaled(pk, codec, scaled, draw_blinding(pk, rng));
}

Ciphertext encrypt(const PublicKey& pk, const SignedFixedCodec& codec, double d, Rng& rng) {
  return encrypt_scaled(pk, codec, codec.scale(d), rng);
}

mpz_class crt_residue(const KeyMaterial& sk, const mpz_class& c) {
  const mpz_class ep = ell(powm(c, sk.p - 1, sk.p_squared), sk.p) * sk.gamma_p % sk.p;
  const mpz_class eq = ell(powm(c, sk.q - 1, sk.q_squared), sk.q) * sk.gamma_q % sk.q;
  return eq + mod_floor(sk.q_inv_mod_p * (ep - eq), sk.p) * sk.q;
}

mpz_class standard_residue(const KeyMaterial& sk, const mpz_class& c) {
  return ell(powm(c, sk.pi, sk.n_squared), sk.n) * sk.theta % sk.n;
}

namespace {
void check_range(const KeyMaterial& sk, const Ciphertext& e) {
  if (e.value < 0 || e.value >= sk.n_squared) throw ProtocolError("ciphertext outside Z_{n^2}");
  if (e.scale_exp != 1 && e.scale_exp != 2) throw ProtocolError("scale_exp must be 1 or 2");
}
}  // namespace

mpz_class decrypt_crt_scaled(const KeyMaterial& sk, const Ciphertext& e,
                             const SignedFixedCodec& codec) {
  check_range(sk, e);
  return codec.from_domain(crt_residue(sk, e.value));
}

mpz_class decrypt_standard_scaled(const KeyMaterial& sk, const Ciphertext& e,
                                  const SignedFixedCodec& codec) {
  check_range(sk, e);
  return codec.from_domain(standard_residue(sk, e.value));
}

double decrypt_crt(const KeyMaterial& sk, const Ciphertext& e, const SignedFixedCodec& codec) {
  return codec.unscale(decrypt_crt_scaled(sk, e, codec), e.scale_exp);
}

double decrypt_standard(const KeyMaterial& sk, const Ciphertext& e,
                        const SignedFixedCodec& codec) {
  return codec.unscale(decrypt_standard_scaled(sk, e, codec), e.scale_exp);
}

Ciphertext hom_add(const Ciphertext& e1, const Ciphertext& e2, const PublicKey& pk) {
  if (e1.scale_exp != e2.scale_exp)
    throw ProtocolError("hom_add: operands carry different scales");
  return {e1.value * e2.value % pk.n_squared, e1.scale_exp};
}

Ciphertext hom_scalar_mul_scaled(const Ciphertext& e, const mpz_class& scaled_scalar,
                                 const PublicKey& pk) {
  if (e.scale_exp != 1) throw ProtocolError("hom_scalar_mul: ciphertext already carries a product");
  // A negative exponent is taken modulo n; (1+n)^(Dn) = 1 mod n^2 so the
  // plaintext becomes D*S mod n.
  const mpz_class exponent = mod_floor(scaled_scalar, pk.n);
  return {powm(e.value, exponent, pk.n_squared), 2};
}

Ciphertext hom_scalar_mul(const Ciphertext& e, double s, const SignedFixedCodec& codec,
                          const PublicKey& pk) {
  return hom_scalar_mul_scaled(e, codec.scale(s), pk);
}

std::string key_to_json(const KeyMaterial& key) {
  nlohmann::json j;
  j["p"] = key.p.get_str();
  j["q"] = key.q.get_str();
  j["n"] = key.n.get_str();
  j["key_bits"] = key.key_bits;
  return j.dump();
}

KeyMaterial key_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  KeyMaterial k = key_from_primes(parse_mpz(j, "p"), parse_mpz(j, "q"));
  if (k.n != parse_mpz(j, "n")) throw ConfigError("key document: n != p*q");
  if (j.contains("key_bits") && j["key_bits"].get<unsigned>() != k.key_bits)
    throw ConfigError("key document: key_bits does not match n");
  return k;
}

std::string ciphertext_to_json(const Ciphertext& e) {
  nlohmann::json j;
  j["value"] = e.value.get_str();
  j["scale_exp"] = e.scale_exp;
  return j.dump();
}

Ciphertext ciphertext_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Ciphertext e{parse_mpz(j, "value"), j.at("scale_exp").get<int>()};
  if (e.scale_exp != 1 && e.scale_exp != 2) throw ConfigError("scale_exp must be 1 or 2");
  return e;
}

}  // namespace gridveil::crypto
