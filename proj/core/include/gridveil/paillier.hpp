#pragma once

#include <string>

#include <gmpxx.h>

#include "gridveil/random.hpp"

namespace gridveil::crypto {

/// Public half of a key: modulus n, generator n + 1 and the cached n^2.
struct PublicKey {
  mpz_class n;
  mpz_class g;
  mpz_class n_squared;
  unsigned key_bits = 0;
};

/// Full CRT-Paillier key. Everything beyond p and q is derived once at
/// construction and reused by every decryption.
struct KeyMaterial {
  mpz_class p;
  mpz_class q;
  mpz_class n;
  mpz_class g;            // n + 1
  mpz_class pi;           // (p - 1)(q - 1)
  mpz_class theta;        // pi^-1 mod n
  mpz_class gamma_p;      // [L_p((n+1)^(p-1) mod p^2)]^-1 mod p
  mpz_class gamma_q;      // [L_q((n+1)^(q-1) mod q^2)]^-1 mod q
  mpz_class q_inv_mod_p;  // CRT recombination coefficient
  mpz_class p_squared;
  mpz_class q_squared;
  mpz_class n_squared;
  unsigned key_bits = 0;

  PublicKey public_key() const { return {n, g, n_squared, key_bits}; }
};

/// Builds the derived fields for a given prime pair. Throws KeyGenerationError
/// when p == q or gcd(pq, (p-1)(q-1)) != 1.
KeyMaterial key_from_primes(const mpz_class& p, const mpz_class& q);

/// Miller-Rabin with bases drawn from `rng`.
bool is_probable_prime(const mpz_class& candidate, Rng& rng, int rounds = 40);

/// Generates a key whose modulus has exactly `key_bits` bits (16..4096).
KeyMaterial keygen(unsigned key_bits, Rng& rng);

/// Signed fixed-point codec over the three-interval domain (0, Z*].
///
/// Values with tau fraction digits are scaled by 10^tau and truncated. The
/// lower third of the domain holds non-negative integers, the upper third
/// holds negatives shifted by Z*, and the middle third is reserved so that
/// homomorphic overflow is detected instead of wrapping silently.
class SignedFixedCodec {
 public:
  SignedFixedCodec(unsigned tau, mpz_class z_star);

  /// Codec for a public key with Z* := n.
  static SignedFixedCodec for_key(const PublicKey& pk, unsigned tau) { return {tau, pk.n}; }

  unsigned tau() const { return tau_; }
  const mpz_class& z_star() const { return z_star_; }

  /// floor(10^tau d) as a signed integer; throws EncodingOverflowError when
  /// the magnitude reaches Z*/3.
  mpz_class scale(double d) const;

  /// Signed integer -> domain element D* in [0, Z*).
  mpz_class to_domain(const mpz_class& scaled) const;

  /// Domain element -> signed integer; throws ArithmeticOverflowError for the middle third.
  mpz_class from_domain(const mpz_class& domain_value) const;

  /// Signed integer carrying `scale_exp` factors of 10^tau -> double.
  double unscale(const mpz_class& scaled, int scale_exp) const;

  /// Largest encodable magnitude (exclusive) after scaling.
  mpz_class max_magnitude() const;

 private:
  unsigned tau_;
  mpz_class z_star_;
};

struct Ciphertext {
  mpz_class value;
  int scale_exp = 1;

  /// Size of the serialized value in bytes (used for transcript accounting).
  std::size_t byte_size() const;
};

/// Draws r in Z*_n with gcd(r, n) = 1.
mpz_class draw_blinding(const PublicKey& pk, Rng& rng);

/// (1 + n D*) r^n mod n^2 for an already-scaled signed integer D.
Ciphertext encrypt_scaled(const PublicKey& pk, const SignedFixedCodec& codec,
                          const mpz_class& scaled, const mpz_class& blinding);
Ciphertext encrypt_scaled(const PublicKey& pk, const SignedFixedCodec& codec,
                          const mpz_class& scaled, Rng& rng);

Ciphertext encrypt(const PublicKey& pk, const SignedFixedCodec& codec, double d, Rng& rng);

/// CRT decryption to the signed scaled integer (no division by 10^tau).
mpz_class decrypt_crt_scaled(const KeyMaterial& sk, const Ciphertext& e,
                             const SignedFixedCodec& codec);
/// Standard decryption L(e^pi mod n^2) * theta mod n, to the signed scaled integer.
mpz_class decrypt_standard_scaled(const KeyMaterial& sk, const Ciphertext& e,
                                  const SignedFixedCodec& codec);

double decrypt_crt(const KeyMaterial& sk, const Ciphertext& e, const SignedFixedCodec& codec);
double decrypt_standard(const KeyMaterial& sk, const Ciphertext& e,
                        const SignedFixedCodec& codec);

/// Raw residues (before the signed mapping), used by benchmarks and tests.
mpz_class crt_residue(const KeyMaterial& sk, const mpz_class& ciphertext);
mpz_class standard_residue(const KeyMaterial& sk, const mpz_class& ciphertext);

/// Enc(d1) * Enc(d2) mod n^2. Both operands must carry the same scale.
Ciphertext hom_add(const Ciphertext& e1, const Ciphertext& e2, const PublicKey& pk);

/// Enc(d)^S mod n^2 with S = floor(10^tau s); the result carries scale_exp 2.
/// Negative scalars are mapped through the signed encoding of the exponent.
Ciphertext hom_scalar_mul(const Ciphertext& e, double s, const SignedFixedCodec& codec,
                          const PublicKey& pk);
Ciphertext hom_scalar_mul_scaled(const Ciphertext& e, const mpz_class& scaled_scalar,
                                 const PublicKey& pk);

/// {"p", "q", "n", "key_bits"} with decimal-string integers.
std::string key_to_json(const KeyMaterial& key);
KeyMaterial key_from_json(const std::string& text);

/// {"value": decimal string, "scale_exp": int}
std::string ciphertext_to_json(const Ciphertext& e);
Ciphertext ciphertext_from_json(const std::string& text);

}  // namespace gridveil::crypto
