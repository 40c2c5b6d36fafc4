#include "doctest.h"

#include <cmath>

#include "gridveil/errors.hpp"
#include "gridveil/fixed_point.hpp"
#include "gridveil/paillier.hpp"

using namespace gridveil;
using namespace gridveil::crypto;

namespace {

mpz_class powm(const mpz_class& b, const mpz_class& e, const mpz_class& m) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

// Inverse by brute force, independent of gmp's mpz_invert.
long slow_inverse(long a, long m) {
  for (long x = 1; x < m; ++x)
    if ((a * x) % m == 1) return x;
  return -1;
}

}  // namespace

TEST_CASE("toy key p=5 q=7") {
  const KeyMaterial k = key_from_primes(5, 7);
  CHECK(k.n == 35);
  CHECK(k.n_squared == 1225);
  CHECK(k.g == 36);
  CHECK(k.pi == 24);
  CHECK(k.theta == 19);
  CHECK(k.theta == slow_inverse(24, 35));
  CHECK(k.q_inv_mod_p == slow_inverse(7, 5));
}

TEST_CASE("bad prime pairs are rejected") {
  CHECK_THROWS_AS(key_from_primes(7, 7), KeyGenerationError);
  // p = 3, q = 7: gcd(21, 2 * 6) = 3
  CHECK_THROWS_AS(key_from_primes(3, 7), KeyGenerationError);
}

TEST_CASE("toy encryption against direct modular evaluation") {
  const KeyMaterial k = key_from_primes(5, 7);
  const PublicKey pk = k.public_key();
  const SignedFixedCodec codec(0, pk.n);

  const Ciphertext e = encrypt_scaled(pk, codec, 3, mpz_class(2));
  const mpz_class expect = (mpz_class(1 + 35 * 3) * powm(2, 35, 1225)) % 1225;
  CHECK(e.value == expect);
  CHECK(e.scale_exp == 1);
  CHECK(decrypt_crt_scaled(k, e, codec) == 3);
  CHECK(decrypt_standard_scaled(k, e, codec) == 3);
}

TEST_CASE("toy homomorphic add and scalar product") {
  const KeyMaterial k = key_from_primes(5, 7);
  const PublicKey pk = k.public_key();
  const SignedFixedCodec codec(0, pk.n);

  const Ciphertext e3 = encrypt_scaled(pk, codec, 3, mpz_class(2));
  const Ciphertext e4 = encrypt_scaled(pk, codec, 4, mpz_class(3));
  const Ciphertext sum = hom_add(e3, e4, pk);
  CHECK(sum.value == (e3.value * e4.value) % 1225);
  CHECK(decrypt_crt_scaled(k, sum, codec) == 7);

  const Ciphertext prod = hom_scalar_mul_scaled(e3, 4, pk);
  CHECK(prod.value == powm(e3.value, 4, 1225));
  CHECK(prod.scale_exp == 2);
  // 12 is a valid residue, but with Z* = 35 it sits in the reserved middle third.
  CHECK(crt_residue(k, prod.value) == 12);
  CHECK(standard_residue(k, prod.value) == 12);
  CHECK_THROWS_AS(decrypt_crt_scaled(k, prod, codec), ArithmeticOverflowError);
}

TEST_CASE("three-interval codec") {
  const SignedFixedCodec codec(4, mpz_class(3000000));
  CHECK(codec.scale(-1.5) == -15000);
  CHECK(codec.to_domain(-15000) == 3000000 - 15000);
  CHECK(codec.from_domain(3000000 - 15000) == -15000);
  CHECK(codec.from_domain(999999) == 999999);
  CHECK_THROWS_AS(codec.from_domain(1000001), ArithmeticOverflowError);
  CHECK_THROWS_AS(codec.from_domain(1999999), ArithmeticOverflowError);
  CHECK(codec.from_domain(2000001) == -999999);
  CHECK_THROWS_AS(codec.scale(100.0), EncodingOverflowError);
  CHECK(codec.unscale(mpz_class(-15000), 1) == -1.5);
  CHECK(codec.unscale(mpz_class(15000000), 2) == 0.15);
}

TEST_CASE("keygen at 128 bits") {
  Rng rng(11);
  const KeyMaterial k = keygen(128, rng);
  CHECK(mpz_sizeinbase(k.n.get_mpz_t(), 2) == 128);
  CHECK(k.p != k.q);
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), k.n.get_mpz_t(), k.pi.get_mpz_t());
  CHECK(g == 1);
  CHECK(k.n == k.p * k.q);
  CHECK(k.pi == (k.p - 1) * (k.q - 1));
  CHECK((k.theta * k.pi) % k.n == 1);

  Rng again(11);
  const KeyMaterial k2 = keygen(128, again);
  CHECK(k2.p == k.p);
  CHECK(k2.q == k.q);
}

TEST_CASE("Miller-Rabin") {
  Rng rng(3);
  CHECK(is_probable_prime(2, rng));
  CHECK(is_probable_prime(104729, rng));
  CHECK_FALSE(is_probable_prime(1, rng));
  CHECK_FALSE(is_probable_prime(561, rng));  // Carmichael
  CHECK_FALSE(is_probable_prime(mpz_class(104729) * 104723, rng));
  CHECK(is_probable_prime(mpz_class("170141183460469231731687303715884105727"), rng));
}

TEST_CASE("round trips at tau = 4") {
  Rng rng(5);
  const KeyMaterial k = keygen(128, rng);
  const PublicKey pk = k.public_key();
  const auto codec = SignedFixedCodec::for_key(pk, 4);
  for (double d : {-9.9999, 0.0001, 123.4567, 0.0, -1.5}) {
    const Ciphertext e = encrypt(pk, codec, d, rng);
    CHECK(decrypt_crt(k, e, codec) == d);
    CHECK(decrypt_standard(k, e, codec) == d);
  }
}

TEST_CASE("CRT and standard agree on 1000 random plaintexts") {
  Rng rng(6);
  const KeyMaterial k = keygen(128, rng);
  const PublicKey pk = k.public_key();
  const auto codec = SignedFixedCodec::for_key(pk, 4);
  const mpz_class bound = codec.max_magnitude();
  for (int t = 0; t < 1000; ++t) {
    const mpz_class d = rng.below(2 * bound - 1) - (bound - 1);
    const Ciphertext e = encrypt_scaled(pk, codec, d, rng);
    REQUIRE(decrypt_crt_scaled(k, e, codec) == d);
    REQUIRE(decrypt_standard_scaled(k, e, codec) == d);
    REQUIRE(crt_residue(k, e.value) == standard_residue(k, e.value));
  }
}

TEST_CASE("homomorphic examples") {
  Rng rng(8);
  const KeyMaterial k = keygen(128, rng);
  const PublicKey pk = k.public_key();
  const auto codec = SignedFixedCodec::for_key(pk, 4);

  CHECK(decrypt_crt(k, hom_add(encrypt(pk, codec, 2.5, rng), encrypt(pk, codec, -1.0, rng), pk), codec) == 1.5);
  CHECK(decrypt_crt(k, hom_add(encrypt(pk, codec, 7.25, rng), encrypt(pk, codec, 0.0, rng), pk), codec) == 7.25);
  CHECK(decrypt_crt(k, hom_scalar_mul(encrypt(pk, codec, 2.0, rng), 1.0, codec, pk), codec) == 2.0);
  CHECK(decrypt_crt(k, hom_scalar_mul(encrypt(pk, codec, -3.0, rng), 0.5, codec, pk), codec) == -1.5);
  // negative scalar through the signed exponent
  CHECK(decrypt_crt(k, hom_scalar_mul(encrypt(pk, codec, 2.0, rng), -0.25, codec, pk), codec) == -0.5);

  Ciphertext a = encrypt(pk, codec, 1.0, rng);
  Ciphertext b = hom_scalar_mul(a, 1.0, codec, pk);
  CHECK_THROWS_AS(hom_add(a, b, pk), ProtocolError);
}

TEST_CASE("homomorphic overflow is detected, not wrapped") {
  Rng rng(9);
  const KeyMaterial k = keygen(64, rng);
  const PublicKey pk = k.public_key();
  const auto codec = SignedFixedCodec::for_key(pk, 0);
  const mpz_class big = codec.max_magnitude() - 1;
  const Ciphertext e = hom_add(encrypt_scaled(pk, codec, big, rng), encrypt_scaled(pk, codec, big, rng), pk);
  CHECK_THROWS_AS(decrypt_crt_scaled(k, e, codec), ArithmeticOverflowError);
  CHECK_THROWS_AS(decrypt_standard_scaled(k, e, codec), ArithmeticOverflowError);
}

TEST_CASE("fresh blinding gives distinct ciphertexts") {
  Rng rng(10);
  const KeyMaterial k = keygen(128, rng);
  const PublicKey pk = k.public_key();
  const auto codec = SignedFixedCodec::for_key(pk, 4);
  const Ciphertext a = encrypt(pk, codec, 3.0, rng);
  const Ciphertext b = encrypt(pk, codec, 3.0, rng);
  CHECK(a.value != b.value);
  CHECK(a.value < pk.n_squared);
}

TEST_CASE("serialization") {
  Rng rng(12);
  const KeyMaterial k = keygen(128, rng);
  const KeyMaterial back = key_from_json(key_to_json(k));
  CHECK(back.n == k.n);
  CHECK(back.theta == k.theta);
  CHECK(back.gamma_p == k.gamma_p);

  const auto codec = SignedFixedCodec::for_key(k.public_key(), 4);
  const Ciphertext e = hom_scalar_mul(encrypt(k.public_key(), codec, 1.25, rng), 2.0, codec, k.public_key());
  const Ciphertext e2 = ciphertext_from_json(ciphertext_to_json(e));
  CHECK(e2.value == e.value);
  CHECK(e2.scale_exp == 2);
  CHECK(decrypt_crt(k, e2, codec) == 2.5);
}
