#include <map>

#include <benchmark/benchmark.h>

#include "gridveil/paillier.hpp"
#include "gridveil/secret_sharing.hpp"

using namespace gridveil;

namespace {

struct Fixture {
  crypto::KeyMaterial key;
  crypto::SignedFixedCodec codec;
  crypto::Ciphertext sample;
  Rng rng;
};

// Keys are expensive at 2048 bits; generate each size once.
Fixture& fixture(unsigned bits) {
  static std::map<unsigned, Fixture> cache;
  auto it = cache.find(bits);
  if (it == cache.end()) {
    Rng rng(bits);
    auto key = crypto::keygen(bits, rng);
    auto codec = crypto::SignedFixedCodec::for_key(key.public_key(), 4);
    auto sample = crypto::encrypt(key.public_key(), codec, -123.4567, rng);
    it = cache.emplace(bits, Fixture{std::move(key), codec, sample, Rng(bits + 1)}).first;
  }
  return it->second;
}

void BM_Encrypt(benchmark::State& st) {
  auto& f = fixture(st.range(0));
  const auto pk = f.key.public_key();
  for (auto _ : st) benchmark::DoNotOptimize(crypto::encrypt(pk, f.codec, 42.4242, f.rng));
}

void BM_DecryptCrt(benchmark::State& st) {
  auto& f = fixture(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(crypto::decrypt_crt_scaled(f.key, f.sample, f.codec));
}

void BM_DecryptStandard(benchmark::State& st) {
  auto& f = fixture(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(crypto::decrypt_standard_scaled(f.key, f.sample, f.codec));
}

void BM_HomAdd(benchmark::State& st) {
  auto& f = fixture(st.range(0));
  const auto pk = f.key.public_key();
  for (auto _ : st) benchmark::DoNotOptimize(crypto::hom_add(f.sample, f.sample, pk));
}

void BM_HomScalarMul(benchmark::State& st) {
  auto& f = fixture(st.range(0));
  const auto pk = f.key.public_key();
  for (auto _ : st) benchmark::DoNotOptimize(crypto::hom_scalar_mul(f.sample, 1.2345, f.codec, pk));
}

void BM_Keygen(benchmark::State& st) {
  Rng rng(99);
  for (auto _ : st) benchmark::DoNotOptimize(crypto::keygen(st.range(0), rng));
}

void BM_ShareRoundTrip(benchmark::State& st) {
  const int m = st.range(0);
  Rng rng(5);
  std::vector<long> z;
  std::vector<int> senders;
  for (int i = 1; i <= m; ++i) {
    z.push_back(i);
    senders.push_back(i - 1);
  }
  for (auto _ : st) {
    std::vector<sharing::ShareBundle> b;
    for (int i = 0; i < m; ++i) b.push_back(sharing::make_bundle(i, m, z, 10000000000, rng));
    std::vector<std::pair<long, mpz_class>> sums;
    for (int j = 0; j < m; ++j) {
      std::map<int, mpz_class> in;
      for (int i = 0; i < m; ++i) in[i] = b[i].outgoing[j];
      sums.emplace_back(z[j], sharing::sum_received_shares(in, senders));
    }
    benchmark::DoNotOptimize(sharing::reconstruct_omega(sums));
  }
}

}  // namespace

#define KEY_SIZES Arg(128)->Arg(512)->Arg(1024)->Arg(2048)->Unit(benchmark::kMicrosecond)

BENCHMARK(BM_Encrypt)->KEY_SIZES;
BENCHMARK(BM_DecryptCrt)->KEY_SIZES;
BENCHMARK(BM_DecryptStandard)->KEY_SIZES;
BENCHMARK(BM_HomAdd)->KEY_SIZES;
BENCHMARK(BM_HomScalarMul)->KEY_SIZES;
BENCHMARK(BM_Keygen)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShareRoundTrip)->DenseRange(2, 10, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
