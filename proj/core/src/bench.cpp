#include "gridveil/bench.hpp"

#include <chrono>
#include <sstream>

#include "gridveil/market_engine.hpp"
#include "gridveil/paillier.hpp"

namespace gridveil::harness {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double mean_us(int ops, F&& f) {
  f(0);  // warm-up
  const auto t0 = Clock::now();
  for (int i = 0; i < ops; ++i) f(i);
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count() / ops;
}

}  // namespace

std::vector<BenchRow> bench_crypto(const std::vector<unsigned>& key_bits, int ops, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  Rng rng(seed);
  for (unsigned bits : key_bits) {
    const auto key = crypto::keygen(bits, rng);
    const auto pk = key.public_key();
    const auto codec = crypto::SignedFixedCodec::for_key(pk, 4);
    std::vector<crypto::Ciphertext> cts;
    for (int i = 0; i <= ops; ++i) cts.push_back(crypto::encrypt(pk, codec, rng.uniform(-1e3, 1e3), rng));
    const mpz_class scalar = codec.scale(1.2345);

    volatile std::size_t sink = 0;
    const double enc = mean_us(ops, [&](int) { sink = sink + crypto::encrypt(pk, codec, 12.5, rng).value.get_ui(); });
    const double crt = mean_us(ops, [&](int i) { sink = sink + crypto::decrypt_crt_scaled(key, cts[i], codec).get_si(); });
    const double std_ = mean_us(ops, [&](int i) { sink = sink + crypto::decrypt_standard_scaled(key, cts[i], codec).get_si(); });
    const double add = mean_us(ops, [&](int i) { sink = sink + crypto::hom_add(cts[i], cts[i + 1], pk).value.get_ui(); });
    const double mul =
        mean_us(ops, [&](int i) { sink = sink + crypto::hom_scalar_mul_scaled(cts[i], scalar, pk).value.get_ui(); });
    rows.push_back({"encrypt", bits, enc, 0.0});
    rows.push_back({"decrypt_standard", bits, std_, 0.0});
    rows.push_back({"decrypt_crt", bits, crt, std_ / crt});
    rows.push_back({"hom_add", bits, add, 0.0});
    rows.push_back({"hom_scalar_mul", bits, mul, 0.0});
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "op,key_bits,mean_us,speedup\n";
  for (const auto& r : rows) {
    os << r.op << ',' << r.key_bits << ',' << r.mean_us << ',';
    if (r.speedup > 0.0) os << r.speedup;
    os << '\n';
  }
  return os.str();
}

ScalingRow scaling_run(const grid::GridCase& gc, int rounds, unsigned key_bits, unsigned tau, std::uint64_t seed) {
  RunConfig cfg;
  cfg.mode = Mode::Secure;
  cfg.key_bits = key_bits;
  cfg.tau = tau;
  cfg.seed = seed;
  cfg.max_iters = rounds;
  cfg.tol = 1e-300;
  const RunResult r = run_market(gc, cfg);
  ScalingRow row;
  row.case_name = gc.name;
  row.agents = gc.agent_count();
  for (int i = 1; i <= gc.agent_count(); ++i)
    if (gc.children[i].size() >= 2) ++row.groups;
  row.rounds = r.iterations;
  row.keygen_ms = r.keygen_ms;
  row.offline_ms = r.offline_ms;
  CryptoCost total;
  for (const auto& c : r.crypto) total.add(c);
  const double denom = static_cast<double>(row.agents) * std::max(1, row.rounds);
  row.online_us_per_agent_iter = total.total_us() / denom;
  row.modexps_per_agent_iter = static_cast<double>(total.modexps) / denom;
  return row;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::ostringstream os;
  os << "case,agents,groups,rounds,keygen_ms,offline_ms,online_us_per_agent_iter,modexps_per_agent_iter\n";
  for (const auto& r : rows)
    os << r.case_name << ',' << r.agents << ',' << r.groups << ',' << r.rounds << ',' << r.keygen_ms << ','
       << r.offline_ms << ',' << r.online_us_per_agent_iter << ',' << r.modexps_per_agent_iter << '\n';
  return os.str();
}

}  // namespace gridveil::harness
