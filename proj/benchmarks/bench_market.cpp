#include <string>

#include <benchmark/benchmark.h>

#include "gridveil/grid_case.hpp"
#include "gridveil/market_engine.hpp"

using namespace gridveil;

namespace {

const std::string kCases = std::string(GRIDVEIL_DATA_DIR) + "/cases/";

// Fixed number of rounds per run, so plaintext and secure costs compare per round.
void run_rounds(benchmark::State& st, const char* file, harness::Mode mode) {
  const grid::GridCase gc = grid::load_case(kCases + file);
  harness::RunConfig cfg;
  cfg.mode = mode;
  cfg.max_iters = static_cast<int>(st.range(0));
  cfg.tol = 1e-300;
  for (auto _ : st) benchmark::DoNotOptimize(harness::run_market(gc, cfg).iterations);
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_PlaintextRounds15(benchmark::State& st) { run_rounds(st, "ieee15.json", harness::Mode::PlaintextP3); }
void BM_SecureRounds15(benchmark::State& st) { run_rounds(st, "ieee15.json", harness::Mode::Secure); }
void BM_SecureRounds34(benchmark::State& st) { run_rounds(st, "tree34.json", harness::Mode::Secure); }

}  // namespace

BENCHMARK(BM_PlaintextRounds15)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SecureRounds15)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SecureRounds34)->Arg(20)->Unit(benchmark::kMillisecond);
