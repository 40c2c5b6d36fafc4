#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridveil/adversary.hpp"
#include "gridveil/bench.hpp"
#include "gridveil/case_generator.hpp"
#include "gridveil/errors.hpp"
#include "gridveil/grid_case.hpp"
#include "gridveil/market_engine.hpp"

namespace fs = std::filesystem;
using namespace gridveil;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitDiverged = 2;
constexpr int kExitConfig = 3;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

int cmd_run(const std::string& case_path, const std::string& mode, unsigned key_bits, unsigned tau, double tol,
            std::uint64_t seed, int max_iters, int threads, const std::string& transcript,
            const std::string& trace_path, const std::string& summary_path, double fixed_r) {
  const grid::GridCase gc = grid::load_case(case_path);
  harness::RunConfig cfg;
  cfg.case_path = case_path;
  cfg.mode = harness::mode_from_name(mode);
  cfg.key_bits = key_bits;
  cfg.tau = tau;
  cfg.tol = tol;
  cfg.seed = seed;
  cfg.max_iters = max_iters;
  cfg.threads = threads;
  cfg.transcript_path = transcript;
  if (fixed_r > 0.0) cfg.fixed_r = fixed_r;
  const auto result = harness::run_market(gc, cfg);
  const std::string summary = harness::summary_json(result);
  std::cout << summary << '\n';
  if (!summary_path.empty()) write_file(summary_path, summary + "\n");
  if (!trace_path.empty()) write_file(trace_path, harness::trace_csv(result));
  if (result.diverged || !result.converged) {
    std::cerr << "gridveil: " << result.diagnostic << '\n';
    return kExitDiverged;
  }
  return kExitConverged;
}

int cmd_generate(const std::string& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  auto put = [&](const std::string& file, const grid::GridCase& gc) {
    write_file((fs::path(dir) / file).string(), grid::case_to_json(gc) + "\n");
  };
  put("toy3.json", grid::three_bus_case());
  put("ieee15.json", grid::fifteen_bus_case(seed));
  for (int n : {34, 69, 94, 141}) put("tree" + std::to_string(n) + ".json", grid::random_tree_case(n, seed + n));
  put("inactive4.json", grid::inactive_case(4));
  return 0;
}

std::vector<unsigned> parse_bits(const std::string& list) {
  std::vector<unsigned> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(static_cast<unsigned>(std::stoul(item)));
  if (out.empty()) throw ConfigError("no key sizes given");
  return out;
}

int cmd_scaling(const std::string& dir, int rounds, unsigned key_bits, unsigned tau, std::uint64_t seed) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::vector<std::pair<int, grid::GridCase>> cases;
  for (const auto& f : files) {
    grid::GridCase gc = grid::load_case(f.string());
    const auto part = grid::classify_agents(gc);
    if (part.buyers.empty() || part.sellers.empty()) continue;  // nothing to secure
    cases.emplace_back(gc.agent_count(), std::move(gc));
  }
  std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<harness::ScalingRow> rows;
  for (const auto& [n, gc] : cases) rows.push_back(harness::scaling_run(gc, rounds, key_bits, tau, seed));
  std::cout << harness::scaling_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridveil: privacy-preserving peer-to-peer energy market"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one market clearing");
  std::string case_path, mode = "plaintext-p3", transcript, trace_path, summary_path;
  unsigned key_bits = 128, tau = 4;
  double tol = 1e-4, fixed_r = 0.0;
  std::uint64_t seed = 1;
  int max_iters = 20000, threads = 1;
  run->add_option("--case", case_path, "case JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "centralized | plaintext-p3 | plaintext-p4 | secure");
  run->add_option("--key-bits", key_bits, "Paillier modulus size");
  run->add_option("--tau", tau, "fixed-point fraction digits");
  run->add_option("--tol", tol, "stopping tolerance for gamma_p and gamma_d");
  run->add_option("--seed", seed);
  run->add_option("--max-iters", max_iters);
  run->add_option("--threads", threads);
  run->add_option("--fixed-r", fixed_r, "pin every blinding coefficient (0: draw)");
  run->add_option("--transcript", transcript, "write the channel transcript (JSON lines)");
  run->add_option("--trace", trace_path, "per-round CSV");
  run->add_option("--summary", summary_path, "summary JSON");

  auto* attack = app.add_subcommand("attack", "run the curious-agent attacks on a transcript");
  std::string attack_transcript, attack_case;
  attack->add_option("--transcript", attack_transcript)->required()->check(CLI::ExistingFile);
  attack->add_option("--case", attack_case, "case file (defaults to the one named in the header)");

  auto* bench = app.add_subcommand("bench-crypto", "time CRT and standard decryption");
  std::string bench_bits = "128,512,1024,2048";
  int bench_ops = 50;
  bench->add_option("--key-bits", bench_bits, "comma-separated modulus sizes");
  bench->add_option("--ops", bench_ops, "operations per measurement");

  auto* scaling = app.add_subcommand("scaling", "offline and online crypto cost per case");
  std::string scaling_dir = GRIDVEIL_DATA_DIR "/cases";
  int scaling_rounds = 20;
  unsigned scaling_bits = 128, scaling_tau = 4;
  std::uint64_t scaling_seed = 1;
  scaling->add_option("--cases", scaling_dir)->check(CLI::ExistingDirectory);
  scaling->add_option("--rounds", scaling_rounds);
  scaling->add_option("--key-bits", scaling_bits);
  scaling->add_option("--tau", scaling_tau);
  scaling->add_option("--seed", scaling_seed);

  auto* gen = app.add_subcommand("generate-case", "write the bundled case files");
  gen->group("");
  std::string gen_dir = GRIDVEIL_DATA_DIR "/cases";
  std::uint64_t gen_seed = 20240615;
  gen->add_option("--out", gen_dir);
  gen->add_option("--seed", gen_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run)
      return cmd_run(case_path, mode, key_bits, tau, tol, seed, max_iters, threads, transcript, trace_path,
                     summary_path, fixed_r);
    if (*attack) {
      std::cout << adversary::attack_report(attack_transcript, attack_case) << '\n';
      return 0;
    }
    if (*bench) {
      std::cout << harness::bench_csv(harness::bench_crypto(parse_bits(bench_bits), bench_ops));
      return 0;
    }
    if (*scaling) return cmd_scaling(scaling_dir, scaling_rounds, scaling_bits, scaling_tau, scaling_seed);
    if (*gen) return cmd_generate(gen_dir, gen_seed);
  } catch (const ConfigError& e) {
    std::cerr << "gridveil: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "gridveil: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
