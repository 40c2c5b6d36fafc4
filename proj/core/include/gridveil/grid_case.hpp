#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridveil::grid {

/// Line data for bus `id`: the line runs from this bus up to `parent`.
struct Bus {
  int id = 0;
  int parent = -1;  // -1 for the utility bus 0
  double r_pu = 0.0;
  double x_pu = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double p_flow_min = 0.0;
  double p_flow_max = 0.0;
  double q_flow_min = 0.0;
  double q_flow_max = 0.0;
};

struct ProsumerParams {
  int bus = 0;
  double alpha = 0.0;    // cent/kWh^2
  double beta = 0.0;     // cent/kWh
  double epsilon = 0.0;  // cent/kWh^2
  double p_desired = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
};

enum class Role { Buyer, Seller, Inactive };

const char* role_name(Role r);

/// Radial feeder plus market data. Index 0 is the utility; agents are 1..N and
/// every per-bus vector has N + 1 entries.
struct GridCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<ProsumerParams> prosumers;  // prosumers[0] is unused
  double omega_b = 0.0;
  double omega_s = 0.0;
  double v_root = 1.0;       // squared voltage at the utility bus, public
  double base_kva = 1000.0;  // converts kW flows into per-unit for the voltage-drop rows
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> partners;
  std::uint64_t seed = 0;

  int agent_count() const { return static_cast<int>(buses.size()) - 1; }
  Role role(int agent) const;
};

struct Partition {
  std::vector<int> buyers;
  std::vector<int> sellers;
  std::vector<int> inactive;
};

Role classify(double p_desired);
Partition classify_agents(const GridCase& gc);

/// Parses and validates a case document. `partners: "complete"` expands to the
/// complete buyer/seller bipartite graph. Throws ValidationError listing every
/// offending element.
GridCase parse_case(const std::string& json_text, const std::string& name = "case");
GridCase load_case(const std::string& path);

std::string case_to_json(const GridCase& gc, bool explicit_partners = false);

/// Checks tree shape, parameter signs, price order and partner symmetry.
void validate(const GridCase& gc);

/// Buses on the path from `agent` up to (excluding) the utility, agent first.
std::vector<int> path_to_root(const GridCase& gc, int agent);

}  // namespace gridveil::grid
