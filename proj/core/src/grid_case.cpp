#include "gridveil/grid_case.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridveil/errors.hpp"

namespace gridveil::grid {

using nlohmann::json;

const char* role_name(Role r) {
  switch (r) {
    case Role::Buyer: return "buyer";
    case Role::Seller: return "seller";
    case Role::Inactive: return "inactive";
  }
  return "?";
}

Role classify(double p_desired) {
  if (p_desired < 0.0) return Role::Buyer;
  if (p_desired > 0.0) return Role::Seller;
  return Role::Inactive;
}

Role GridCase::role(int agent) const { return classify(prosumers.at(agent).p_desired); }

Partition classify_agents(const GridCase& gc) {
  Partition part;
  for (int i = 1; i <= gc.agent_count(); ++i) {
    switch (gc.role(i)) {
      case Role::Buyer: part.buyers.push_back(i); break;
      case Role::Seller: part.sellers.push_back(i); break;
      case Role::Inactive: part.inactive.push_back(i); break;
    }
  }
  return part;
}

namespace {

double num(const json& obj, const char* key, std::vector<std::string>& problems,
           const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    problems.push_back(where + ": missing numeric '" + key + "'");
    return 0.0;
  }
  return obj[key].get<double>();
}

void complete_bipartite(GridCase& gc) {
  const Partition part = classify_agents(gc);
  for (int b : part.buyers)
    for (int s : part.sellers) {
      gc.partners[b].push_back(s);
      gc.partners[s].push_back(b);
    }
}

std::string join(const std::vector<std::string>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "; " : "") << items[i];
  return out.str();
}

}  // namespace

std::vector<int> path_to_root(const GridCase& gc, int agent) {
  std::vector<int> path;
  for (int b = agent; b > 0; b = gc.buses.at(b).parent) {
    path.push_back(b);
    if (static_cast<int>(path.size()) > gc.agent_count()) throw ValidationError("cycle in topology");
  }
  return path;
}

void validate(const GridCase& gc) {
  std::vector<std::string> problems;
  const int n = gc.agent_count();
  if (n < 1) problems.push_back("case has no agents");
  if (gc.buses.empty() || gc.buses[0].parent != -1) problems.push_back("bus 0 must be the root");
  for (int i = 1; i <= n; ++i) {
    const Bus& b = gc.buses[i];
    if (b.parent < 0 || b.parent > n || b.parent == i) {
      problems.push_back("bus " + std::to_string(i) + ": missing or invalid parent");
      continue;
    }
    // Walk up; a tree reaches 0 within n steps.
    int cur = i, steps = 0;
    while (cur != 0 && steps <= n) {
      cur = gc.buses[cur].parent;
      if (cur < 0 || cur > n) break;
      ++steps;
    }
    if (cur != 0) problems.push_back("bus " + std::to_string(i) + ": not connected to bus 0 (cycle)");
    if (b.v_min > b.v_max) problems.push_back("bus " + std::to_string(i) + ": v_min > v_max");
    if (b.p_flow_min > b.p_flow_max || b.q_flow_min > b.q_flow_max)
      problems.push_back("bus " + std::to_string(i) + ": flow bounds inverted");
  }
  if (static_cast<int>(gc.prosumers.size()) != n + 1) problems.push_back("one prosumer per bus required");
  for (int i = 1; i < static_cast<int>(gc.prosumers.size()); ++i) {
    const ProsumerParams& p = gc.prosumers[i];
    const std::string where = "prosumer " + std::to_string(i);
    if (p.bus != i) problems.push_back(where + ": bus mismatch");
    if (!(p.alpha > 0.0)) problems.push_back(where + ": alpha must be positive");
    if (!(p.epsilon > 0.0)) problems.push_back(where + ": epsilon must be positive");
    if (p.p_min > p.p_max || p.q_min > p.q_max) problems.push_back(where + ": bounds inverted");
  }
  if (gc.omega_s > gc.omega_b) problems.push_back("omega_s exceeds omega_b");
  if (gc.partners.size() == gc.prosumers.size()) {
    for (int i = 1; i <= n; ++i) {
      std::set<int> seen;
      for (int j : gc.partners[i]) {
        const std::string pair = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
        if (j < 1 || j > n) {
          problems.push_back("partner pair " + pair + " references an unknown agent");
          continue;
        }
        if (!seen.insert(j).second) problems.push_back("partner pair " + pair + " listed twice");
        const auto& back = gc.partners[j];
        if (std::find(back.begin(), back.end(), i) == back.end())
          problems.push_back("partner pair " + pair + " has no reverse entry");
        const Role ri = gc.role(i), rj = gc.role(j);
        if (ri == Role::Inactive || rj == Role::Inactive)
          problems.push_back("partner pair " + pair + " involves an inactive agent");
        else if (ri == rj)
          problems.push_back("partner pair " + pair + " does not pair a buyer with a seller");
      }
    }
  } else {
    problems.push_back("partner table size mismatch");
  }
  if (!problems.empty()) throw ValidationError("invalid case: " + join(problems));
}

GridCase parse_case(const std::string& json_text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("case is not valid JSON: ") + e.what());
  }
  std::vector<std::string> problems;
  if (!doc.contains("buses") || !doc["buses"].is_array()) throw ValidationError("case lacks 'buses'");
  if (!doc.contains("prosumers") || !doc["prosumers"].is_array())
    throw ValidationError("case lacks 'prosumers'");

  int max_id = 0;
  for (const auto& b : doc["buses"]) max_id = std::max(max_id, b.value("id", 0));
  GridCase gc;
  gc.name = name;
  gc.buses.assign(max_id + 1, Bus{});
  std::vector<bool> present(max_id + 1, false);
  present[0] = true;
  gc.buses[0].parent = -1;
  for (const auto& b : doc["buses"]) {
    if (!b.contains("id") || !b["id"].is_number_integer()) {
      problems.push_back("bus without integer id");
      continue;
    }
    const int id = b["id"].get<int>();
    if (id < 0) {
      problems.push_back("negative bus id");
      continue;
    }
    if (id == 0) continue;  // utility bus carries no line data
    const std::string where = "bus " + std::to_string(id);
    if (present[id]) problems.push_back(where + ": duplicate id");
    present[id] = true;
    Bus& bus = gc.buses[id];
    bus.id = id;
    if (!b.contains("parent") || !b["parent"].is_number_integer()) {
      problems.push_back(where + ": missing parent");
      bus.parent = -2;
    } else {
      bus.parent = b["parent"].get<int>();
      if (bus.parent < 0 || bus.parent > max_id) problems.push_back(where + ": missing parent");
    }
    bus.r_pu = num(b, "r_pu", problems, where);
    bus.x_pu = num(b, "x_pu", problems, where);
    bus.v_min = num(b, "v_min", problems, where);
    bus.v_max = num(b, "v_max", problems, where);
    bus.p_flow_min = num(b, "p_flow_min", problems, where);
    bus.p_flow_max = num(b, "p_flow_max", problems, where);
    bus.q_flow_min = num(b, "q_flow_min", problems, where);
    bus.q_flow_max = num(b, "q_flow_max", problems, where);
  }
  for (int i = 1; i <= max_id; ++i)
    if (!present[i]) problems.push_back("bus " + std::to_string(i) + " missing");

  gc.prosumers.assign(max_id + 1, ProsumerParams{});
  std::vector<bool> have(max_id + 1, false);
  for (const auto& p : doc["prosumers"]) {
    const int bus = p.value("bus", -1);
    if (bus < 1 || bus > max_id) {
      problems.push_back("prosumer at unknown bus " + std::to_string(bus));
      continue;
    }
    const std::string where = "prosumer " + std::to_string(bus);
    if (have[bus]) problems.push_back(where + ": duplicate");
    have[bus] = true;
    ProsumerParams& pp = gc.prosumers[bus];
    pp.bus = bus;
    pp.alpha = num(p, "alpha", problems, where);
    pp.beta = num(p, "beta", problems, where);
    pp.epsilon = num(p, "epsilon", problems, where);
    pp.p_desired = num(p, "p_desired", problems, where);
    pp.p_min = num(p, "p_min", problems, where);
    pp.p_max = num(p, "p_max", problems, where);
    pp.q_min = num(p, "q_min", problems, where);
    pp.q_max = num(p, "q_max", problems, where);
  }
  for (int i = 1; i <= max_id; ++i)
    if (!have[i]) problems.push_back("bus " + std::to_string(i) + " has no prosumer");

  const json market = doc.value("market", json::object());
  gc.omega_b = market.value("omega_b", 0.0);
  gc.omega_s = market.value("omega_s", 0.0);
  gc.v_root = doc.value("v_root", 1.0);
  gc.base_kva = doc.value("base_kva", 1000.0);
  gc.seed = doc.value("seed", std::uint64_t{0});
  if (!problems.empty()) throw ValidationError("invalid case: " + join(problems));

  gc.children.assign(max_id + 1, {});
  for (int i = 1; i <= max_id; ++i)
    if (gc.buses[i].parent >= 0) gc.children[gc.buses[i].parent].push_back(i);
  gc.partners.assign(max_id + 1, {});
  const json partners = market.value("partners", json("complete"));
  if (partners.is_string()) {
    if (partners.get<std::string>() != "complete")
      throw ValidationError("market.partners must be \"complete\" or a list of pairs");
    complete_bipartite(gc);
  } else if (partners.is_array()) {
    for (const auto& pr : partners) {
      if (!pr.is_array() || pr.size() != 2) throw ValidationError("partner entries must be [i, j]");
      const int i = pr[0].get<int>(), j = pr[1].get<int>();
      if (i < 1 || i > max_id)
        throw ValidationError("partner pair references unknown agent " + std::to_string(i));
      gc.partners[i].push_back(j);
    }
  } else {
    throw ValidationError("market.partners has an unsupported type");
  }
  validate(gc);
  return gc;
}

GridCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open case file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.rfind(".json"); dot != std::string::npos) name = name.substr(0, dot);
  return parse_case(buf.str(), name);
}

std::string case_to_json(const GridCase& gc, bool explicit_partners) {
  json doc;
  doc["buses"] = json::array();
  for (int i = 1; i <= gc.agent_count(); ++i) {
    const Bus& b = gc.buses[i];
    doc["buses"].push_back({{"id", i}, {"parent", b.parent}, {"r_pu", b.r_pu}, {"x_pu", b.x_pu},
                            {"v_min", b.v_min}, {"v_max", b.v_max}, {"p_flow_min", b.p_flow_min},
                            {"p_flow_max", b.p_flow_max}, {"q_flow_min", b.q_flow_min},
                            {"q_flow_max", b.q_flow_max}});
  }
  doc["prosumers"] = json::array();
  for (int i = 1; i <= gc.agent_count(); ++i) {
    const ProsumerParams& p = gc.prosumers[i];
    doc["prosumers"].push_back({{"bus", i}, {"alpha", p.alpha}, {"beta", p.beta},
                                {"epsilon", p.epsilon}, {"p_desired", p.p_desired},
                                {"p_min", p.p_min}, {"p_max", p.p_max}, {"q_min", p.q_min},
                                {"q_max", p.q_max}});
  }
  json market{{"omega_b", gc.omega_b}, {"omega_s", gc.omega_s}};
  if (explicit_partners) {
    json pairs = json::array();
    for (int i = 1; i <= gc.agent_count(); ++i)
      for (int j : gc.partners[i]) pairs.push_back({i, j});
    market["partners"] = pairs;
  } else {
    market["partners"] = "complete";
  }
  doc["market"] = market;
  doc["v_root"] = gc.v_root;
  doc["base_kva"] = gc.base_kva;
  doc["seed"] = gc.seed;
  return doc.dump(2);
}

}  // namespace gridveil::grid
