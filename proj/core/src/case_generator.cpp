#include "gridveil/case_generator.hpp"

#include <string>
#include <vector>

#include "gridveil/errors.hpp"
#include "gridveil/random.hpp"

namespace gridveil::grid {

namespace {

constexpr double kOmegaB = 2.0;
constexpr double kOmegaS = 0.6;

Bus line(int id, int parent, double r, double x) {
  // Network limits are wide on purpose: the market, not the feeder, binds.
  return {id, parent, r, x, 0.81, 1.21, -1.0e5, 1.0e5, -1.0e5, 1.0e5};
}

ProsumerParams draw_prosumer(int bus, Role role, Rng& rng) {
  ProsumerParams p;
  p.bus = bus;
  p.epsilon = rng.uniform(2.5, 3.5);
  p.q_min = -50.0;
  p.q_max = 50.0;
  switch (role) {
    case Role::Buyer:
      p.alpha = rng.uniform(0.01, 0.1);
      p.beta = rng.uniform(1.0, 3.0);
      p.p_desired = -rng.uniform(20.0, 60.0);
      p.p_min = 2.0 * p.p_desired;
      p.p_max = 0.0;
      break;
    case Role::Seller:
      p.alpha = rng.uniform(0.02, 0.1);
      p.beta = rng.uniform(0.1, 0.8);
      p.p_desired = rng.uniform(20.0, 60.0);
      p.p_min = 0.0;
      p.p_max = 2.0 * p.p_desired;
      break;
    case Role::Inactive:
      p.alpha = rng.uniform(0.01, 0.1);
      p.beta = 0.0;
      p.p_desired = 0.0;
      p.p_min = 0.0;
      p.p_max = 0.0;
      break;
  }
  return p;
}

GridCase assemble(std::string name, const std::vector<int>& parents, const std::vector<Role>& roles,
                  std::uint64_t seed, Rng& rng) {
  GridCase gc;
  gc.name = std::move(name);
  gc.seed = seed;
  gc.omega_b = kOmegaB;
  gc.omega_s = kOmegaS;
  const int n = static_cast<int>(parents.size()) - 1;
  gc.buses.assign(n + 1, Bus{});
  gc.buses[0].parent = -1;
  gc.prosumers.assign(n + 1, ProsumerParams{});
  gc.children.assign(n + 1, {});
  gc.partners.assign(n + 1, {});
  for (int i = 1; i <= n; ++i) {
    gc.buses[i] = line(i, parents[i], rng.uniform(0.001, 0.01), rng.uniform(0.001, 0.01));
    gc.children[parents[i]].push_back(i);
  }
  for (int i = 1; i <= n; ++i) gc.prosumers[i] = draw_prosumer(i, roles[i], rng);
  for (int b = 1; b <= n; ++b)
    for (int s = 1; s <= n; ++s)
      if (roles[b] == Role::Buyer && roles[s] == Role::Seller) {
        gc.partners[b].push_back(s);
        gc.partners[s].push_back(b);
      }
  validate(gc);
  return gc;
}

}  // namespace

GridCase three_bus_case() {
  GridCase gc;
  gc.name = "toy3";
  gc.omega_b = kOmegaB;
  gc.omega_s = kOmegaS;
  gc.buses = {Bus{}, line(1, 0, 0.005, 0.004), line(2, 1, 0.004, 0.003)};
  gc.buses[0].parent = -1;
  gc.prosumers = {ProsumerParams{},
                  {1, 0.05, 2.0, 3.0, -30.0, -60.0, 0.0, -50.0, 50.0},
                  {2, 0.04, 0.5, 3.0, 20.0, 0.0, 40.0, -50.0, 50.0}};
  gc.children = {{1}, {2}, {}};
  gc.partners = {{}, {2}, {1}};
  validate(gc);
  return gc;
}

GridCase fifteen_bus_case(std::uint64_t seed) {
  // Bus 3 has parent 2 and children {4, 6, 8}, as in the privacy discussion.
  const std::vector<int> parents = {-1, 0, 1, 2, 3, 4, 3, 2, 3, 7, 1, 10, 11, 6, 8, 14};
  std::vector<Role> roles(16, Role::Seller);
  for (int b : {1, 5, 6, 9, 11, 13, 15}) roles[b] = Role::Buyer;
  Rng rng(seed);
  return assemble("ieee15", parents, roles, seed, rng);
}

GridCase random_tree_case(int agents, std::uint64_t seed) {
  if (agents < 2) throw ConfigError("random tree needs at least two agents");
  Rng rng(seed);
  std::vector<int> parents(agents + 1, -1);
  parents[1] = 0;
  for (int i = 2; i <= agents; ++i) {
    // Mostly extend the current lateral, sometimes branch off an earlier bus.
    parents[i] = rng.uniform(0.0, 1.0) < 0.6 ? i - 1 : static_cast<int>(rng.uniform_int(1, i - 1));
  }
  std::vector<Role> roles(agents + 1, Role::Buyer);
  for (int i = 1; i <= agents; ++i) roles[i] = rng.uniform(0.0, 1.0) < 0.5 ? Role::Buyer : Role::Seller;
  roles[1] = Role::Buyer;
  roles[2] = Role::Seller;
  return assemble("tree" + std::to_string(agents), parents, roles, seed, rng);
}

GridCase inactive_case(int agents) {
  std::vector<int> parents(agents + 1, -1);
  for (int i = 1; i <= agents; ++i) parents[i] = i - 1;
  std::vector<Role> roles(agents + 1, Role::Inactive);
  Rng rng(7);
  GridCase gc = assemble("inactive", parents, roles, 7, rng);
  return gc;
}

}  // namespace gridveil::grid
