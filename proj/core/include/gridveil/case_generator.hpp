#pragma once

#include <cstdint>

#include "gridveil/grid_case.hpp"

namespace gridveil::grid {

/// Utility -> bus 1 (buyer) -> bus 2 (seller). Deterministic parameters.
GridCase three_bus_case();

/// Fifteen prosumers on the feeder drawn in the paper's 15-bus figure, with
/// parameters drawn from the published ranges under `seed`.
GridCase fifteen_bus_case(std::uint64_t seed);

/// Random radial tree with `agents` prosumers (bus 0 excluded).
GridCase random_tree_case(int agents, std::uint64_t seed);

/// Every prosumer has p_desired = 0, so nobody trades.
GridCase inactive_case(int agents);

}  // namespace gridveil::grid
