#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/random.hpp"
#include "hedgemix/specialist.hpp"

namespace hedgemix {

struct PlannerConfig {
  std::uint32_t horizon = 4;  // H; a search sums H+1 rewards
  std::uint32_t simulations = 40;
  // Default (H+1) * (r_max - r_min). A node with k rewards still to come
  // uses c * k / (H+1), matching the range of its remaining return.
  std::optional<double> ucb_c;
  std::uint64_t seed = 0;
};

struct ActionStats {
  double value_sum = 0.0;
  std::uint64_t visits = 0;
};

// UCB1 over a decision node's actions: unvisited actions first (lowest
// index), then mean + c * sqrt(ln N / n), ties to the lowest index.
std::uint32_t uct_select(std::span<const ActionStats> children, std::uint64_t parent_visits, double c);

// Uniformly random playout of `steps` steps through the specialist's model,
// summing decoded rewards. Model updates stay on the trail.
double rollout(Specialist& sp, State s, std::uint32_t steps, const RewardCodec& codec, Rng& rng);

// Q-value estimates for every action at abstract state s0: simulations are
// dealt to the root actions in turn and UCT picks every later action in the
// specialist's own model. The specialist is returned unchanged.
std::vector<double> q_estimate(Specialist& sp, State s0, const RewardCodec& codec, const PlannerConfig& cfg);

}  // namespace hedgemix
