#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/hedge.hpp"
#include "hedgemix/planner.hpp"
#include "hedgemix/predicate.hpp"
#include "hedgemix/random.hpp"
#include "hedgemix/specialist.hpp"

namespace hedgemix {

struct AgentConfig {
  double eta = 1.0;
  double prior = 1.0;
  std::uint32_t horizon = 4;
  std::uint32_t simulations = 40;
  std::optional<double> ucb_c;
  double epsilon0 = 0.999;
  double epsilon_decay = 0.9999;
  double epsilon_floor = 0.01;
  std::size_t max_specialists = 10;
  bool adaptive = true;  // false: HedgeAIXI admission
  std::size_t pretrain_window = 4000;
  // Specialists whose normalized weight is below this are not searched.
  double search_min_weight = 1e-3;
};

struct StepRecord {
  std::size_t t = 0;
  Action action = 0;
  std::vector<std::uint16_t> observation;
  double reward = 0.0;
  Symbol reward_symbol = 0;
  double loss = 0.0;
  double epsilon = 0.0;
  bool explored = false;
  std::map<SpecialistId, double> losses;
  std::vector<std::pair<SpecialistId, double>> weights;  // normalized, after the update
  std::map<SpecialistId, State> states;
};

struct Decision {
  Action action = 0;
  bool explored = false;
  double epsilon = 0.0;
  std::vector<double> q;  // weighted Q-values when planned
};

// Picks argmax_a sum_i w_i Q_i(a), ties to the lowest action.
Action weighted_argmax(const std::vector<double>& weights, const std::vector<std::vector<double>>& q);

class Agent {
 public:
  Agent(HistoryLayout layout, RewardCodec codec, AgentConfig config, std::uint64_t seed);

  const History& history() const { return history_; }
  const RewardCodec& codec() const { return codec_; }
  const AgentConfig& config() const { return config_; }
  const DynamicHedge& hedge() const { return hedge_; }
  std::size_t time() const { return history_.size(); }
  double epsilon() const { return epsilon_at(history_.size()); }
  double epsilon_at(std::size_t t) const;

  // Epsilon-greedy choice; plans only when acting greedily.
  Decision act();
  // Greedy choice regardless of epsilon.
  Decision plan();
  StepRecord update(Action a, std::span<const std::uint16_t> observation, double reward);

  // Builds, optionally pre-trains and admits a specialist.
  SpecialistId inject(std::vector<PredicatePtr> phi, bool pretrain);
  // Retires `old` and admits the new model in its place. Without adaptive
  // admission the newcomer inherits the retired model's weight.
  SpecialistId replace(SpecialistId old, std::vector<PredicatePtr> phi, bool pretrain);
  void retire(SpecialistId id);
  SpecialistId drop_lowest();

  bool full() const { return pool_.size() >= config_.max_specialists; }
  const std::vector<std::unique_ptr<Specialist>>& pool() const { return pool_; }
  Specialist& specialist(SpecialistId id);
  State state(SpecialistId id) const { return states_.at(id); }
  std::optional<SpecialistId> lowest_weight() const;

 private:
  void pretrain(Specialist& sp);
  SpecialistId admit(std::vector<PredicatePtr> phi, bool pretrain, std::optional<double> inherited);

  HistoryLayout layout_;
  RewardCodec codec_;
  AgentConfig config_;
  std::uint64_t seed_;
  Rng rng_;
  History history_;
  DynamicHedge hedge_;
  std::vector<std::unique_ptr<Specialist>> pool_;
  std::map<SpecialistId, State> states_;
  SpecialistId next_id_ = 1;
};

}  // namespace hedgemix
