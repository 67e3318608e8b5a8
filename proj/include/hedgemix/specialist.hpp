#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "hedgemix/context_tree.hpp"
#include "hedgemix/core.hpp"
#include "hedgemix/predicate.hpp"

namespace hedgemix {

// Abstract state: predicate p_1 is the most significant of d bits.
using State = std::uint64_t;

using SpecialistId = std::uint64_t;

// An abstract environment model: a predicate abstraction phi plus two
// chains of weighted context trees. The state chain predicts s_t from
// (a_t, s_{t-1}); the reward chain predicts r_t from (a_t, s_t, s_{t-1}).
// Action bits lead both contexts so the trees split on the action first.
class Specialist {
 public:
  static constexpr std::size_t kMaxPredicates = 64;

  Specialist(SpecialistId id, std::vector<PredicatePtr> phi, const HistoryLayout& layout);

  SpecialistId id() const { return id_; }
  std::size_t depth() const { return phi_.size(); }
  const std::vector<PredicatePtr>& phi() const { return phi_; }
  std::vector<PredicateSpec> specs() const;
  std::uint32_t action_count() const { return action_count_; }
  std::uint32_t reward_count() const { return reward_count_; }
  std::uint64_t state_count() const { return std::uint64_t{1} << phi_.size(); }

  State state_of(const HistoryView& h) const;

  struct Observed {
    double state_log_prob;
    double reward_log_prob;
  };
  // Trains both chains; returns the log-probabilities assigned before the update.
  Observed observe(State s_prev, Action a, State s_next, Symbol r);
  // Forgets the revert trail of everything trained so far.
  void commit();

  // Distribution over every reward bit pattern (2^k entries).
  std::vector<double> predict_reward(State s_prev, Action a, State s_next) const;
  double reward_log_prob(State s_prev, Action a, State s_next, Symbol r) const;
  double state_log_prob(State s_prev, Action a, State s_next) const;

  // Draws (s', r) and trains on it; undo with revert().
  std::pair<State, Symbol> sample(State s, Action a, Rng& rng);
  void revert(std::size_t n_steps);
  std::size_t trail_depth() const { return rewards_.trail_depth(); }

  std::uint64_t structural_hash() const;
  std::size_t node_count() const { return states_.node_count() + rewards_.node_count(); }

  std::size_t arrival = 0;
  std::optional<std::size_t> death;

  // Versioned binary snapshot: predicate specs, then both chains.
  void save(std::ostream& out) const;
  static Specialist load(std::istream& in, const PredicateRegistry& registry, const HistoryLayout& layout);

 private:
  void state_context(State s_prev, Action a, Bits& out) const;
  void reward_context(State s_prev, Action a, State s_next, Bits& out) const;

  SpecialistId id_;
  std::vector<PredicatePtr> phi_;
  std::uint32_t action_bits_;
  std::uint32_t action_count_;
  std::uint32_t reward_bits_;
  std::uint32_t reward_count_;
  SymbolChain states_;
  SymbolChain rewards_;
};

}  // namespace hedgemix
