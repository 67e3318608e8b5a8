#pragma once

// Small builders shared by unit tests and the acceptance binary.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/predicate.hpp"
#include "hedgemix/specialist.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace hedgemix;

// A predicate that always reads `value`; only its slot in phi matters when
// a test drives Specialist::observe with explicit states.
inline PredicatePtr constant_predicate(int value, const std::string& tag = "c") {
  PredicateSpec spec{"Constant", json{{"value", value}, {"tag", tag}}};
  return std::make_shared<const Predicate>(spec, 0, [value](const HistoryView&, std::uint64_t) { return value; });
}

inline HistoryLayout layout(std::uint32_t actions, const RewardCodec& codec) {
  HistoryLayout l;
  l.action = SymbolSpace::of("action", actions);
  l.observation = {SymbolSpace::of("obs", 2)};
  l.reward = codec.space();
  return l;
}

inline std::vector<PredicatePtr> phi(std::size_t d) {
  std::vector<PredicatePtr> out;
  for (std::size_t i = 0; i < d; ++i) out.push_back(constant_predicate(0, "p" + std::to_string(i)));
  return out;
}

// Two states, two actions. Action 0 keeps the state with probability 0.9,
// action 1 flips it with probability 0.8. Landing in state 1 pays 1 with
// probability 0.9; state 0 pays 1 with probability 0.1.
struct TwoStateMdp {
  static double p(std::size_t s, std::size_t a, std::size_t s2) {
    const double stay = a == 0 ? 0.9 : 0.2;
    return s2 == s ? stay : 1.0 - stay;
  }
  static double pay(std::size_t s2) { return s2 == 1 ? 0.9 : 0.1; }

  static oracle::Mdp explicit_mdp() {
    return {2, 2, p, [](std::size_t, std::size_t, std::size_t s2) { return pay(s2); }};
  }

  // Trains a one-predicate specialist on `n` transitions under uniform actions.
  static void train(Specialist& sp, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    State s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Action a = u(rng) < 0.5 ? 0 : 1;
      State s2 = u(rng) < p(s, a, 1) ? 1 : 0;
      Symbol r = u(rng) < pay(s2) ? 1 : 0;
      sp.observe(s, a, s2, r);
      s = s2;
    }
    sp.commit();
  }
};

// The MDP as the specialist currently believes it, for value iteration.
inline oracle::Mdp believed_mdp(const Specialist& sp, const RewardCodec& codec) {
  oracle::Mdp m;
  m.states = sp.state_count();
  m.actions = sp.action_count();
  m.p = [&sp](std::size_t s, std::size_t a, std::size_t s2) {
    return std::exp(sp.state_log_prob(s, static_cast<Action>(a), s2));
  };
  m.r = [&sp, &codec](std::size_t s, std::size_t a, std::size_t s2) {
    double e = 0.0;
    for (Symbol r = 0; r < codec.levels(); ++r)
      e += std::exp(sp.reward_log_prob(s, static_cast<Action>(a), s2, r)) * codec.decode(r);
    return e;
  };
  return m;
}

}  // namespace fixture
