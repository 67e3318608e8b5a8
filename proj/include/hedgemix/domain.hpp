#pragma once

#include <functional>
#include <memory>
#include <string>

#include "hedgemix/agent.hpp"
#include "hedgemix/envs.hpp"
#include "hedgemix/injector.hpp"
#include "hedgemix/predicate.hpp"

namespace hedgemix {

// Everything a run needs to know about one of the built-in problems.
struct Domain {
  std::string name;
  HistoryLayout layout;
  RewardCodec codec = RewardCodec::table({0.0});
  std::function<std::unique_ptr<Environment>(std::uint64_t seed)> make_env;
  std::shared_ptr<PredicateRegistry> registry;
  PredicatePools pools;
  AgentConfig agent;
  InjectionSchedule schedule;
  std::shared_ptr<const EpidemicModel> epidemic;  // epidemic only
};

// `env` holds domain parameters (see README); unknown keys are rejected.
// Predicates draw their randomness from `predicate_seed`.
Domain make_domain(const std::string& name, const json& env, std::uint64_t predicate_seed);

}  // namespace hedgemix
