#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hedgemix/predicate.hpp"
#include "hedgemix/random.hpp"
#include "hedgemix/specialist.hpp"

namespace hedgemix {

struct InjectionSchedule {
  bool enabled = true;
  std::size_t period = 4000;
  double p0 = 0.05;
  double dp = 0.05;
  double p_max = 1.0;
  std::size_t depth = 2;

  // Informative proportion of the m-th injected model (m = 0 for the initial pool).
  double proportion(std::size_t m) const;
  std::size_t informative_count(std::size_t m) const;
};

// One model arrival, simulated or from an operator. Drop directives: retire
// `drop` if set, otherwise the lowest-weight model when `drop_lowest` is set
// and the pool is full.
struct InjectionCommand {
  std::vector<PredicateSpec> specs;
  bool pretrain = true;
  bool drop_lowest = false;
  std::optional<SpecialistId> drop;
  std::string source = "operator";
};

// floor(p*d) informative and the rest uninformative specs, in shuffled order.
// Draws without replacement while a pool is large enough.
std::vector<PredicateSpec> sample_model_spec(const PredicatePools& pools, double p, std::size_t d, Rng& rng);

class Injector {
 public:
  Injector(InjectionSchedule schedule, PredicatePools pools, std::uint64_t seed);

  const InjectionSchedule& schedule() const { return schedule_; }
  std::vector<InjectionCommand> initial(std::size_t count);
  // The scheduled arrival at step t, if any (t a positive multiple of the period).
  std::optional<InjectionCommand> tick(std::size_t t);
  std::size_t injections() const { return injections_; }

 private:
  InjectionSchedule schedule_;
  PredicatePools pools_;
  Rng rng_;
  std::size_t injections_ = 0;
};

}  // namespace hedgemix
