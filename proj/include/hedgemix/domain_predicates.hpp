#pragma once

#include <memory>

#include "hedgemix/envs.hpp"
#include "hedgemix/predicate.hpp"

namespace hedgemix {

// IsRock{lag}, IsLose{lag}.
void register_rps_predicates(PredicateRegistry& registry);
PredicatePools rps_pools();

// {X,Y}DistTo{Passenger,Destination} with a readout, PassengerPickedUp.
void register_taxi_predicates(PredicateRegistry& registry);
PredicatePools taxi_pools();

// NaiveInfectionRate, InfectionRateOfChange, PercentAction,
// ActionSequenceIndicator, MAReward, MARewardRatio, ParticleInfRate.
// Reward averages use the real rewards recorded in the history.
void register_epidemic_predicates(PredicateRegistry& registry, std::shared_ptr<const EpidemicModel> model);
PredicatePools epidemic_pools(const EpidemicModel& model);

// `count` uninformative coin predicates RandomBit{p, k}.
std::vector<PredicateSpec> random_bit_specs(std::size_t count, double p = 0.5);

}  // namespace hedgemix
