#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/envs.hpp"

namespace hedgemix {

struct ParticleFilterConfig {
  EpidemicParams theta;
  std::size_t particles = 100;
  std::uint64_t seed = 0;
};

// Bootstrap filter over joint SEIRS node labels. Particles are propagated
// through the transition model, weighted by the test-outcome likelihood and
// resampled multinomially every step. If every particle explains the
// observation with probability zero the filter restarts from the prior.
class ParticleFilter {
 public:
  ParticleFilter(std::shared_ptr<const EpidemicModel> model, ParticleFilterConfig config);

  void reset();
  // One environment step: action taken, observation and reward received.
  void advance(Action a, std::span<const std::uint16_t> observation, double reward);

  // Mean fraction of infectious nodes over the particles.
  double infection_rate() const;
  std::size_t steps() const { return steps_; }
  std::size_t degeneracies() const { return degeneracies_; }
  const std::vector<EpidemicState>& particles() const { return particles_; }
  void set_particles(std::vector<EpidemicState> particles) { particles_ = std::move(particles); }

 private:
  std::shared_ptr<const EpidemicModel> model_;
  ParticleFilterConfig config_;
  Rng rng_;
  std::vector<EpidemicState> particles_;
  std::size_t steps_ = 0;
  std::size_t degeneracies_ = 0;
};

// Runs a filter over every step of the view, from scratch.
double particle_infection_rate(std::shared_ptr<const EpidemicModel> model, const HistoryView& h,
                               const ParticleFilterConfig& config);

// Keeps a few live filters per (history, window start) so that evaluating
// at consecutive window ends costs one filter step each. Shared by all
// predicates built on the same filter configuration.
class ParticleFilterCache {
 public:
  ParticleFilterCache(std::shared_ptr<const EpidemicModel> model, ParticleFilterConfig config,
                      std::size_t capacity = 4);

  double infection_rate(const HistoryView& h);

 private:
  struct Entry {
    std::uint64_t history_id;
    std::size_t begin;
    std::size_t end;
    ParticleFilter filter;
  };
  std::shared_ptr<const EpidemicModel> model_;
  ParticleFilterConfig config_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::list<Entry> entries_;  // most recently used first
};

}  // namespace hedgemix
