#include "hedgemix/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hedgemix {

ParticleFilter::ParticleFilter(std::shared_ptr<const EpidemicModel> model, ParticleFilterConfig config)
    : model_(std::move(model)), config_(config), rng_(config.seed) {
  if (config_.particles == 0) throw std::invalid_argument("particle filter needs at least one particle");
  reset();
}

void ParticleFilter::reset() {
  rng_.seed(config_.seed);
  particles_.clear();
  particles_.reserve(config_.particles);
  for (std::size_t m = 0; m < config_.particles; ++m) particles_.push_back(model_->initial_state(rng_));
  steps_ = 0;
}

void ParticleFilter::advance(Action a, std::span<const std::uint16_t> observation, double reward) {
  const std::size_t n = model_->size();
  if (observation.size() != n) throw std::invalid_argument("observation size does not match the graph");
  std::vector<double> logw(particles_.size());
  for (std::size_t m = 0; m < particles_.size(); ++m) {
    EpidemicState& s = particles_[m];
    model_->apply_action(s, a);
    model_->evolve(s, config_.theta, rng_);
    double lw = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double p = observation_row(s.label[v], config_.theta)[observation[v]];
      if (p <= 0.0) {
        lw = -std::numeric_limits<double>::infinity();
        break;
      }
      lw += std::log(p);
    }
    logw[m] = lw;
  }
  double top = *std::max_element(logw.begin(), logw.end());
  ++steps_;
  if (!std::isfinite(top)) {
    ++degeneracies_;
    auto steps = steps_;
    auto deg = degeneracies_;
    reset();
    steps_ = steps;
    degeneracies_ = deg;
    return;
  }
  std::vector<double> w(logw.size());
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::exp(logw[m] - top);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<EpidemicState> next;
  next.reserve(particles_.size());
  for (std::size_t m = 0; m < particles_.size(); ++m) next.push_back(particles_[pick(rng_)]);
  particles_ = std::move(next);

  // a positive reward only comes with the end-of-epidemic bonus, after which
  // the environment starts a fresh outbreak
  if (reward > 0.0) {
    for (auto& s : particles_) s = model_->initial_state(rng_);
  }
}

double ParticleFilter::infection_rate() const {
  const double n = static_cast<double>(model_->size());
  double total = 0.0;
  for (const auto& s : particles_)
    total += static_cast<double>(std::count(s.label.begin(), s.label.end(), Label::I)) / n;
  return total / static_cast<double>(particles_.size());
}

double particle_infection_rate(std::shared_ptr<const EpidemicModel> model, const HistoryView& h,
                               const ParticleFilterConfig& config) {
  ParticleFilter pf(std::move(model), config);
  for (std::size_t i = 0; i < h.size(); ++i) pf.advance(h.at(i).action, h.observation_at(i), h.at(i).reward);
  return pf.infection_rate();
}

ParticleFilterCache::ParticleFilterCache(std::shared_ptr<const EpidemicModel> model, ParticleFilterConfig config,
                                         std::size_t capacity)
    : model_(std::move(model)), config_(config), capacity_(std::max<std::size_t>(capacity, 1)) {}

double ParticleFilterCache::infection_rate(const HistoryView& h) {
  std::lock_guard lock(mutex_);
  const std::uint64_t id = h.history().id();
  const std::size_t begin = h.begin_index();
  const std::size_t end = h.end_index();
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) {
    return e.history_id == id && e.begin == begin && e.end <= end;
  });
  if (it == entries_.end()) {
    entries_.push_front(Entry{id, begin, begin, ParticleFilter(model_, config_)});
    if (entries_.size() > capacity_) entries_.pop_back();
    it = entries_.begin();
  } else if (it != entries_.begin()) {
    entries_.splice(entries_.begin(), entries_, it);
    it = entries_.begin();
  }
  const History& hist = h.history();
  for (std::size_t i = it->end; i < end; ++i) {
    it->filter.advance(hist.step(i).action, hist.observation(i), hist.step(i).reward);
  }
  it->end = end;
  return it->filter.infection_rate();
}

}  // namespace hedgemix
