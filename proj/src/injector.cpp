#include "hedgemix/injector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hedgemix {

double InjectionSchedule::proportion(std::size_t m) const {
  return std::min(p0 + static_cast<double>(m) * dp, p_max);
}

std::size_t InjectionSchedule::informative_count(std::size_t m) const {
  // the small slack keeps e.g. 0.15 * 20 from flooring to 2
  return static_cast<std::size_t>(std::floor(proportion(m) * static_cast<double>(depth) + 1e-9));
}

namespace {

void draw(const std::vector<PredicateSpec>& pool, std::size_t k, Rng& rng, std::vector<PredicateSpec>& out) {
  if (k == 0) return;
  if (pool.empty()) throw std::invalid_argument("predicate pool is empty");
  if (pool.size() >= k) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.push_back(pool[idx[i]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool[pick(rng)]);
  }
}

}  // namespace

std::vector<PredicateSpec> sample_model_spec(const PredicatePools& pools, double p, std::size_t d, Rng& rng) {
  if (pools.informative.empty() && pools.uninformative.empty()) throw std::invalid_argument("predicate pools are empty");
  const auto k = static_cast<std::size_t>(std::floor(std::clamp(p, 0.0, 1.0) * static_cast<double>(d) + 1e-9));
  std::vector<PredicateSpec> out;
  out.reserve(d);
  draw(pools.informative, k, rng, out);
  draw(pools.uninformative, d - k, rng, out);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Injector::Injector(InjectionSchedule schedule, PredicatePools pools, std::uint64_t seed)
    : schedule_(schedule), pools_(std::move(pools)), rng_(seed) {
  if (schedule_.period == 0) throw std::invalid_argument("injection period must be positive");
}

std::vector<InjectionCommand> Injector::initial(std::size_t count) {
  std::vector<InjectionCommand> out;
  for (std::size_t i = 0; i < count; ++i) {
    InjectionCommand c;
    c.specs = sample_model_spec(pools_, schedule_.proportion(0), schedule_.depth, rng_);
    c.pretrain = false;
    c.source = "initial";
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<InjectionCommand> Injector::tick(std::size_t t) {
  if (!schedule_.enabled || t == 0 || t % schedule_.period != 0) return std::nullopt;
  ++injections_;
  InjectionCommand c;
  c.specs = sample_model_spec(pools_, schedule_.proportion(injections_), schedule_.depth, rng_);
  c.pretrain = true;
  c.drop_lowest = true;
  c.source = "schedule";
  return c;
}

}  // namespace hedgemix
