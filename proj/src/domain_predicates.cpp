#include "hedgemix/domain_predicates.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "hedgemix/particle_filter.hpp"

namespace hedgemix {

namespace {

std::size_t lag_param(ParamReader& r) {
  auto lag = r.integer("lag", 1);
  if (lag < 1) r.fail("lag", "must be >= 1");
  return static_cast<std::size_t>(lag);
}

std::size_t window_param(ParamReader& r, const std::string& key) {
  auto w = r.integer(key);
  if (w < 1) r.fail(key, "window must be >= 1");
  return static_cast<std::size_t>(w);
}

PredicateSpec spec(std::string constructor, json params) {
  return PredicateSpec{std::move(constructor), std::move(params)};
}

// Fraction of nodes testing positive plus c times the fraction of untested ones.
std::optional<double> naive_rate(const HistoryView& h, std::size_t lag, double c) {
  auto obs = h.observation_back(lag);
  if (obs.empty()) return std::nullopt;
  double pos = 0, unknown = 0;
  for (auto o : obs) {
    pos += o == kPositive;
    unknown += o == kUnknown;
  }
  return (pos + c * unknown) / static_cast<double>(obs.size());
}

std::optional<double> mean_reward(const HistoryView& h, std::size_t w) {
  std::size_t k = std::min(w, h.size());
  if (k == 0) return std::nullopt;
  double total = 0;
  for (std::size_t lag = 1; lag <= k; ++lag) total += h.back(lag)->reward;
  return total / static_cast<double>(k);
}

}  // namespace

std::vector<PredicateSpec> random_bit_specs(std::size_t count, double p) {
  std::vector<PredicateSpec> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(spec("RandomBit", {{"p", p}, {"k", k}}));
  return out;
}

// -- rock-paper-scissors -----------------------------------------------------------

void register_rps_predicates(PredicateRegistry& registry) {
  registry.add({"IsRock", "opponent played rock `lag` rounds ago", {"lag"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto lag = lag_param(r);
                  return [lag](const HistoryView& h, std::uint64_t) {
                    auto obs = h.observation_back(lag);
                    return !obs.empty() && obs[0] == kRock ? 1 : 0;
                  };
                }});
  registry.add({"IsLose", "agent lost the round `lag` rounds ago", {"lag"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto lag = lag_param(r);
                  return [lag](const HistoryView& h, std::uint64_t) {
                    const Step* s = h.back(lag);
                    if (!s) return 0;
                    auto env = h.observation_back(lag)[0];
                    return (env + 3 - s->action) % 3 == 1 ? 1 : 0;
                  };
                }});
}

PredicatePools rps_pools() {
  PredicatePools pools;
  pools.informative = {spec("IsRock", {{"lag", 1}}), spec("IsLose", {{"lag", 1}})};
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (int k = 0; k < 2; ++k) pools.uninformative.push_back(spec("RandomBit", {{"p", p}, {"k", k}}));
  return pools;
}

// -- taxi --------------------------------------------------------------------------------

namespace {

enum class Target { kPassenger, kDestination };

void add_taxi_distance(PredicateRegistry& registry, const std::string& name, bool along_x, Target target) {
  ValueRange range = along_x ? ValueRange{-1.0, 1.0} : ValueRange{-4.0, 4.0};
  registry.add({name, "signed distance from the taxi, read out as a bit", {"op", "n", "i", "lo", "hi", "thresh"},
                [along_x, target, range](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  ValueFn value = [along_x, target](const HistoryView& h) -> std::optional<double> {
                    auto o = h.observation_back(1);
                    if (o.empty()) return std::nullopt;
                    int corner = target == Target::kPassenger ? o[2] : o[3];
                    const auto& c = kTaxiCorners[corner];
                    return along_x ? c[0] - static_cast<int>(o[0]) : c[1] - static_cast<int>(o[1]);
                  };
                  return make_readout(std::move(value), r, range);
                }});
}

}  // namespace

void register_taxi_predicates(PredicateRegistry& registry) {
  add_taxi_distance(registry, "XDistToPassenger", true, Target::kPassenger);
  add_taxi_distance(registry, "YDistToPassenger", false, Target::kPassenger);
  add_taxi_distance(registry, "XDistToDestination", true, Target::kDestination);
  add_taxi_distance(registry, "YDistToDestination", false, Target::kDestination);
  registry.add({"PassengerPickedUp", "passenger is in the taxi", {},
                [](ParamReader&, const PredicateRegistry&) -> Predicate::Eval {
                  return [](const HistoryView& h, std::uint64_t) {
                    auto o = h.observation_back(1);
                    return !o.empty() && o[4] == 1 ? 1 : 0;
                  };
                }});
}

PredicatePools taxi_pools() {
  PredicatePools pools;
  // bits 1-2 from the end are the reward, 3-11 the last observation
  for (int n = 3; n <= 11; ++n) pools.informative.push_back(spec("Suffix", {{"N", n}}));
  for (const char* name : {"XDistToPassenger", "XDistToDestination"})
    for (int i = 1; i <= 2; ++i) pools.informative.push_back(spec(name, {{"op", "bit"}, {"n", 2}, {"i", i}}));
  for (const char* name : {"YDistToPassenger", "YDistToDestination"})
    for (int i = 1; i <= 4; ++i) pools.informative.push_back(spec(name, {{"op", "bit"}, {"n", 4}, {"i", i}}));
  pools.informative.push_back(spec("PassengerPickedUp", json::object()));
  pools.uninformative = random_bit_specs(20);
  return pools;
}

// -- epidemic ------------------------------------------------------------------------------

namespace {

EpidemicParams read_theta(ParamReader& r, const EpidemicParams& base) {
  EpidemicParams p = base;
  if (!r.has("theta")) return p;
  const json& t = r.raw("theta");
  if (!t.is_object()) r.fail("theta", "expected an object");
  static const std::string labels = "SEIR";
  for (auto it = t.begin(); it != t.end(); ++it) {
    const std::string& k = it.key();
    if (!it->is_number()) r.fail("theta." + k, "expected a number");
    double v = it->get<double>();
    if (v < 0 || v > 1) r.fail("theta." + k, "probability outside [0,1]");
    auto label = [&](std::size_t prefix) {
      return k.size() == prefix + 1 ? labels.find(k.back()) : std::string::npos;
    };
    if (k == "beta") p.beta = v;
    else if (k == "sigma") p.sigma = v;
    else if (k == "gamma") p.gamma = v;
    else if (k == "rho") p.rho = v;
    else if (k.rfind("alpha_", 0) == 0 && label(6) != std::string::npos) p.alpha[label(6)] = v;
    else if (k.rfind("mu_", 0) == 0 && label(3) != std::string::npos) p.mu[label(3)] = v;
    else r.fail("theta." + k, "unknown model parameter");
  }
  return p;
}

struct FilterCaches {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<ParticleFilterCache>> by_key;
};

}  // namespace

void register_epidemic_predicates(PredicateRegistry& registry, std::shared_ptr<const EpidemicModel> model) {
  const std::vector<std::string> readout{"op", "n", "i", "lo", "hi", "thresh"};
  auto with = [&](std::vector<std::string> extra) {
    extra.insert(extra.end(), readout.begin(), readout.end());
    return extra;
  };

  registry.add({"NaiveInfectionRate", "positive fraction plus c times the untested fraction", with({"c"}),
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  double c = r.number("c", 0.3);
                  return make_readout([c](const HistoryView& h) { return naive_rate(h, 1, c); }, r,
                                      ValueRange{0.0, 1.0});
                }});
  registry.add({"InfectionRateOfChange", "change of the naive infection rate over one step", with({"c"}),
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  double c = r.number("c", 0.3);
                  ValueFn f = [c](const HistoryView& h) -> std::optional<double> {
                    auto now = naive_rate(h, 1, c), before = naive_rate(h, 2, c);
                    if (!now || !before) return std::nullopt;
                    return *now - *before;
                  };
                  return make_readout(std::move(f), r, ValueRange{-1.0, 1.0});
                }});
  registry.add({"PercentAction", "fraction of the last N steps that chose action a", with({"a", "N"}),
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto a = r.integer("a");
                  if (a < 0 || a >= kEpidemicActions) r.fail("a", "action outside the action space");
                  auto n = window_param(r, "N");
                  ValueFn f = [a, n](const HistoryView& h) -> std::optional<double> {
                    std::size_t k = std::min(n, h.size());
                    if (k == 0) return std::nullopt;
                    std::size_t hits = 0;
                    for (std::size_t lag = 1; lag <= k; ++lag) hits += h.back(lag)->action == static_cast<Action>(a);
                    return static_cast<double>(hits) / static_cast<double>(k);
                  };
                  return make_readout(std::move(f), r, ValueRange{0.0, 1.0});
                }});
  registry.add({"ActionSequenceIndicator", "the last k actions equal the given sequence, oldest first",
                {"actions"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto seq = r.integers("actions");
                  if (seq.empty()) r.fail("actions", "sequence is empty");
                  for (auto a : seq)
                    if (a < 0 || a >= kEpidemicActions) r.fail("actions", "action outside the action space");
                  return [seq](const HistoryView& h, std::uint64_t) {
                    const std::size_t k = seq.size();
                    if (h.size() < k) return 0;
                    for (std::size_t j = 0; j < k; ++j)
                      if (h.back(k - j)->action != static_cast<Action>(seq[j])) return 0;
                    return 1;
                  };
                }});
  const RewardCodec codec = model->reward_codec();
  const ValueRange reward_range{codec.r_min(), codec.r_max()};
  registry.add({"MAReward", "mean reward over the last w steps", with({"w"}),
                [reward_range](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto w = window_param(r, "w");
                  return make_readout([w](const HistoryView& h) { return mean_reward(h, w); }, r, reward_range);
                }});
  registry.add({"MARewardRatio", "ratio of two moving-average rewards", {"w1", "w2", "op", "thresh"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto w1 = window_param(r, "w1");
                  auto w2 = window_param(r, "w2");
                  if (r.text("op", "geq") != "geq") r.fail("op", "only \"geq\" is supported");
                  double thresh = r.number("thresh", 1.0);
                  return [w1, w2, thresh](const HistoryView& h, std::uint64_t) {
                    auto x = mean_reward(h, w1), y = mean_reward(h, w2);
                    if (!x || !y || *y == 0.0) return 0;
                    return *x / *y >= thresh ? 1 : 0;
                  };
                }});

  auto caches = std::make_shared<FilterCaches>();
  registry.add({"ParticleInfRate", "expected infection rate under a particle filter belief",
                with({"M", "theta"}),
                [model, caches](ParamReader& r, const PredicateRegistry& reg) -> Predicate::Eval {
                  auto m = r.integer("M", 100);
                  if (m < 1) r.fail("M", "needs at least one particle");
                  EpidemicParams theta = read_theta(r, model->config().params);
                  json key{{"M", m}, {"theta", r.has("theta") ? r.raw("theta") : json::object()}};
                  std::string k = "ParticleFilter" + key.dump();
                  std::shared_ptr<ParticleFilterCache> cache;
                  {
                    std::lock_guard lock(caches->mutex);
                    auto& slot = caches->by_key[k];
                    if (!slot) {
                      ParticleFilterConfig cfg{theta, static_cast<std::size_t>(m), reg.seed_for(k)};
                      slot = std::make_shared<ParticleFilterCache>(model, cfg);
                    }
                    cache = slot;
                  }
                  ValueFn f = [cache](const HistoryView& h) -> std::optional<double> {
                    return cache->infection_rate(h);
                  };
                  return make_readout(std::move(f), r, ValueRange{0.0, 1.0});
                }});
}

PredicatePools epidemic_pools(const EpidemicModel& model) {
  PredicatePools pools;
  const double n = static_cast<double>(model.size());
  for (double t : {0.02, 0.05, 0.1, 0.2, 0.3})
    pools.informative.push_back(spec("NaiveInfectionRate", {{"op", "geq"}, {"thresh", t}}));
  for (double t : {-0.02, 0.0, 0.02})
    pools.informative.push_back(spec("InfectionRateOfChange", {{"op", "geq"}, {"thresh", t}}));
  for (int a : {0, 1, 3, 5, 6, 8})
    pools.informative.push_back(spec("PercentAction", {{"a", a}, {"N", 10}, {"op", "geq"}, {"thresh", 0.5}}));
  for (auto seq : {std::vector<int>{0, 0}, std::vector<int>{1, 1}, std::vector<int>{6, 6}})
    pools.informative.push_back(spec("ActionSequenceIndicator", {{"actions", seq}}));
  for (int w : {5, 20})
    for (double f : {-0.1, -0.05})
      pools.informative.push_back(spec("MAReward", {{"w", w}, {"op", "geq"}, {"thresh", f * n}}));
  pools.informative.push_back(spec("MARewardRatio", {{"w1", 5}, {"w2", 20}, {"op", "geq"}, {"thresh", 1.0}}));
  for (int i = 1; i <= 5; ++i)
    pools.informative.push_back(spec("ParticleInfRate", {{"M", 100}, {"op", "bit"}, {"n", 5}, {"i", i}}));
  pools.uninformative = random_bit_specs(20);
  return pools;
}

}  // namespace hedgemix
