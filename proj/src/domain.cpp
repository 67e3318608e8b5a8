#include "hedgemix/domain.hpp"

#include <set>
#include <stdexcept>

#include "hedgemix/domain_predicates.hpp"
#include "hedgemix/graph.hpp"

namespace hedgemix {

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T value_or(const json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("bad value for '" + key + "'");
  }
}

std::shared_ptr<const ContactGraph> build_graph(const json& g) {
  if (g.is_null()) return std::make_shared<const ContactGraph>(synth_graph(100, 6, 1));
  reject_unknown(g, {"synth", "edge_list"}, "env.graph");
  if (g.contains("edge_list")) return std::make_shared<const ContactGraph>(load_edge_list(g["edge_list"].get<std::string>()));
  const json& s = g.contains("synth") ? g["synth"] : json::object();
  reject_unknown(s, {"n", "degree", "seed"}, "env.graph.synth");
  return std::make_shared<const ContactGraph>(synth_graph(value_or<std::size_t>(s, "n", 100),
                                                          value_or<std::size_t>(s, "degree", 6),
                                                          value_or<std::uint64_t>(s, "seed", 1)));
}

EpidemicParams read_params(const json& p, EpidemicParams base) {
  reject_unknown(p, {"beta", "sigma", "gamma", "rho", "alpha_S", "alpha_E", "alpha_I", "alpha_R", "mu_S", "mu_E",
                     "mu_I", "mu_R"},
                 "env.params");
  base.beta = value_or(p, "beta", base.beta);
  base.sigma = value_or(p, "sigma", base.sigma);
  base.gamma = value_or(p, "gamma", base.gamma);
  base.rho = value_or(p, "rho", base.rho);
  const char* labels = "SEIR";
  for (int i = 0; i < 4; ++i) {
    base.alpha[i] = value_or(p, std::string("alpha_") + labels[i], base.alpha[i]);
    base.mu[i] = value_or(p, std::string("mu_") + labels[i], base.mu[i]);
  }
  return base;
}

}  // namespace

Domain make_domain(const std::string& name, const json& env_in, std::uint64_t predicate_seed) {
  const json env = env_in.is_null() ? json::object() : env_in;
  Domain d;
  d.name = name;
  d.registry = std::make_shared<PredicateRegistry>(predicate_seed);
  register_generic_predicates(*d.registry);

  if (name == "rps") {
    reject_unknown(env, {}, "env");
    d.layout = rps_layout();
    d.codec = RewardCodec::table({-1.0, 0.0, 1.0});
    d.make_env = [](std::uint64_t seed) { return std::make_unique<RpsEnvironment>(seed); };
    register_rps_predicates(*d.registry);
    d.pools = rps_pools();
    d.agent.horizon = 4;
    d.agent.simulations = 40;
    d.agent.epsilon0 = 0.999;
    d.agent.epsilon_decay = 0.9999;
    d.schedule.depth = 2;
  } else if (name == "taxi") {
    reject_unknown(env, {}, "env");
    d.layout = taxi_layout();
    d.codec = RewardCodec::table({-1.0, 0.0, 100.0});
    d.make_env = [](std::uint64_t seed) { return std::make_unique<TaxiEnvironment>(seed); };
    register_taxi_predicates(*d.registry);
    d.pools = taxi_pools();
    d.agent.horizon = 14;
    d.agent.simulations = 50;
    d.agent.epsilon0 = 0.999;
    d.agent.epsilon_decay = 0.9999;
    d.schedule.depth = 17;
  } else if (name == "epidemic") {
    reject_unknown(env,
                   {"graph", "params", "immunity", "quarantine_cost", "vaccinate_cost", "initial_exposed",
                    "terminal_bonus", "reward_levels"},
                   "env");
    EpidemicConfig cfg;
    if (env.contains("params")) cfg.params = read_params(env["params"], cfg.params);
    if (env.contains("immunity")) {
      auto im = env["immunity"].get<std::vector<double>>();
      if (im.size() != 3) throw std::invalid_argument("env.immunity needs three levels");
      std::copy(im.begin(), im.end(), cfg.immunity.begin());
    }
    cfg.quarantine_cost = value_or(env, "quarantine_cost", cfg.quarantine_cost);
    cfg.vaccinate_cost = value_or(env, "vaccinate_cost", cfg.vaccinate_cost);
    cfg.initial_exposed = value_or(env, "initial_exposed", cfg.initial_exposed);
    cfg.terminal_bonus = value_or(env, "terminal_bonus", cfg.terminal_bonus);
    auto levels = value_or<std::uint32_t>(env, "reward_levels", 64);
    auto model = std::make_shared<const EpidemicModel>(build_graph(env.value("graph", json())), cfg);
    d.epidemic = model;
    d.layout = model->layout(levels);
    d.codec = model->reward_codec(levels);
    d.make_env = [model, levels](std::uint64_t seed) {
      return std::make_unique<EpidemicEnvironment>(model, seed, levels);
    };
    register_epidemic_predicates(*d.registry, model);
    d.pools = epidemic_pools(*model);
    d.agent.horizon = 10;
    d.agent.simulations = 20;
    d.agent.epsilon0 = 0.9999;
    d.agent.epsilon_decay = 0.999999;
    d.schedule.depth = 20;
  } else {
    throw std::invalid_argument("unknown domain '" + name + "' (expected rps, taxi or epidemic)");
  }
  d.agent.max_specialists = 10;
  return d;
}

}  // namespace hedgemix
