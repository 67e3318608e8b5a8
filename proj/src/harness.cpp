#include "hedgemix/harness.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

namespace hedgemix {

namespace fs = std::filesystem;

bool is_natural(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::string format_double(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// -- commands -----------------------------------------------------------------------

json Command::to_json() const {
  json j;
  j["t"] = t;
  if (kind == Kind::kRetire) {
    j["kind"] = "retire";
    j["id"] = id;
    return j;
  }
  j["kind"] = "inject";
  json specs = json::array();
  for (const auto& s : inject.specs) specs.push_back(s.to_json());
  j["specs"] = specs;
  j["pretrain"] = inject.pretrain;
  if (inject.drop) j["drop"] = *inject.drop;
  else if (inject.drop_lowest) j["drop"] = "lowest";
  return j;
}

Command parse_command(const json& j, const PredicateRegistry& registry, bool allow_time) {
  if (!j.is_object()) throw SpecError("command must be an object", {});
  std::set<std::string> allowed{"kind", "specs", "pretrain", "drop", "id"};
  if (allow_time) allowed.insert("t");
  std::vector<std::string> unknown;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) unknown.push_back(it.key());
  if (!unknown.empty()) throw SpecError("unknown command field '" + unknown.front() + "'", unknown);

  Command c;
  std::string kind = "inject";
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw SpecError("kind must be a string", {"kind"});
    kind = j["kind"].get<std::string>();
  }
  if (j.contains("t")) {
    if (!is_natural(j["t"])) throw SpecError("t must be a non-negative integer", {"t"});
    c.t = j["t"].get<std::size_t>();
  }
  if (kind == "retire") {
    c.kind = Command::Kind::kRetire;
    if (!j.contains("id") || !is_natural(j["id"])) throw SpecError("retire needs an integer id", {"id"});
    c.id = j["id"].get<SpecialistId>();
    return c;
  }
  if (kind != "inject") throw SpecError("unknown command kind '" + kind + "'", {"kind"});
  if (!j.contains("specs") || !j["specs"].is_array() || j["specs"].empty())
    throw SpecError("inject needs a non-empty 'specs' array", {"specs"});
  if (j["specs"].size() > Specialist::kMaxPredicates) throw SpecError("too many predicates", {"specs"});
  for (std::size_t i = 0; i < j["specs"].size(); ++i) {
    const std::string where = "specs[" + std::to_string(i) + "]";
    try {
      PredicateSpec s = PredicateSpec::from_json(j["specs"][i]);
      registry.validate(s);
      c.inject.specs.push_back(std::move(s));
    } catch (const SpecError& e) {
      std::vector<std::string> fields;
      for (const auto& f : e.fields()) fields.push_back(where + "." + f);
      if (fields.empty()) fields.push_back(where);
      throw SpecError(where + ": " + e.what(), fields);
    }
  }
  if (j.contains("pretrain")) {
    if (!j["pretrain"].is_boolean()) throw SpecError("pretrain must be a boolean", {"pretrain"});
    c.inject.pretrain = j["pretrain"].get<bool>();
  }
  if (j.contains("drop")) {
    const json& d = j["drop"];
    if (d.is_string() && d.get<std::string>() == "lowest") c.inject.drop_lowest = true;
    else if (is_natural(d)) c.inject.drop = d.get<SpecialistId>();
    else throw SpecError("drop must be a specialist id or \"lowest\"", {"drop"});
  }
  c.inject.source = "operator";
  return c;
}

// -- config -------------------------------------------------------------------------------

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j,
             {"domain", "steps", "seeds", "policy", "fixed_action", "agent", "env", "schedule", "injection_mode",
              "commands", "smoothing", "output", "start_paused", "step_delay_ms"},
             "config");
  ExperimentConfig c;
  if (j.contains("domain")) c.domain = get_as<std::string>(j, "domain");
  if (j.contains("steps")) c.steps = get_as<std::size_t>(j, "steps");
  if (j.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds");
  if (j.contains("policy")) c.policy = get_as<std::string>(j, "policy");
  if (j.contains("fixed_action")) c.fixed_action = get_as<Action>(j, "fixed_action");
  if (j.contains("agent")) c.agent = j["agent"];
  if (j.contains("env")) c.env = j["env"];
  if (j.contains("schedule")) c.schedule = j["schedule"];
  if (j.contains("injection_mode")) c.injection_mode = get_as<std::string>(j, "injection_mode");
  if (j.contains("commands")) c.commands = j["commands"];
  if (j.contains("smoothing")) c.smoothing = get_as<std::size_t>(j, "smoothing");
  if (j.contains("output")) c.output = get_as<std::string>(j, "output");
  if (j.contains("start_paused")) c.start_paused = get_as<bool>(j, "start_paused");
  if (j.contains("step_delay_ms")) c.step_delay_ms = get_as<std::size_t>(j, "step_delay_ms");

  if (c.seeds.empty()) throw ConfigError("config needs at least one seed");
  if (c.policy != "agent" && c.policy != "random" && c.policy != "fixed")
    throw ConfigError("policy must be agent, random or fixed");
  if (c.injection_mode != "simulated" && c.injection_mode != "live" && c.injection_mode != "both")
    throw ConfigError("injection_mode must be simulated, live or both");
  if (c.smoothing == 0) throw ConfigError("smoothing window must be positive");
  if (!c.commands.is_array()) throw ConfigError("commands must be an array");
  if (!c.agent.is_object() || !c.schedule.is_object() || !(c.env.is_object() || c.env.is_null()))
    throw ConfigError("agent, env and schedule must be objects");
  // validate everything that depends on the domain up front
  Domain d = make_domain(c.domain, c.env, 0);
  (void)resolve_agent(d.agent, c.agent);
  (void)resolve_schedule(d.schedule, c.schedule);
  if (c.fixed_action >= d.layout.action.cardinality) throw ConfigError("fixed_action outside the action space");
  for (const auto& cmd : c.commands) (void)parse_command(cmd, *d.registry, true);
  return c;
}

json ExperimentConfig::to_json() const {
  Domain d = make_domain(domain, env, 0);
  AgentConfig a = resolve_agent(d.agent, agent);
  InjectionSchedule s = resolve_schedule(d.schedule, schedule);
  json ja{{"eta", a.eta},
          {"prior", a.prior},
          {"horizon", a.horizon},
          {"simulations", a.simulations},
          {"epsilon0", a.epsilon0},
          {"epsilon_decay", a.epsilon_decay},
          {"epsilon_floor", a.epsilon_floor},
          {"max_specialists", a.max_specialists},
          {"adaptive", a.adaptive},
          {"pretrain_window", a.pretrain_window},
          {"search_min_weight", a.search_min_weight}};
  ja["ucb_c"] = a.ucb_c ? json(*a.ucb_c) : json(nullptr);
  json js{{"enabled", s.enabled}, {"period", s.period}, {"p0", s.p0},
          {"dp", s.dp},           {"p_max", s.p_max},   {"depth", s.depth}};
  return json{{"domain", domain},
              {"steps", steps},
              {"seeds", seeds},
              {"policy", policy},
              {"fixed_action", fixed_action},
              {"agent", ja},
              {"env", env.is_null() ? json::object() : env},
              {"schedule", js},
              {"injection_mode", injection_mode},
              {"commands", commands},
              {"smoothing", smoothing},
              {"output", output},
              {"start_paused", start_paused},
              {"step_delay_ms", step_delay_ms}};
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

AgentConfig resolve_agent(const AgentConfig& defaults, const json& o) {
  check_keys(o,
             {"eta", "prior", "horizon", "simulations", "ucb_c", "epsilon0", "epsilon_decay", "epsilon_floor",
              "max_specialists", "adaptive", "pretrain_window", "search_min_weight"},
             "agent");
  AgentConfig a = defaults;
  if (o.contains("eta")) a.eta = get_as<double>(o, "eta");
  if (o.contains("prior")) a.prior = get_as<double>(o, "prior");
  if (o.contains("horizon")) a.horizon = get_as<std::uint32_t>(o, "horizon");
  if (o.contains("simulations")) a.simulations = get_as<std::uint32_t>(o, "simulations");
  if (o.contains("ucb_c") && !o["ucb_c"].is_null()) a.ucb_c = get_as<double>(o, "ucb_c");
  if (o.contains("epsilon0")) a.epsilon0 = get_as<double>(o, "epsilon0");
  if (o.contains("epsilon_decay")) a.epsilon_decay = get_as<double>(o, "epsilon_decay");
  if (o.contains("epsilon_floor")) a.epsilon_floor = get_as<double>(o, "epsilon_floor");
  if (o.contains("max_specialists")) a.max_specialists = get_as<std::size_t>(o, "max_specialists");
  if (o.contains("adaptive")) a.adaptive = get_as<bool>(o, "adaptive");
  if (o.contains("pretrain_window")) a.pretrain_window = get_as<std::size_t>(o, "pretrain_window");
  if (o.contains("search_min_weight")) a.search_min_weight = get_as<double>(o, "search_min_weight");
  if (!(a.eta > 0) || !(a.prior > 0)) throw ConfigError("agent.eta and agent.prior must be positive");
  if (a.simulations == 0) throw ConfigError("agent.simulations must be positive");
  if (a.max_specialists == 0) throw ConfigError("agent.max_specialists must be positive");
  return a;
}

InjectionSchedule resolve_schedule(const InjectionSchedule& defaults, const json& o) {
  check_keys(o, {"enabled", "period", "p0", "dp", "p_max", "depth"}, "schedule");
  InjectionSchedule s = defaults;
  if (o.contains("enabled")) s.enabled = get_as<bool>(o, "enabled");
  if (o.contains("period")) s.period = get_as<std::size_t>(o, "period");
  if (o.contains("p0")) s.p0 = get_as<double>(o, "p0");
  if (o.contains("dp")) s.dp = get_as<double>(o, "dp");
  if (o.contains("p_max")) s.p_max = get_as<double>(o, "p_max");
  if (o.contains("depth")) s.depth = get_as<std::size_t>(o, "depth");
  if (s.period == 0) throw ConfigError("schedule.period must be positive");
  if (s.depth == 0 || s.depth > Specialist::kMaxPredicates) throw ConfigError("schedule.depth must be in 1..64");
  return s;
}

// -- session ---------------------------------------------------------------------------------

Session::Session(const ExperimentConfig& config, std::uint64_t seed, std::optional<fs::path> out_dir)
    : config_(config),
      seed_(seed),
      domain_(make_domain(config.domain, config.env, split_seed(seed, Stream::kPredicate))),
      policy_rng_(hash_combine(split_seed(seed, Stream::kAgent), 0x9011c7)),
      out_(std::move(out_dir)) {
  AgentConfig ac = resolve_agent(domain_.agent, config_.agent);
  InjectionSchedule sc = resolve_schedule(domain_.schedule, config_.schedule);
  if (config_.injection_mode == "live") sc.enabled = false;
  env_ = domain_.make_env(split_seed(seed, Stream::kEnvironment));
  agent_ = std::make_unique<Agent>(domain_.layout, domain_.codec, ac, split_seed(seed, Stream::kAgent));
  injector_ = std::make_unique<Injector>(sc, domain_.pools, split_seed(seed, Stream::kInjector));
  for (const auto& cj : config_.commands) scripted_.push_back(parse_command(cj, *domain_.registry, true));
  std::stable_sort(scripted_.begin(), scripted_.end(), [](const Command& a, const Command& b) { return a.t < b.t; });

  if (out_) {
    fs::create_directories(*out_);
    auto open = [&](std::ofstream& f, const char* name, const char* header) {
      f.open(*out_ / name, std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + (*out_ / name).string());
      if (header) f << header << '\n';
    };
    open(steps_csv_, "steps.csv", "t,action,reward,loss,epsilon");
    open(weights_csv_, "weights.csv", "t,specialist_id,weight,arrival");
    open(events_csv_, "events.csv", "t,kind,specialist_id,detail");
    open(losses_csv_, "losses.csv", "t,specialist_id,loss");
    open(commands_log_, "commands.jsonl", nullptr);
  }
  for (auto& c : injector_->initial(ac.max_specialists)) admit(c, 0);
}

Session::~Session() = default;

void Session::log_event(std::size_t t, const std::string& kind, SpecialistId id, const std::string& detail) {
  spdlog::debug("t={} {} specialist {} {}", t, kind, id, detail);
  if (events_csv_.is_open()) events_csv_ << t << ',' << kind << ',' << id << ',' << csv_escape(detail) << '\n';
  if (on_event) on_event(t, kind, id, detail);
}

SpecialistId Session::admit(const InjectionCommand& c, std::size_t t) {
  std::vector<PredicatePtr> phi;
  for (const auto& s : c.specs) phi.push_back(domain_.registry->build(s));
  std::optional<SpecialistId> drop = c.drop;
  if (!drop && c.drop_lowest && agent_->full()) drop = agent_->lowest_weight();
  SpecialistId id;
  if (drop) {
    id = agent_->replace(*drop, std::move(phi), c.pretrain);
    log_event(t, "retire", *drop, c.drop ? "dropped by " + c.source : "lowest weight");
  } else {
    id = agent_->inject(std::move(phi), c.pretrain);
  }
  json specs = json::array();
  for (const auto& s : c.specs) specs.push_back(s.to_json());
  log_event(t, "admit", id, c.source + " " + specs.dump());
  return id;
}

CommandResult Session::apply(const Command& c) {
  boundary();
  const std::size_t now = t();
  CommandResult res;
  if (c.kind == Command::Kind::kRetire) {
    if (!agent_->hedge().is_active(c.id)) {
      res.status = 404;
      res.body = {{"error", "no active specialist " + std::to_string(c.id)}, {"fields", {"id"}}};
      return res;
    }
    if (agent_->pool().size() == 1) {
      res.status = 409;
      res.body = {{"error", "cannot retire the last specialist"}, {"fields", {"id"}}};
      return res;
    }
    agent_->retire(c.id);
    log_event(now, "retire", c.id, "operator");
    res.body = {{"id", c.id}, {"applied_at", now}};
  } else {
    if (c.inject.drop && !agent_->hedge().is_active(*c.inject.drop)) {
      res.status = 404;
      res.body = {{"error", "no active specialist " + std::to_string(*c.inject.drop)}, {"fields", {"drop"}}};
      return res;
    }
    if (agent_->full() && !c.inject.drop && !c.inject.drop_lowest) {
      res.status = 409;
      res.body = {{"error", "specialist pool is full; give a drop directive"}, {"fields", {"drop"}}};
      return res;
    }
    SpecialistId id = admit(c.inject, now);
    res.body = {{"id", id}, {"applied_at", now}};
  }
  Command logged = c;
  logged.t = now;
  if (commands_log_.is_open()) commands_log_ << logged.to_json().dump() << '\n';
  return res;
}

void Session::boundary() {
  const std::size_t now = t();
  if (boundary_done_ == now) return;
  boundary_done_ = now;
  if (auto c = injector_->tick(now)) admit(*c, now);
  while (next_scripted_ < scripted_.size() && scripted_[next_scripted_].t <= now) {
    const Command& c = scripted_[next_scripted_++];
    auto res = apply(c);
    if (res.status != 200) spdlog::warn("scripted command at t={} rejected: {}", now, res.body.dump());
  }
}

const StepRecord& Session::step() {
  const std::size_t now = t();
  try {
    boundary();
    Decision d;
    if (config_.policy == "agent") {
      d = agent_->act();
    } else if (config_.policy == "random") {
      std::uniform_int_distribution<Action> pick(0, domain_.layout.action.cardinality - 1);
      d.action = pick(policy_rng_);
      d.explored = true;
    } else {
      d.action = config_.fixed_action;
    }
    Percept p = env_->step(d.action);
    last_ = agent_->update(d.action, p.observation, p.reward);
    last_.explored = d.explored;
    double wsum = 0.0;
    for (auto& [id, w] : last_.weights) wsum += w;
    if (!last_.weights.empty() && std::abs(wsum - 1.0) > 1e-9)
      throw std::logic_error("normalized weights sum to " + format_double(wsum));
  } catch (const std::exception& e) {
    throw std::runtime_error("step " + std::to_string(now) + ": " + e.what());
  }

  rewards_.push_back(last_.reward);
  reward_total_ += last_.reward;
  window_.push_back(last_.reward);
  window_sum_ += last_.reward;
  if (window_.size() > config_.smoothing) {
    window_sum_ -= window_.front();
    window_.pop_front();
  }
  if (out_) {
    steps_csv_ << now << ',' << last_.action << ',' << format_double(last_.reward) << ','
               << format_double(last_.loss) << ',' << format_double(last_.epsilon) << '\n';
    for (auto& [id, w] : last_.weights)
      weights_csv_ << now << ',' << id << ',' << format_double(w) << ','
                   << agent_->specialist(id).arrival << '\n';
    for (auto& [id, l] : last_.losses) losses_csv_ << now << ',' << id << ',' << format_double(l) << '\n';
  }
  if (on_step) on_step(last_);
  return last_;
}

void Session::run() {
  while (!done()) {
    step();
    if (t() % 10000 == 0) spdlog::info("seed {} t={} smoothed reward {:.4f}", seed_, t(), smoothed_reward());
  }
  flush();
}

void Session::flush() {
  for (auto* f : {&steps_csv_, &weights_csv_, &events_csv_, &losses_csv_, &commands_log_})
    if (f->is_open()) f->flush();
}

double Session::smoothed_reward() const {
  return window_.empty() ? 0.0 : window_sum_ / static_cast<double>(window_.size());
}

json Session::step_event(const StepRecord& rec) const {
  json w = json::array();
  for (auto& [id, x] : rec.weights) w.push_back({{"id", id}, {"weight", x}});
  return json{{"t", rec.t},           {"action", rec.action},   {"reward", rec.reward},
              {"loss", rec.loss},     {"epsilon", rec.epsilon}, {"smoothed_reward", smoothed_reward()},
              {"weights", w}};
}

json Session::status() const {
  json pool = json::array();
  for (auto& [id, w] : agent_->hedge().normalized()) {
    const auto& sp = agent_->specialist(id);
    json specs = json::array();
    for (const auto& s : sp.specs()) specs.push_back(s.to_json());
    pool.push_back({{"id", id}, {"weight", w}, {"arrival", sp.arrival}, {"specs", specs}});
  }
  return json{{"t", t()},
              {"steps", config_.steps},
              {"domain", domain_.name},
              {"seed", seed_},
              {"epsilon", agent_->epsilon()},
              {"reward", {{"smoothed", smoothed_reward()}, {"mean", mean_reward()}, {"window", config_.smoothing}}},
              {"max_specialists", agent_->config().max_specialists},
              {"pool", pool},
              {"registry", domain_.registry->manifest()}};
}

// -- batch runs -----------------------------------------------------------------------------------

std::vector<double> smooth(const std::vector<double>& x, std::size_t window) {
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    if (i >= window) sum -= x[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

RunSummary run_experiment(const ExperimentConfig& config) {
  RunSummary summary;
  summary.output = config.output;
  fs::create_directories(summary.output);
  {
    std::ofstream cfg(summary.output / "config.json", std::ios::trunc);
    if (!cfg) throw std::runtime_error("cannot write " + (summary.output / "config.json").string());
    cfg << config.to_json().dump(2) << '\n';
  }
  for (auto seed : config.seeds) {
    spdlog::info("running {} seed {} for {} steps", config.domain, seed, config.steps);
    Session s(config, seed, summary.output / ("seed_" + std::to_string(seed)));
    s.run();
    summary.seeds.push_back(seed);
    summary.rewards.push_back(s.rewards());
  }
  std::ofstream agg(summary.output / "aggregate.csv", std::ios::trunc);
  if (!agg) throw std::runtime_error("cannot write " + (summary.output / "aggregate.csv").string());
  agg << "t,mean,std\n";
  std::vector<std::vector<double>> smoothed;
  for (const auto& r : summary.rewards) smoothed.push_back(smooth(r, config.smoothing));
  const double n = static_cast<double>(smoothed.size());
  for (std::size_t t = 0; t < config.steps; ++t) {
    double mean = 0.0;
    for (const auto& s : smoothed) mean += s[t];
    mean /= n;
    double var = 0.0;
    for (const auto& s : smoothed) var += (s[t] - mean) * (s[t] - mean);
    double sd = smoothed.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    agg << t << ',' << format_double(mean) << ',' << format_double(sd) << '\n';
  }
  return summary;
}

json load_command_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open command log '" + path.string() + "'");
  json out = json::array();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hedgemix
