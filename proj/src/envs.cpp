#include "hedgemix/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hedgemix {

// -- RPS ----------------------------------------------------------------------------

double rps_payoff(std::uint16_t agent, std::uint16_t env) {
  if (agent == env) return 0.0;
  // paper beats rock, scissors beats paper, rock beats scissors
  return (agent + 3 - env) % 3 == 1 ? 1.0 : -1.0;
}

RpsOutcome rps_step(const std::optional<RpsRound>& previous, Action agent, Rng& rng) {
  if (agent > kScissors) throw std::domain_error("RPS action out of range");
  std::uint16_t env;
  if (previous && previous->env_move == kRock && rps_payoff(previous->agent_move, kRock) < 0) {
    env = kRock;
  } else {
    env = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(0, 2)(rng));
  }
  return {env, rps_payoff(static_cast<std::uint16_t>(agent), env)};
}

HistoryLayout rps_layout() {
  return HistoryLayout{SymbolSpace::of("move", 3), {SymbolSpace::of("opponent", 3)},
                       SymbolSpace::of("reward", 3)};
}

RpsEnvironment::RpsEnvironment(std::uint64_t seed) : layout_(rps_layout()), rng_(seed) {}

Percept RpsEnvironment::step(Action a) {
  auto out = rps_step(previous_, a, rng_);
  previous_ = RpsRound{out.env_move, static_cast<std::uint16_t>(a)};
  return Percept{{out.env_move}, out.reward};
}

// -- Taxi -----------------------------------------------------------------------------

TaxiState taxi_reset(Rng& rng) {
  std::uniform_int_distribution<int> corner(0, 3);
  TaxiState s;
  s.x = std::uniform_int_distribution<int>(0, kTaxiRows - 1)(rng);
  s.y = std::uniform_int_distribution<int>(0, kTaxiCols - 1)(rng);
  s.passenger = corner(rng);
  do {
    s.destination = corner(rng);
  } while (s.destination == s.passenger);
  s.in_taxi = false;
  return s;
}

TaxiOutcome taxi_step(const TaxiState& state, Action action, Rng& rng) {
  TaxiOutcome out{state, 0.0, false};
  TaxiState& s = out.next;
  auto move = [&](int dx, int dy) {
    int nx = s.x + dx, ny = s.y + dy;
    if (nx < 0 || nx >= kTaxiRows || ny < 0 || ny >= kTaxiCols) {
      out.reward = -1.0;
      return;
    }
    s.x = nx;
    s.y = ny;
  };
  switch (action) {
    case kNorth: move(-1, 0); break;
    case kSouth: move(1, 0); break;
    case kEast: move(0, 1); break;
    case kWest: move(0, -1); break;
    case kPickup: {
      const auto& c = kTaxiCorners[s.passenger];
      if (!s.in_taxi && s.x == c[0] && s.y == c[1]) s.in_taxi = true;
      break;
    }
    case kDropoff: {
      const auto& c = kTaxiCorners[s.destination];
      if (s.in_taxi && s.x == c[0] && s.y == c[1]) {
        out.reward = 100.0;
        out.delivered = true;
        // new passenger and destination; the taxi stays where it is
        std::uniform_int_distribution<int> corner(0, 3);
        s.passenger = corner(rng);
        do {
          s.destination = corner(rng);
        } while (s.destination == s.passenger);
        s.in_taxi = false;
      }
      break;
    }
    default:
      throw std::domain_error("taxi action out of range");
  }
  return out;
}

std::vector<std::uint16_t> taxi_observation(const TaxiState& s) {
  return {static_cast<std::uint16_t>(s.x), static_cast<std::uint16_t>(s.y),
          static_cast<std::uint16_t>(s.passenger), static_cast<std::uint16_t>(s.destination),
          static_cast<std::uint16_t>(s.in_taxi ? 1 : 0)};
}

HistoryLayout taxi_layout() {
  return HistoryLayout{SymbolSpace::of("taxi_action", 6),
                       {SymbolSpace::of("x", kTaxiRows), SymbolSpace::of("y", kTaxiCols),
                        SymbolSpace::of("passenger", 4), SymbolSpace::of("destination", 4),
                        SymbolSpace::of("in_taxi", 2)},
                       SymbolSpace::of("reward", 3)};
}

TaxiEnvironment::TaxiEnvironment(std::uint64_t seed) : layout_(taxi_layout()), rng_(seed) {
  state_ = taxi_reset(rng_);
}

Percept TaxiEnvironment::step(Action a) {
  auto out = taxi_step(state_, a, rng_);
  state_ = out.next;
  return Percept{taxi_observation(state_), out.reward};
}

// -- Epidemic ---------------------------------------------------------------------------

EpidemicAction decode_epidemic_action(Action a) {
  if (a >= kEpidemicActions) throw std::domain_error("epidemic action out of range");
  EpidemicAction out;
  if (a == 0) return out;
  if (a <= 5) {
    out.kind = EpidemicAction::Kind::kQuarantine;
    out.hi = 0.2 * a;
    return out;
  }
  out.kind = EpidemicAction::Kind::kVaccinate;
  out.lo = 0.2 * (a - 6);
  out.hi = out.lo + 0.2;
  return out;
}

std::string epidemic_action_name(Action a) {
  auto act = decode_epidemic_action(a);
  char buf[64];
  switch (act.kind) {
    case EpidemicAction::Kind::kDoNothing: return "DoNothing";
    case EpidemicAction::Kind::kQuarantine:
      std::snprintf(buf, sizeof buf, "Quarantine(%.1f)", act.hi);
      return buf;
    case EpidemicAction::Kind::kVaccinate:
      std::snprintf(buf, sizeof buf, "Vaccinate(%.1f,%.1f)", act.lo, act.hi);
      return buf;
  }
  return "?";
}

double epidemic_action_cost(Action a, std::size_t n, const EpidemicConfig& config) {
  auto act = decode_epidemic_action(a);
  switch (act.kind) {
    case EpidemicAction::Kind::kDoNothing: return 0.0;
    case EpidemicAction::Kind::kQuarantine: return config.quarantine_cost * act.hi * n;
    case EpidemicAction::Kind::kVaccinate: return config.vaccinate_cost * (act.hi - act.lo) * n;
  }
  return 0.0;
}

std::array<double, 4> transition_row(Label from, unsigned k, double omega, const EpidemicParams& p) {
  std::array<double, 4> row{0, 0, 0, 0};
  switch (from) {
    case Label::S: {
      double expose = (1.0 - std::pow(1.0 - p.beta, static_cast<double>(k))) / omega;
      row[0] = 1.0 - expose;
      row[1] = expose;
      break;
    }
    case Label::E:
      row[1] = 1.0 - p.sigma;
      row[2] = p.sigma;
      break;
    case Label::I:
      row[2] = 1.0 - p.gamma;
      row[3] = p.gamma;
      break;
    case Label::R:
      row[3] = 1.0 - p.rho;
      row[0] = p.rho;
      break;
  }
  return row;
}

std::array<double, 3> observation_row(Label label, const EpidemicParams& p) {
  auto i = static_cast<std::size_t>(label);
  double a = p.alpha[i], m = p.mu[i];
  return {a * m, a * (1.0 - m), 1.0 - a};
}

EpidemicModel::EpidemicModel(std::shared_ptr<const ContactGraph> graph, EpidemicConfig config)
    : graph_(std::move(graph)), config_(config) {
  if (!graph_ || graph_->n == 0) throw std::invalid_argument("epidemic model needs a non-empty graph");
}

HistoryLayout EpidemicModel::layout(std::uint32_t reward_levels) const {
  HistoryLayout l;
  l.action = SymbolSpace::of("intervention", kEpidemicActions);
  l.observation.assign(graph_->n, SymbolSpace::of("test", 3));
  l.reward = SymbolSpace::of("reward", reward_levels);
  return l;
}

RewardCodec EpidemicModel::reward_codec(std::uint32_t levels) const {
  const double n = static_cast<double>(graph_->n);
  double max_cost = 0.0;
  for (Action a = 0; a < kEpidemicActions; ++a) max_cost = std::max(max_cost, epidemic_action_cost(a, graph_->n, config_));
  return RewardCodec::linear(-(n + max_cost), config_.terminal_bonus * n, levels);
}

EpidemicState EpidemicModel::initial_state(Rng& rng) const {
  const std::size_t n = graph_->n;
  EpidemicState s;
  s.label.assign(n, Label::S);
  s.immunity.assign(n, 0);
  s.quarantined.assign(n, 0);
  auto seeds = static_cast<std::size_t>(std::ceil(config_.initial_exposed * n - 1e-9));
  seeds = std::clamp<std::size_t>(seeds, 1, n);
  std::vector<NodeId> nodes(n);
  for (NodeId i = 0; i < n; ++i) nodes[i] = i;
  for (std::size_t i = 0; i < seeds; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(nodes[i], nodes[pick(rng)]);
    s.label[nodes[i]] = Label::E;
  }
  return s;
}

void EpidemicModel::apply_action(EpidemicState& state, Action a) const {
  std::fill(state.quarantined.begin(), state.quarantined.end(), 0);
  auto act = decode_epidemic_action(a);
  switch (act.kind) {
    case EpidemicAction::Kind::kDoNothing: break;
    case EpidemicAction::Kind::kQuarantine:
      for (NodeId v : graph_->rank_band(0.0, act.hi)) state.quarantined[v] = 1;
      break;
    case EpidemicAction::Kind::kVaccinate: {
      for (NodeId v : graph_->rank_band(act.lo, act.hi)) {
        if (static_cast<std::size_t>(state.immunity[v]) + 1 < config_.immunity.size()) ++state.immunity[v];
      }
      break;
    }
  }
}

std::vector<unsigned> EpidemicModel::infectious_neighbours(const EpidemicState& state) const {
  std::vector<unsigned> k(graph_->n, 0);
  for (auto [u, v] : graph_->edges) {
    if (state.quarantined[u] || state.quarantined[v]) continue;
    if (state.label[u] == Label::I) ++k[v];
    if (state.label[v] == Label::I) ++k[u];
  }
  return k;
}

void EpidemicModel::evolve(EpidemicState& state, const EpidemicParams& params, Rng& rng) const {
  auto k = infectious_neighbours(state);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t v = 0; v < graph_->n; ++v) {
    auto row = transition_row(state.label[v], k[v], config_.immunity[state.immunity[v]], params);
    double u = unif(rng);
    std::size_t next = 0;
    double acc = row[0];
    while (next < 3 && u >= acc) acc += row[++next];
    state.label[v] = static_cast<Label>(next);
  }
}

std::vector<std::uint16_t> EpidemicModel::observe(const EpidemicState& state, const EpidemicParams& params,
                                                  Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint16_t> obs(graph_->n);
  for (std::size_t v = 0; v < graph_->n; ++v) {
    auto row = observation_row(state.label[v], params);
    double u = unif(rng);
    obs[v] = u < row[0] ? kPositive : (u < row[0] + row[1] ? kNegative : kUnknown);
  }
  return obs;
}

bool EpidemicModel::terminated(const EpidemicState& state) {
  return std::none_of(state.label.begin(), state.label.end(),
                      [](Label l) { return l == Label::E || l == Label::I; });
}

EpidemicEnvironment::EpidemicEnvironment(std::shared_ptr<const EpidemicModel> model, std::uint64_t seed,
                                         std::uint32_t reward_levels)
    : model_(std::move(model)), layout_(model_->layout(reward_levels)), rng_(seed) {
  state_ = model_->initial_state(rng_);
}

Percept EpidemicEnvironment::step(Action a) {
  model_->apply_action(state_, a);
  model_->evolve(state_, model_->config().params, rng_);
  Percept p;
  p.observation = model_->observe(state_, model_->config().params, rng_);
  auto positives = std::count(p.observation.begin(), p.observation.end(), kPositive);
  p.reward = -static_cast<double>(positives) - epidemic_action_cost(a, model_->size(), model_->config());
  if (EpidemicModel::terminated(state_)) {
    p.reward += model_->config().terminal_bonus * static_cast<double>(model_->size());
    state_ = model_->initial_state(rng_);
    ++episodes_;
  }
  return p;
}

}  // namespace hedgemix
