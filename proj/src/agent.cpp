#include "hedgemix/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hedgemix {

Action weighted_argmax(const std::vector<double>& weights, const std::vector<std::vector<double>>& q) {
  if (q.empty() || weights.size() != q.size()) throw std::invalid_argument("weighted_argmax: empty or mismatched input");
  std::vector<double> total(q.front().size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t a = 0; a < total.size(); ++a) total[a] += weights[i] * q[i][a];
  return static_cast<Action>(std::max_element(total.begin(), total.end()) - total.begin());
}

Agent::Agent(HistoryLayout layout, RewardCodec codec, AgentConfig config, std::uint64_t seed)
    : layout_(std::move(layout)),
      codec_(std::move(codec)),
      config_(config),
      seed_(seed),
      rng_(seed),
      history_(layout_),
      hedge_(config.eta) {
  if (codec_.levels() != layout_.reward.cardinality)
    throw std::invalid_argument("reward codec does not match the reward space");
  if (config_.max_specialists == 0) throw std::invalid_argument("max_specialists must be positive");
}

double Agent::epsilon_at(std::size_t t) const {
  return std::max(config_.epsilon_floor, config_.epsilon0 * std::pow(config_.epsilon_decay, static_cast<double>(t)));
}

Decision Agent::act() {
  Decision d;
  d.epsilon = epsilon();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (unif(rng_) < d.epsilon) {
    std::uniform_int_distribution<Action> pick(0, layout_.action.cardinality - 1);
    d.action = pick(rng_);
    d.explored = true;
    return d;
  }
  Decision g = plan();
  g.epsilon = d.epsilon;
  return g;
}

Decision Agent::plan() {
  if (pool_.empty()) throw std::logic_error("cannot plan without specialists");
  const std::size_t t = history_.size();
  auto weights = hedge_.normalized();
  double top = 0.0;
  for (auto& [id, w] : weights) top = std::max(top, w);
  std::vector<double> used;
  std::vector<std::vector<double>> qs;
  for (auto& [id, w] : weights) {
    if (w < config_.search_min_weight && w < top) continue;
    PlannerConfig pc;
    pc.horizon = config_.horizon;
    pc.simulations = config_.simulations;
    pc.ucb_c = config_.ucb_c;
    pc.seed = hash_combine(hash_combine(seed_, t), id);
    qs.push_back(q_estimate(specialist(id), states_.at(id), codec_, pc));
    used.push_back(w);
  }
  Decision d;
  d.action = weighted_argmax(used, qs);
  d.q.assign(qs.front().size(), 0.0);
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t a = 0; a < d.q.size(); ++a) d.q[a] += used[i] * qs[i][a];
  return d;
}

StepRecord Agent::update(Action a, std::span<const std::uint16_t> observation, double reward) {
  StepRecord rec;
  rec.t = history_.size();
  rec.epsilon = epsilon_at(rec.t);
  rec.action = a;
  rec.observation.assign(observation.begin(), observation.end());
  rec.reward = reward;
  rec.reward_symbol = codec_.encode(reward);
  history_.append(a, observation, rec.reward_symbol, reward);

  const HistoryView view(history_);
  std::map<ExpertId, double> log_probs;
  for (auto& sp : pool_) {
    const State prev = states_.at(sp->id());
    const State next = sp->state_of(view);
    auto seen = sp->observe(prev, a, next, rec.reward_symbol);
    sp->commit();
    if (!std::isfinite(seen.reward_log_prob))
      throw std::logic_error("specialist " + std::to_string(sp->id()) + " gave the observed reward probability zero");
    log_probs[sp->id()] = seen.reward_log_prob;
    rec.losses[sp->id()] = -seen.reward_log_prob;
    rec.states[sp->id()] = next;
    states_[sp->id()] = next;
  }
  if (!pool_.empty()) {
    LossRecord lr;
    lr.t = rec.t;
    lr.per_expert = rec.losses;
    lr.learner = -hedge_.mix_log_prob(log_probs);
    hedge_.incur(lr);
    rec.loss = lr.learner;
  }
  rec.weights = hedge_.normalized();
  return rec;
}

void Agent::pretrain(Specialist& sp) {
  const std::size_t t = history_.size();
  const std::size_t w = std::min(config_.pretrain_window, t);
  const std::size_t b = t - w;
  State prev = sp.state_of(HistoryView(history_, b, b));
  for (std::size_t k = b; k < t; ++k) {
    State next = sp.state_of(HistoryView(history_, b, k + 1));
    const Step& st = history_.step(k);
    sp.observe(prev, st.action, next, st.reward_symbol);
    prev = next;
  }
  sp.commit();
}

SpecialistId Agent::admit(std::vector<PredicatePtr> phi, bool pretrain_first, std::optional<double> inherited) {
  if (full()) throw std::logic_error("specialist pool is full");
  auto sp = std::make_unique<Specialist>(next_id_++, std::move(phi), layout_);
  sp->arrival = history_.size();
  if (pretrain_first) pretrain(*sp);
  const SpecialistId id = sp->id();
  states_[id] = sp->state_of(HistoryView(history_));
  if (config_.adaptive || hedge_.active_count() == 0) {
    hedge_.admit(id, config_.prior);
  } else {
    hedge_.admit_at(id, inherited ? *inherited : hedge_.min_log_weight(), config_.prior);
  }
  pool_.push_back(std::move(sp));
  return id;
}

SpecialistId Agent::inject(std::vector<PredicatePtr> phi, bool pretrain_first) {
  return admit(std::move(phi), pretrain_first, std::nullopt);
}

SpecialistId Agent::replace(SpecialistId old, std::vector<PredicatePtr> phi, bool pretrain_first) {
  const double lw = hedge_.log_weight(old);
  retire(old);
  return admit(std::move(phi), pretrain_first, lw);
}

void Agent::retire(SpecialistId id) {
  auto it = std::find_if(pool_.begin(), pool_.end(), [id](const auto& sp) { return sp->id() == id; });
  if (it == pool_.end()) throw std::out_of_range("no active specialist " + std::to_string(id));
  hedge_.retire(id);
  states_.erase(id);
  pool_.erase(it);
}

std::optional<SpecialistId> Agent::lowest_weight() const {
  std::optional<SpecialistId> best;
  double best_lw = 0.0;
  std::size_t best_arrival = 0;
  for (const auto& e : hedge_.active()) {
    if (!best || e.log_weight < best_lw || (e.log_weight == best_lw && e.arrival < best_arrival)) {
      best = e.id;
      best_lw = e.log_weight;
      best_arrival = e.arrival;
    }
  }
  return best;
}

SpecialistId Agent::drop_lowest() {
  auto id = lowest_weight();
  if (!id) throw std::logic_error("no specialist to drop");
  retire(*id);
  return *id;
}

Specialist& Agent::specialist(SpecialistId id) {
  for (auto& sp : pool_)
    if (sp->id() == id) return *sp;
  throw std::out_of_range("no active specialist " + std::to_string(id));
}

}  // namespace hedgemix
