#include "hedgemix/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hedgemix {

std::uint32_t uct_select(std::span<const ActionStats> children, std::uint64_t parent_visits, double c) {
  if (children.empty()) throw std::invalid_argument("uct_select on a node without actions");
  for (std::uint32_t a = 0; a < children.size(); ++a)
    if (children[a].visits == 0) return a;
  const double log_n = std::log(static_cast<double>(std::max<std::uint64_t>(parent_visits, 1)));
  std::uint32_t best = 0;
  double best_score = -INFINITY;
  for (std::uint32_t a = 0; a < children.size(); ++a) {
    const auto& ch = children[a];
    double n = static_cast<double>(ch.visits);
    double score = ch.value_sum / n + c * std::sqrt(log_n / n);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

double rollout(Specialist& sp, State s, std::uint32_t steps, const RewardCodec& codec, Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> pick(0, sp.action_count() - 1);
  double total = 0.0;
  for (std::uint32_t k = 0; k < steps; ++k) {
    auto [next, r] = sp.sample(s, pick(rng), rng);
    total += codec.decode(r);
    s = next;
  }
  return total;
}

namespace {

// Decision nodes and chance outcomes live in flat arenas; a decision node's
// actions occupy a contiguous block of `ActionStats` plus outcome lists.
class Search {
 public:
  Search(Specialist& sp, const RewardCodec& codec, const PlannerConfig& cfg)
      : sp_(sp), codec_(codec), actions_(sp.action_count()), rng_(cfg.seed) {
    const double range = codec.decoded_max() - codec.decoded_min();
    c_ = cfg.ucb_c ? *cfg.ucb_c : (cfg.horizon + 1.0) * (range > 0 ? range : 1.0);
    new_decision();
  }

  // One simulation whose first action is fixed; UCT chooses below the root.
  void simulate(State s0, std::uint32_t root_action, std::uint32_t steps) {
    samples_ = 0;
    root_action_ = root_action;
    total_steps_ = steps;
    descend(0, s0, steps);
    sp_.revert(samples_);
  }

  std::vector<double> root_q(std::uint32_t steps) const {
    std::vector<double> q(actions_);
    const double mid = 0.5 * (codec_.decoded_min() + codec_.decoded_max());
    for (std::uint32_t a = 0; a < actions_; ++a) {
      const auto& st = stats_[a];
      q[a] = st.visits ? st.value_sum / static_cast<double>(st.visits) : steps * mid;
    }
    return q;
  }

 private:
  struct Outcome {
    State s;
    Symbol r;
    std::uint32_t node;
  };
  struct Decision {
    std::uint64_t visits = 0;
    std::vector<std::vector<Outcome>> outcomes;  // per action
  };

  std::uint32_t new_decision() {
    decisions_.push_back(Decision{0, std::vector<std::vector<Outcome>>(actions_)});
    stats_.resize(stats_.size() + actions_);
    return static_cast<std::uint32_t>(decisions_.size() - 1);
  }

  double descend(std::uint32_t node, State s, std::uint32_t steps) {
    if (steps == 0) return 0.0;
    double ret;
    // the root always expands so every simulation informs its action
    if (decisions_[node].visits == 0 && node != 0) {
      samples_ += steps;
      ret = rollout(sp_, s, steps, codec_, rng_);
    } else {
      std::span<const ActionStats> view(stats_.data() + std::size_t{node} * actions_, actions_);
      const double c = c_ * steps / total_steps_;
      std::uint32_t a = node == 0 ? root_action_ : uct_select(view, decisions_[node].visits, c);
      auto [next, r] = sp_.sample(s, a, rng_);
      ++samples_;
      std::uint32_t child = find_or_add(node, a, next, r);
      ret = codec_.decode(r) + descend(child, next, steps - 1);
      auto& st = stats_[node * actions_ + a];
      st.value_sum += ret;
      ++st.visits;
    }
    ++decisions_[node].visits;
    return ret;
  }

  std::uint32_t find_or_add(std::uint32_t node, std::uint32_t a, State s, Symbol r) {
    for (const auto& o : decisions_[node].outcomes[a])
      if (o.s == s && o.r == r) return o.node;
    std::uint32_t child = new_decision();
    decisions_[node].outcomes[a].push_back({s, r, child});
    return child;
  }

  Specialist& sp_;
  const RewardCodec& codec_;
  std::uint32_t actions_;
  Rng rng_;
  double c_;
  std::size_t samples_ = 0;
  std::uint32_t root_action_ = 0;
  double total_steps_ = 1.0;
  std::vector<Decision> decisions_;
  std::vector<ActionStats> stats_;
};

}  // namespace

std::vector<double> q_estimate(Specialist& sp, State s0, const RewardCodec& codec, const PlannerConfig& cfg) {
  if (cfg.simulations == 0) throw std::invalid_argument("planner needs at least one simulation");
  const std::uint32_t steps = cfg.horizon + 1;
  Search search(sp, codec, cfg);
  // root actions take turns so every Q(s0, a) gets an equal share
  const std::uint32_t actions = sp.action_count();
  for (std::uint32_t i = 0; i < cfg.simulations; ++i) search.simulate(s0, i % actions, steps);
  return search.root_q(steps);
}

}  // namespace hedgemix
