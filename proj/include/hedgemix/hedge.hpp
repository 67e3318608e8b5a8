#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

namespace hedgemix {

using ExpertId = std::uint64_t;

struct LossRecord {
  std::size_t t = 0;
  std::map<ExpertId, double> per_expert;
  double learner = 0.0;
};

// Exponentially weighted mixture over contiguous specialists. Weights are
// kept as unnormalized log-weights; an expert admitted after some history
// starts at log(nu) - eta * L, where L is the learner's cumulative loss, which
// is exactly the weight it would have had if it had been credited with the
// learner's own forecast while inactive.
class DynamicHedge {
 public:
  explicit DynamicHedge(double eta = 1.0);

  struct Expert {
    ExpertId id;
    double log_weight;
    double prior;
    std::size_t arrival;
  };

  double eta() const { return eta_; }
  double learner_loss() const { return learner_loss_; }
  std::size_t time() const { return t_; }

  // Admits at nu * exp(-eta * L).
  void admit(ExpertId id, double prior = 1.0);
  // Admits at an explicit unnormalized log-weight.
  void admit_at(ExpertId id, double log_weight, double prior = 1.0);
  void retire(ExpertId id);

  // Multiplies every active weight by exp(-eta * loss) and adds the
  // learner's loss to L. Losses must cover the active set; entries for
  // other experts are ignored.
  void incur(const LossRecord& losses);

  // Convex combination of the active experts' distributions.
  std::vector<double> mix(const std::map<ExpertId, std::vector<double>>& predictions) const;
  // Log of the mixture probability from per-expert log-probabilities.
  double mix_log_prob(const std::map<ExpertId, double>& log_probs) const;

  bool is_active(ExpertId id) const;
  bool was_seen(ExpertId id) const { return seen_.count(id) > 0; }
  std::size_t active_count() const { return active_.size(); }
  const std::vector<Expert>& active() const { return active_; }  // in admission order
  const Expert& expert(ExpertId id) const;

  double log_weight(ExpertId id) const { return expert(id).log_weight; }
  double normalized_weight(ExpertId id) const;
  std::vector<std::pair<ExpertId, double>> normalized() const;
  double min_log_weight() const;

 private:
  double log_total() const;

  double eta_;
  double learner_loss_ = 0.0;
  std::size_t t_ = 0;
  std::vector<Expert> active_;
  std::set<ExpertId> seen_;
};

}  // namespace hedgemix
