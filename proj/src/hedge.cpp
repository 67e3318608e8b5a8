#include "hedgemix/hedge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hedgemix {

DynamicHedge::DynamicHedge(double eta) : eta_(eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("learning rate must be positive");
}

void DynamicHedge::admit(ExpertId id, double prior) {
  if (!(prior > 0.0)) throw std::invalid_argument("prior mass must be positive");
  admit_at(id, std::log(prior) - eta_ * learner_loss_, prior);
}

void DynamicHedge::admit_at(ExpertId id, double log_weight, double prior) {
  if (seen_.count(id))
    throw std::logic_error("expert " + std::to_string(id) + " was already admitted; specialists are contiguous");
  if (!std::isfinite(log_weight)) throw std::invalid_argument("admission weight must be finite");
  seen_.insert(id);
  active_.push_back({id, log_weight, prior, t_});
}

void DynamicHedge::retire(ExpertId id) {
  auto it = std::find_if(active_.begin(), active_.end(), [id](const Expert& e) { return e.id == id; });
  if (it == active_.end()) throw std::logic_error("expert " + std::to_string(id) + " is not active");
  active_.erase(it);
}

void DynamicHedge::incur(const LossRecord& losses) {
  if (!std::isfinite(losses.learner)) throw std::domain_error("learner loss is not finite");
  for (const auto& e : active_) {
    auto it = losses.per_expert.find(e.id);
    if (it == losses.per_expert.end())
      throw std::invalid_argument("no loss for active expert " + std::to_string(e.id));
    if (!std::isfinite(it->second))
      throw std::domain_error("loss of expert " + std::to_string(e.id) + " is not finite");
  }
  for (auto& e : active_) e.log_weight -= eta_ * losses.per_expert.at(e.id);
  learner_loss_ += losses.learner;
  ++t_;
}

double DynamicHedge::log_total() const {
  if (active_.empty()) throw std::logic_error("no active experts");
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : active_) top = std::max(top, e.log_weight);
  double s = 0.0;
  for (const auto& e : active_) s += std::exp(e.log_weight - top);
  return top + std::log(s);
}

std::vector<double> DynamicHedge::mix(const std::map<ExpertId, std::vector<double>>& predictions) const {
  const double lt = log_total();
  std::vector<double> out;
  for (const auto& e : active_) {
    auto it = predictions.find(e.id);
    if (it == predictions.end()) throw std::invalid_argument("no prediction for active expert " + std::to_string(e.id));
    if (out.empty()) out.assign(it->second.size(), 0.0);
    if (it->second.size() != out.size()) throw std::invalid_argument("predictions differ in size");
    double w = std::exp(e.log_weight - lt);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * it->second[k];
  }
  return out;
}

double DynamicHedge::mix_log_prob(const std::map<ExpertId, double>& log_probs) const {
  const double lt = log_total();
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(active_.size());
  for (const auto& e : active_) {
    auto it = log_probs.find(e.id);
    if (it == log_probs.end()) throw std::invalid_argument("no prediction for active expert " + std::to_string(e.id));
    terms.push_back(e.log_weight - lt + it->second);
    top = std::max(top, terms.back());
  }
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : terms) s += std::exp(x - top);
  return top + std::log(s);
}

bool DynamicHedge::is_active(ExpertId id) const {
  return std::any_of(active_.begin(), active_.end(), [id](const Expert& e) { return e.id == id; });
}

const DynamicHedge::Expert& DynamicHedge::expert(ExpertId id) const {
  auto it = std::find_if(active_.begin(), active_.end(), [id](const Expert& e) { return e.id == id; });
  if (it == active_.end()) throw std::out_of_range("expert " + std::to_string(id) + " is not active");
  return *it;
}

double DynamicHedge::normalized_weight(ExpertId id) const { return std::exp(expert(id).log_weight - log_total()); }

std::vector<std::pair<ExpertId, double>> DynamicHedge::normalized() const {
  std::vector<std::pair<ExpertId, double>> out;
  if (active_.empty()) return out;
  const double lt = log_total();
  for (const auto& e : active_) out.emplace_back(e.id, std::exp(e.log_weight - lt));
  return out;
}

double DynamicHedge::min_log_weight() const {
  if (active_.empty()) throw std::logic_error("no active experts");
  double m = active_.front().log_weight;
  for (const auto& e : active_) m = std::min(m, e.log_weight);
  return m;
}

}  // namespace hedgemix
