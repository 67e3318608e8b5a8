#include "hedgemix/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace hedgemix {

namespace {
std::atomic<std::uint64_t> next_history_id{1};
}

SymbolSpace SymbolSpace::of(std::string name, std::uint32_t cardinality) {
  if (cardinality == 0) throw std::invalid_argument("symbol space '" + name + "' is empty");
  std::uint32_t width = 1;
  while ((std::uint64_t{1} << width) < cardinality) ++width;
  return SymbolSpace{std::move(name), cardinality, width};
}

void binarize_into(std::uint64_t index, std::uint32_t width, Bits& out) {
  if (width == 0 || width > 64 || (width < 64 && index >= (std::uint64_t{1} << width))) {
    throw std::domain_error("binarize: index " + std::to_string(index) + " does not fit in " +
                            std::to_string(width) + " bits");
  }
  for (std::uint32_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>((index >> i) & 1u));
}

Bits binarize(std::uint64_t index, std::uint32_t width) {
  Bits out;
  out.reserve(width);
  binarize_into(index, width, out);
  return out;
}

std::uint64_t debinarize(std::span<const std::uint8_t> bits) {
  if (bits.empty()) throw std::domain_error("debinarize: empty bit sequence");
  if (bits.size() > 64) throw std::domain_error("debinarize: more than 64 bits");
  std::uint64_t v = 0;
  for (auto b : bits) v = (v << 1) | (b & 1u);
  return v;
}

RewardCodec RewardCodec::linear(double r_min, double r_max, std::uint32_t levels) {
  if (!(r_min < r_max)) throw std::invalid_argument("reward codec requires r_min < r_max");
  if (levels == 0) throw std::invalid_argument("reward codec requires at least one level");
  RewardCodec c;
  c.r_min_ = r_min;
  c.r_max_ = r_max;
  c.levels_ = levels;
  return c;
}

RewardCodec RewardCodec::table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("reward table is empty");
  if (!std::is_sorted(values.begin(), values.end()))
    throw std::invalid_argument("reward table must be sorted");
  RewardCodec c;
  c.r_min_ = values.front();
  c.r_max_ = values.back();
  c.levels_ = static_cast<std::uint32_t>(values.size());
  c.table_ = std::move(values);
  return c;
}

Symbol RewardCodec::encode(double r) const {
  if (!table_.empty()) {
    // nearest entry; ties go to the lower entry so encoding stays monotone
    auto it = std::lower_bound(table_.begin(), table_.end(), r);
    if (it == table_.begin()) return 0;
    if (it == table_.end()) return levels_ - 1;
    auto hi = static_cast<Symbol>(it - table_.begin());
    return (*it - r) < (r - *(it - 1)) ? hi : hi - 1;
  }
  double x = std::clamp(r, r_min_, r_max_);
  auto k = static_cast<std::int64_t>(std::floor((x - r_min_) / (r_max_ - r_min_) * levels_));
  return static_cast<Symbol>(std::clamp<std::int64_t>(k, 0, levels_ - 1));
}

double RewardCodec::decode(Symbol s) const {
  if (s >= levels_) throw std::domain_error("reward symbol out of range");
  if (!table_.empty()) return table_[s];
  double width = (r_max_ - r_min_) / levels_;
  return r_min_ + (s + 0.5) * width;
}

double RewardCodec::decoded_min() const { return decode(0); }
double RewardCodec::decoded_max() const { return decode(levels_ - 1); }

std::uint32_t HistoryLayout::observation_bits() const {
  std::uint32_t n = 0;
  for (const auto& s : observation) n += s.bit_width;
  return n;
}

std::uint32_t HistoryLayout::step_bits() const {
  return action.bit_width + observation_bits() + reward.bit_width;
}

History::History(HistoryLayout layout) : layout_(std::move(layout)), id_(next_history_id++) {}

void History::append(Action a, std::span<const std::uint16_t> observation, Symbol reward_symbol,
                     double reward) {
  if (!layout_.action.contains(a)) throw std::domain_error("action outside action space");
  if (observation.size() != layout_.observation.size())
    throw std::domain_error("observation has wrong number of components");
  for (std::size_t i = 0; i < observation.size(); ++i) {
    if (!layout_.observation[i].contains(observation[i]))
      throw std::domain_error("observation component " + std::to_string(i) + " out of range");
  }
  if (!layout_.reward.contains(reward_symbol)) throw std::domain_error("reward symbol out of range");
  Step s;
  s.action = a;
  s.obs_offset = static_cast<std::uint32_t>(observations_.size());
  s.reward_symbol = reward_symbol;
  s.reward = reward;
  observations_.insert(observations_.end(), observation.begin(), observation.end());
  steps_.push_back(s);
}

std::span<const std::uint16_t> History::observation(std::size_t i) const {
  return {observations_.data() + steps_[i].obs_offset, layout_.observation.size()};
}

void History::step_bits(std::size_t i, Bits& out) const {
  const Step& s = steps_[i];
  binarize_into(s.action, layout_.action.bit_width, out);
  auto obs = observation(i);
  for (std::size_t k = 0; k < obs.size(); ++k) binarize_into(obs[k], layout_.observation[k].bit_width, out);
  binarize_into(s.reward_symbol, layout_.reward.bit_width, out);
}

Bits History::bit_view() const {
  Bits out;
  out.reserve(steps_.size() * layout_.step_bits());
  for (std::size_t i = 0; i < steps_.size(); ++i) step_bits(i, out);
  return out;
}

HistoryView::HistoryView(const History& h, std::size_t begin, std::size_t end)
    : h_(&h), begin_(begin), end_(end) {
  if (begin > end || end > h.size()) throw std::out_of_range("history view out of range");
}

const Step* HistoryView::back(std::size_t lag) const {
  if (lag == 0 || lag > size()) return nullptr;
  return &h_->step(end_ - lag);
}

std::span<const std::uint16_t> HistoryView::observation_back(std::size_t lag) const {
  if (lag == 0 || lag > size()) return {};
  return h_->observation(end_ - lag);
}

int HistoryView::suffix_bit(std::size_t n) const {
  if (n == 0) return -1;
  const std::size_t per_step = h_->layout().step_bits();
  std::size_t lag = (n - 1) / per_step + 1;
  if (lag > size()) return -1;
  Bits bits;
  bits.reserve(per_step);
  h_->step_bits(end_ - lag, bits);
  std::size_t from_end = (n - 1) % per_step;
  return bits[per_step - 1 - from_end];
}

}  // namespace hedgemix
