#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hedgemix {

using Bits = std::vector<std::uint8_t>;
using Symbol = std::uint32_t;
using Action = std::uint32_t;

// A finite alphabet. Symbols are indices in [0, cardinality) and are
// binarized into exactly bit_width bits.
struct SymbolSpace {
  std::string name;
  std::uint32_t cardinality = 1;
  std::uint32_t bit_width = 1;

  static SymbolSpace of(std::string name, std::uint32_t cardinality);

  bool contains(std::uint64_t index) const { return index < cardinality; }
  bool operator==(const SymbolSpace&) const = default;
};

// Most-significant bit first. Throws std::domain_error if index >= 2^width.
Bits binarize(std::uint64_t index, std::uint32_t width);
void binarize_into(std::uint64_t index, std::uint32_t width, Bits& out);
std::uint64_t debinarize(std::span<const std::uint8_t> bits);

// Maps real rewards onto a finite reward alphabet. Either a linear
// quantizer over [r_min, r_max] or an exact table of reward values.
class RewardCodec {
 public:
  static RewardCodec linear(double r_min, double r_max, std::uint32_t levels);
  static RewardCodec table(std::vector<double> values);

  Symbol encode(double r) const;
  double decode(Symbol s) const;

  std::uint32_t levels() const { return levels_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  // Smallest and largest decoded values; these bound planner returns.
  double decoded_min() const;
  double decoded_max() const;
  bool is_table() const { return !table_.empty(); }
  const std::vector<double>& table_values() const { return table_; }
  SymbolSpace space() const { return SymbolSpace::of("reward", levels_); }

 private:
  double r_min_ = 0.0;
  double r_max_ = 1.0;
  std::uint32_t levels_ = 1;
  std::vector<double> table_;
};

struct HistoryLayout {
  SymbolSpace action;
  std::vector<SymbolSpace> observation;  // one space per observation component
  SymbolSpace reward;

  std::uint32_t observation_bits() const;
  std::uint32_t step_bits() const;
};

struct Step {
  Action action = 0;
  std::uint32_t obs_offset = 0;
  Symbol reward_symbol = 0;
  double reward = 0.0;
};

// Append-only action-observation-reward sequence.
class History {
 public:
  explicit History(HistoryLayout layout);

  void append(Action a, std::span<const std::uint16_t> observation, Symbol reward_symbol,
              double reward);

  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  const HistoryLayout& layout() const { return layout_; }
  std::uint64_t id() const { return id_; }

  const Step& step(std::size_t i) const { return steps_[i]; }
  std::span<const std::uint16_t> observation(std::size_t i) const;

  // Bits of a single aor triple, in a-o-r order.
  void step_bits(std::size_t i, Bits& out) const;
  Bits bit_view() const;

 private:
  HistoryLayout layout_;
  std::vector<Step> steps_;
  std::vector<std::uint16_t> observations_;
  std::uint64_t id_;
};

// A window [begin, end) of a history. Predicates evaluate on views so that
// lookback can be truncated (earlier steps behave as if absent).
class HistoryView {
 public:
  HistoryView(const History& h) : h_(&h), begin_(0), end_(h.size()) {}
  HistoryView(const History& h, std::size_t begin, std::size_t end);

  std::size_t size() const { return end_ - begin_; }
  bool empty() const { return begin_ == end_; }
  std::size_t begin_index() const { return begin_; }
  std::size_t end_index() const { return end_; }
  const History& history() const { return *h_; }
  const HistoryLayout& layout() const { return h_->layout(); }

  // lag 1 is the most recent step; nullptr if outside the window.
  const Step* back(std::size_t lag) const;
  std::span<const std::uint16_t> observation_back(std::size_t lag) const;
  const Step& at(std::size_t i) const { return h_->step(begin_ + i); }
  std::span<const std::uint16_t> observation_at(std::size_t i) const {
    return h_->observation(begin_ + i);
  }

  // Bit n (1-indexed) counted from the end of the binary history; nullopt-like
  // -1 when the window holds fewer than n bits.
  int suffix_bit(std::size_t n) const;

 private:
  const History* h_;
  std::size_t begin_;
  std::size_t end_;
};

}  // namespace hedgemix
