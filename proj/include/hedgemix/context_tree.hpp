#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hedgemix/core.hpp"
#include "hedgemix/random.hpp"

namespace hedgemix {

// Krichevsky-Trofimov add-half estimator state for one binary source.
struct KtCounts {
  std::uint32_t zeros = 0;
  std::uint32_t ones = 0;
  double log_prob = 0.0;  // log of the KT block probability of the bits seen

  double predict(int bit) const;
  double log_predict(int bit) const;
  void update(int bit);
};

double log_add_exp(double a, double b);

// Weighted context tree over a fixed-length binary context. The bit at
// context position k selects the branch taken at depth k, so the root
// splits on context[0]. Each node mixes "stop here" (its KT estimate) with
// "split" (product of the children) at 1/2 each, which is an exact Bayesian
// mixture over every pruning of the depth-D template with prior 2^-Gamma(T).
//
// Each node stores beta = P_kt / prod P_w(children), so the conditional
// mixture at a node is (beta * kt(x) + p_child(x)) / (beta + 1) and no
// logarithms are needed per node. Beta is clamped far from 0 and infinity.
//
// Nodes are allocated on first touch. A node that has only ever seen one
// context path is kept as a chain head: the nodes below it along that path
// would all carry identical counts and hence beta = 1, so they are
// materialized only when a later context diverges.
class ContextTree {
 public:
  static constexpr std::size_t kMaxDepth = 128;

  explicit ContextTree(std::size_t depth);

  std::size_t depth() const { return depth_; }

  double log_predict(std::span<const std::uint8_t> context, int bit) const;
  double predict(std::span<const std::uint8_t> context, int bit) const;

  // Trains on one bit and returns log P(bit | context) under the mixture
  // before the update. Every update is trailed so it can be reverted.
  double update(std::span<const std::uint8_t> context, int bit);
  // Draws the bit as (u < P(1 | context)), trains on it and returns it.
  int sample_update(std::span<const std::uint8_t> context, double u);

  void revert(std::size_t n_updates);
  std::size_t trail_depth() const { return marks_.size(); }
  void clear_trail();

  double log_weighted() const { return log_weighted_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::uint64_t structural_hash() const;

  void save(std::ostream& out) const;
  static ContextTree load(std::istream& in);

 private:
  struct Node {
    double beta = 1.0;
    std::uint32_t zeros = 0;
    std::uint32_t ones = 0;
    std::int32_t child[2] = {-1, -1};
    std::uint64_t tail[2] = {0, 0};  // context bits of the chain, absolute positions
    std::uint16_t depth = 0;
  };
  struct Mark {
    std::uint32_t node_count;
    std::uint32_t saved_begin;
    double log_weighted;
  };

  bool is_chain_head(const Node& n) const {
    return n.child[0] < 0 && n.child[1] < 0 && (n.zeros + n.ones) > 0 && n.depth < depth_;
  }
  static int tail_bit(const Node& n, std::size_t pos) {
    return static_cast<int>((n.tail[pos >> 6] >> (pos & 63)) & 1u);
  }
  std::size_t first_mismatch(const Node& n, std::span<const std::uint8_t> context,
                             std::size_t from) const;
  std::int32_t new_node(std::uint16_t depth);
  template <class Choose>
  double train(std::span<const std::uint8_t> context, Choose&& choose);

  std::size_t depth_;
  double log_weighted_ = 0.0;
  std::vector<Node> nodes_;
  std::vector<Mark> marks_;
  std::vector<std::pair<std::uint32_t, Node>> saved_;
};

// Predicts a k-bit symbol with one tree per bit. The tree for bit m sees
// the m-1 already-decided bits of the symbol (most recent first) followed by
// the shared conditioning context, so depths run D, D+1, ..., D+k-1.
class SymbolChain {
 public:
  SymbolChain(std::size_t context_bits, std::uint32_t symbol_bits);

  std::size_t context_bits() const { return context_bits_; }
  std::uint32_t symbol_bits() const { return symbol_bits_; }

  double log_probability(std::span<const std::uint8_t> context, std::uint64_t symbol) const;
  // Distribution over all 2^k bit patterns.
  std::vector<double> distribution(std::span<const std::uint8_t> context) const;

  // Returns log P(symbol | context) before the update.
  double update(std::span<const std::uint8_t> context, std::uint64_t symbol);
  // Samples a symbol below `cardinality` bit by bit and trains on it.
  std::uint64_t sample_update(std::span<const std::uint8_t> context, std::uint64_t cardinality,
                              Rng& rng);

  void revert(std::size_t n_symbols);
  std::size_t trail_depth() const { return trees_.front().trail_depth(); }
  void clear_trail();

  const ContextTree& tree(std::size_t m) const { return trees_[m]; }
  std::uint64_t structural_hash() const;
  std::size_t node_count() const;

  void save(std::ostream& out) const;
  static SymbolChain load(std::istream& in);

 private:
  SymbolChain() = default;
  std::size_t context_bits_ = 0;
  std::uint32_t symbol_bits_ = 0;
  std::vector<ContextTree> trees_;
};

// An explicit prediction suffix tree: a pruning of the depth-d template.
// Node 0 is the root; a node is a leaf iff both children are -1.
struct ExplicitPst {
  struct Node {
    int child[2] = {-1, -1};
  };
  std::vector<Node> nodes{Node{}};
  std::size_t depth = 0;  // template depth d
};

// Number of nodes above the template's maximum depth: each costs one bit
// (split or stop); depth-d leaves are forced and free.
double coding_length(const ExplicitPst& tree);

}  // namespace hedgemix
