#include "hedgemix/context_tree.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hedgemix {

namespace {

constexpr double kLogHalf = -0.69314718055994530942;

constexpr double kBetaMin = 1e-250;
constexpr double kBetaMax = 1e250;

double kt_predict(std::uint32_t zeros, std::uint32_t ones, int bit) {
  return ((bit ? ones : zeros) + 0.5) / (zeros + ones + 1.0);
}

double kt_log_predict(std::uint32_t zeros, std::uint32_t ones, int bit) {
  return std::log(kt_predict(zeros, ones, bit));
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated context tree snapshot");
  return v;
}

thread_local std::vector<std::uint32_t> path_scratch;
thread_local std::array<std::array<double, 2>, ContextTree::kMaxDepth + 1> prob_scratch;

static_assert(std::endian::native == std::endian::little);

// Packs context bits from `from` onward into the chain tail, eight at a time.
// Bits below `from` are never read.
void pack_tail(std::uint64_t (&tail)[2], std::span<const std::uint8_t> context, std::size_t from) {
  tail[0] = tail[1] = 0;
  std::size_t p = from & ~std::size_t{7};
  for (; p + 8 <= context.size(); p += 8) {
    std::uint64_t x;
    std::memcpy(&x, context.data() + p, 8);
    x &= 0x0101010101010101ULL;
    tail[p >> 6] |= ((x * 0x0102040810204080ULL) >> 56) << (p & 63);
  }
  for (; p < context.size(); ++p) {
    if (context[p] & 1) tail[p >> 6] |= std::uint64_t{1} << (p & 63);
  }
}
thread_local Bits context_scratch;

}  // namespace

double KtCounts::log_predict(int bit) const { return kt_log_predict(zeros, ones, bit); }
double KtCounts::predict(int bit) const { return std::exp(log_predict(bit)); }
void KtCounts::update(int bit) {
  log_prob += log_predict(bit);
  (bit ? ones : zeros) += 1;
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -INFINITY) return a;
  return a + std::log1p(std::exp(b - a));
}

ContextTree::ContextTree(std::size_t depth) : depth_(depth) {
  if (depth > kMaxDepth)
    throw std::invalid_argument("context tree depth " + std::to_string(depth) + " exceeds " +
                                std::to_string(kMaxDepth));
  nodes_.emplace_back();
}

std::int32_t ContextTree::new_node(std::uint16_t depth) {
  nodes_.emplace_back();
  nodes_.back().depth = depth;
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::size_t ContextTree::first_mismatch(const Node& n, std::span<const std::uint8_t> context,
                                        std::size_t from) const {
  for (std::size_t p = from; p < depth_; ++p) {
    if (tail_bit(n, p) != (context[p] & 1)) return p;
  }
  return depth_;
}

double ContextTree::log_predict(std::span<const std::uint8_t> context, int bit) const {
  return std::log(predict(context, bit));
}

double ContextTree::predict(std::span<const std::uint8_t> context, int bit) const {
  if (context.size() != depth_) throw std::invalid_argument("context length does not match tree depth");
  bit &= 1;
  auto& path = path_scratch;
  path.clear();
  std::uint32_t idx = 0;
  std::size_t k = 0;
  path.push_back(idx);
  double p = 0.0;
  bool resolved = false;
  while (k < depth_) {
    const Node& n = nodes_[idx];
    int c = context[k] & 1;
    if (n.child[c] >= 0) {
      idx = static_cast<std::uint32_t>(n.child[c]);
      ++k;
      path.push_back(idx);
      continue;
    }
    const double pe = kt_predict(n.zeros, n.ones, bit);
    if (is_chain_head(n)) {
      // virtual chain levels k..j mix pe with 1/2 from the level where the
      // context leaves the chain
      std::size_t j = first_mismatch(n, context, k);
      p = j == depth_ ? pe : pe + std::ldexp(0.5 - pe, -static_cast<int>(j - k + 1));
    } else {
      p = (n.beta * pe + 0.5) / (n.beta + 1.0);
    }
    resolved = true;
    break;
  }
  if (!resolved) {
    const Node& leaf = nodes_[idx];
    p = kt_predict(leaf.zeros, leaf.ones, bit);
  }
  for (std::size_t i = path.size() - 1; i-- > 0;) {
    const Node& n = nodes_[path[i]];
    p = (n.beta * kt_predict(n.zeros, n.ones, bit) + p) / (n.beta + 1.0);
  }
  return p;
}

template <class Choose>
double ContextTree::train(std::span<const std::uint8_t> context, Choose&& choose) {
  if (context.size() != depth_) throw std::invalid_argument("context length does not match tree depth");
  const auto nodes_before = static_cast<std::uint32_t>(nodes_.size());
  marks_.push_back(Mark{nodes_before, static_cast<std::uint32_t>(saved_.size()), log_weighted_});

  auto& path = path_scratch;
  path.clear();
  std::uint32_t idx = 0;
  std::size_t k = 0;
  saved_.emplace_back(0, nodes_[0]);
  path.push_back(0);
  while (k < depth_) {
    int c = context[k] & 1;
    if (nodes_[idx].child[c] < 0) {
      if (is_chain_head(nodes_[idx])) {
        if (first_mismatch(nodes_[idx], context, k) == depth_) break;
        // Materialize one level of the chain, then continue the walk.
        int oc = tail_bit(nodes_[idx], k);
        std::int32_t ch = new_node(static_cast<std::uint16_t>(k + 1));
        Node& parent = nodes_[idx];
        Node& child = nodes_[ch];
        child.zeros = parent.zeros;
        child.ones = parent.ones;
        child.tail[0] = parent.tail[0];
        child.tail[1] = parent.tail[1];
        parent.child[oc] = ch;
        if (oc != c) {
          std::int32_t fresh = new_node(static_cast<std::uint16_t>(k + 1));
          nodes_[idx].child[c] = fresh;
        }
      } else {
        std::int32_t fresh = new_node(static_cast<std::uint16_t>(k + 1));
        nodes_[idx].child[c] = fresh;
      }
    }
    idx = static_cast<std::uint32_t>(nodes_[idx].child[c]);
    ++k;
    if (idx < nodes_before) saved_.emplace_back(idx, nodes_[idx]);
    path.push_back(idx);
    Node& n = nodes_[idx];
    if (n.zeros + n.ones == 0) {
      // fresh branch: it becomes a chain head for this context
      pack_tail(n.tail, context, k);
      break;
    }
  }

  // The walk ends at a depth-D leaf, a chain head matching the context, or
  // a fresh node; each predicts with its KT estimate alone.
  auto& probs = prob_scratch;
  {
    const Node& last = nodes_[path.back()];
    probs[path.size() - 1] = {kt_predict(last.zeros, last.ones, 0), kt_predict(last.zeros, last.ones, 1)};
  }
  for (std::size_t i = path.size() - 1; i-- > 0;) {
    const Node& n = nodes_[path[i]];
    for (int b = 0; b < 2; ++b)
      probs[i][b] = (n.beta * kt_predict(n.zeros, n.ones, b) + probs[i + 1][b]) / (n.beta + 1.0);
  }
  const int bit = choose(probs[0][1]) & 1;
  for (std::size_t i = 0; i < path.size(); ++i) {
    Node& n = nodes_[path[i]];
    if (i + 1 < path.size())
      n.beta = std::clamp(n.beta * kt_predict(n.zeros, n.ones, bit) / probs[i + 1][bit], kBetaMin, kBetaMax);
    (bit ? n.ones : n.zeros) += 1;
  }
  const double p = probs[0][bit];
  log_weighted_ += std::log(p);
  return p;
}

double ContextTree::update(std::span<const std::uint8_t> context, int bit) {
  return std::log(train(context, [bit](double) { return bit; }));
}

int ContextTree::sample_update(std::span<const std::uint8_t> context, double u) {
  int bit = 0;
  train(context, [u, &bit](double p1) { return bit = u < p1 ? 1 : 0; });
  return bit;
}

void ContextTree::revert(std::size_t n_updates) {
  if (n_updates > marks_.size())
    throw std::logic_error("cannot revert " + std::to_string(n_updates) + " updates; trail holds " +
                           std::to_string(marks_.size()));
  for (std::size_t u = 0; u < n_updates; ++u) {
    Mark m = marks_.back();
    marks_.pop_back();
    log_weighted_ = m.log_weighted;
    for (std::size_t i = saved_.size(); i-- > m.saved_begin;) nodes_[saved_[i].first] = saved_[i].second;
    saved_.resize(m.saved_begin);
    nodes_.resize(m.node_count);
  }
}

void ContextTree::clear_trail() {
  marks_.clear();
  saved_.clear();
}

std::uint64_t ContextTree::structural_hash() const {
  std::uint64_t h = hash_combine(depth_, nodes_.size());
  h = hash_combine(h, std::bit_cast<std::uint64_t>(log_weighted_));
  for (const Node& n : nodes_) {
    h = hash_combine(h, std::bit_cast<std::uint64_t>(n.beta));
    h = hash_combine(h, (std::uint64_t{n.zeros} << 32) | n.ones);
    h = hash_combine(h, (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n.child[0])) << 32) |
                            static_cast<std::uint32_t>(n.child[1]));
    h = hash_combine(h, n.tail[0] ^ (n.tail[1] * 0x9e3779b97f4a7c15ULL) ^ n.depth);
  }
  return h;
}

void ContextTree::save(std::ostream& out) const {
  write_pod(out, static_cast<std::uint64_t>(depth_));
  write_pod(out, log_weighted_);
  write_pod(out, static_cast<std::uint64_t>(nodes_.size()));
  for (const Node& n : nodes_) {
    write_pod(out, n.beta);
    write_pod(out, n.zeros);
    write_pod(out, n.ones);
    write_pod(out, n.child[0]);
    write_pod(out, n.child[1]);
    write_pod(out, n.tail[0]);
    write_pod(out, n.tail[1]);
    write_pod(out, n.depth);
  }
}

ContextTree ContextTree::load(std::istream& in) {
  auto depth = read_pod<std::uint64_t>(in);
  ContextTree t(depth);
  t.log_weighted_ = read_pod<double>(in);
  auto count = read_pod<std::uint64_t>(in);
  if (count == 0) throw std::runtime_error("context tree snapshot has no root");
  t.nodes_.resize(count);
  for (Node& n : t.nodes_) {
    n.beta = read_pod<double>(in);
    n.zeros = read_pod<std::uint32_t>(in);
    n.ones = read_pod<std::uint32_t>(in);
    n.child[0] = read_pod<std::int32_t>(in);
    n.child[1] = read_pod<std::int32_t>(in);
    n.tail[0] = read_pod<std::uint64_t>(in);
    n.tail[1] = read_pod<std::uint64_t>(in);
    n.depth = read_pod<std::uint16_t>(in);
    for (auto c : n.child) {
      if (c >= static_cast<std::int64_t>(count)) throw std::runtime_error("corrupt context tree snapshot");
    }
  }
  return t;
}

// -- SymbolChain --------------------------------------------------------------

SymbolChain::SymbolChain(std::size_t context_bits, std::uint32_t symbol_bits)
    : context_bits_(context_bits), symbol_bits_(symbol_bits) {
  if (symbol_bits == 0 || symbol_bits > 32) throw std::invalid_argument("symbol width must be in [1, 32]");
  trees_.reserve(symbol_bits);
  for (std::uint32_t m = 0; m < symbol_bits; ++m) trees_.emplace_back(context_bits + m);
}

namespace {

// Lays out [b_{m-1}, ..., b_1, context...] for every m in one buffer: the
// prefix bits live in reverse order just before the context, so the tree
// for bit m reads the subspan starting at offset k-1-(m-1).
std::span<std::uint8_t> prepare(Bits& buf, std::uint32_t k, std::span<const std::uint8_t> context) {
  buf.resize(k - 1 + context.size());
  std::copy(context.begin(), context.end(), buf.begin() + (k - 1));
  return {buf.data(), buf.size()};
}

std::span<const std::uint8_t> tree_context(std::span<const std::uint8_t> buf, std::uint32_t k,
                                           std::uint32_t m) {
  return buf.subspan(k - 1 - m);
}

void set_prefix_bit(std::span<std::uint8_t> buf, std::uint32_t k, std::uint32_t m, int bit) {
  // bit m (0-indexed) is read by trees m+1.. as their most recent prefix bit
  buf[k - 2 - m] = static_cast<std::uint8_t>(bit);
}

int symbol_bit(std::uint64_t symbol, std::uint32_t k, std::uint32_t m) {
  return static_cast<int>((symbol >> (k - 1 - m)) & 1u);
}

}  // namespace

double SymbolChain::log_probability(std::span<const std::uint8_t> context, std::uint64_t symbol) const {
  Bits& scratch = context_scratch;
  auto buf = prepare(scratch, symbol_bits_, context);
  double p = 1.0;
  for (std::uint32_t m = 0; m < symbol_bits_; ++m) {
    int b = symbol_bit(symbol, symbol_bits_, m);
    p *= trees_[m].predict(tree_context(buf, symbol_bits_, m), b);
    if (m + 1 < symbol_bits_) set_prefix_bit(buf, symbol_bits_, m, b);
  }
  return std::log(p);
}

std::vector<double> SymbolChain::distribution(std::span<const std::uint8_t> context) const {
  const std::uint32_t k = symbol_bits_;
  Bits buf_storage;
  auto buf = prepare(buf_storage, k, context);
  std::vector<double> out(std::size_t{1} << k, 0.0);
  // depth-first over prefixes
  struct Frame {
    std::uint64_t prefix;
    std::uint32_t m;
    double p;
  };
  std::vector<Frame> stack{{0, 0, 1.0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.m == k) {
      out[f.prefix] = f.p;
      continue;
    }
    for (std::uint32_t i = 0; i < f.m; ++i) set_prefix_bit(buf, k, i, symbol_bit(f.prefix << (k - f.m), k, i));
    auto ctx = tree_context(buf, k, f.m);
    double p0 = trees_[f.m].predict(ctx, 0);
    double p1 = trees_[f.m].predict(ctx, 1);
    stack.push_back({(f.prefix << 1) | 1u, f.m + 1, f.p * p1});
    stack.push_back({f.prefix << 1, f.m + 1, f.p * p0});
  }
  return out;
}

double SymbolChain::update(std::span<const std::uint8_t> context, std::uint64_t symbol) {
  Bits& scratch = context_scratch;
  auto buf = prepare(scratch, symbol_bits_, context);
  double lp = 0.0;
  for (std::uint32_t m = 0; m < symbol_bits_; ++m) {
    int b = symbol_bit(symbol, symbol_bits_, m);
    lp += trees_[m].update(tree_context(buf, symbol_bits_, m), b);
    if (m + 1 < symbol_bits_) set_prefix_bit(buf, symbol_bits_, m, b);
  }
  return lp;
}

std::uint64_t SymbolChain::sample_update(std::span<const std::uint8_t> context, std::uint64_t cardinality,
                                         Rng& rng) {
  Bits& scratch = context_scratch;
  auto buf = prepare(scratch, symbol_bits_, context);
  std::uint64_t symbol = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint32_t m = 0; m < symbol_bits_; ++m) {
    auto ctx = tree_context(buf, symbol_bits_, m);
    std::uint64_t with_one = ((symbol << 1) | 1u) << (symbol_bits_ - 1 - m);
    int b;
    if (with_one >= cardinality) {
      b = 0;
      trees_[m].update(ctx, b);
    } else {
      b = trees_[m].sample_update(ctx, unif(rng));
    }
    symbol = (symbol << 1) | static_cast<std::uint64_t>(b);
    if (m + 1 < symbol_bits_) set_prefix_bit(buf, symbol_bits_, m, b);
  }
  return symbol;
}

void SymbolChain::revert(std::size_t n_symbols) {
  for (auto& t : trees_) t.revert(n_symbols);
}

void SymbolChain::clear_trail() {
  for (auto& t : trees_) t.clear_trail();
}

std::uint64_t SymbolChain::structural_hash() const {
  std::uint64_t h = hash_combine(context_bits_, symbol_bits_);
  for (const auto& t : trees_) h = hash_combine(h, t.structural_hash());
  return h;
}

std::size_t SymbolChain::node_count() const {
  std::size_t n = 0;
  for (const auto& t : trees_) n += t.node_count();
  return n;
}

void SymbolChain::save(std::ostream& out) const {
  write_pod(out, static_cast<std::uint64_t>(context_bits_));
  write_pod(out, symbol_bits_);
  for (const auto& t : trees_) t.save(out);
}

SymbolChain SymbolChain::load(std::istream& in) {
  SymbolChain c;
  c.context_bits_ = read_pod<std::uint64_t>(in);
  c.symbol_bits_ = read_pod<std::uint32_t>(in);
  if (c.symbol_bits_ == 0 || c.symbol_bits_ > 32) throw std::runtime_error("corrupt symbol chain snapshot");
  for (std::uint32_t m = 0; m < c.symbol_bits_; ++m) {
    c.trees_.push_back(ContextTree::load(in));
    if (c.trees_.back().depth() != c.context_bits_ + m) throw std::runtime_error("symbol chain depth mismatch");
  }
  return c;
}

// -- Explicit PSTs -------------------------------------------------------------

double coding_length(const ExplicitPst& tree) {
  if (tree.nodes.empty()) throw std::invalid_argument("PST has no root");
  double gamma = 0.0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  std::vector<char> seen(tree.nodes.size(), 0);
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    if (idx < 0 || static_cast<std::size_t>(idx) >= tree.nodes.size() || seen[idx])
      throw std::invalid_argument("PST node references are malformed");
    seen[idx] = 1;
    const auto& n = tree.nodes[idx];
    bool leaf = n.child[0] < 0 && n.child[1] < 0;
    if (!leaf && (n.child[0] < 0 || n.child[1] < 0))
      throw std::invalid_argument("PST internal node must have two children");
    if (!leaf && d >= tree.depth) throw std::invalid_argument("PST deeper than its template");
    if (d < tree.depth) gamma += 1.0;
    if (!leaf) {
      stack.push_back({n.child[0], d + 1});
      stack.push_back({n.child[1], d + 1});
    }
  }
  return gamma;
}

}  // namespace hedgemix
