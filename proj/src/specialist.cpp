#include "hedgemix/specialist.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace hedgemix {

namespace {

constexpr char kMagic[4] = {'H', 'M', 'S', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated specialist snapshot");
  return v;
}

void push_bits(std::uint64_t value, std::uint32_t width, Bits& out) {
  for (std::uint32_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
}

thread_local Bits context_buffer;

}  // namespace

Specialist::Specialist(SpecialistId id, std::vector<PredicatePtr> phi, const HistoryLayout& layout)
    : id_(id),
      phi_(std::move(phi)),
      action_bits_(layout.action.bit_width),
      action_count_(layout.action.cardinality),
      reward_bits_(layout.reward.bit_width),
      reward_count_(layout.reward.cardinality),
      states_(layout.action.bit_width + phi_.size(), static_cast<std::uint32_t>(std::max<std::size_t>(phi_.size(), 1))),
      rewards_(layout.action.bit_width + 2 * phi_.size(), layout.reward.bit_width) {
  if (phi_.size() > kMaxPredicates) throw std::invalid_argument("specialist supports at most 64 predicates");
  for (const auto& p : phi_)
    if (!p) throw std::invalid_argument("null predicate in specialist");
}

std::vector<PredicateSpec> Specialist::specs() const {
  std::vector<PredicateSpec> out;
  for (const auto& p : phi_) out.push_back(p->spec());
  return out;
}

State Specialist::state_of(const HistoryView& h) const {
  State s = 0;
  for (const auto& p : phi_) s = (s << 1) | static_cast<State>((*p)(h));
  return s;
}

void Specialist::state_context(State s_prev, Action a, Bits& out) const {
  out.clear();
  push_bits(a, action_bits_, out);
  push_bits(s_prev, static_cast<std::uint32_t>(phi_.size()), out);
}

void Specialist::reward_context(State s_prev, Action a, State s_next, Bits& out) const {
  out.clear();
  push_bits(a, action_bits_, out);
  push_bits(s_next, static_cast<std::uint32_t>(phi_.size()), out);
  push_bits(s_prev, static_cast<std::uint32_t>(phi_.size()), out);
}

Specialist::Observed Specialist::observe(State s_prev, Action a, State s_next, Symbol r) {
  Bits& ctx = context_buffer;
  state_context(s_prev, a, ctx);
  Observed out{};
  // a predicate-free model has a single state; its chain still records it
  out.state_log_prob = states_.update(ctx, s_next);
  reward_context(s_prev, a, s_next, ctx);
  out.reward_log_prob = rewards_.update(ctx, r);
  return out;
}

void Specialist::commit() {
  states_.clear_trail();
  rewards_.clear_trail();
}

std::vector<double> Specialist::predict_reward(State s_prev, Action a, State s_next) const {
  Bits ctx;
  reward_context(s_prev, a, s_next, ctx);
  return rewards_.distribution(ctx);
}

double Specialist::reward_log_prob(State s_prev, Action a, State s_next, Symbol r) const {
  Bits ctx;
  reward_context(s_prev, a, s_next, ctx);
  return rewards_.log_probability(ctx, r);
}

double Specialist::state_log_prob(State s_prev, Action a, State s_next) const {
  Bits ctx;
  state_context(s_prev, a, ctx);
  return states_.log_probability(ctx, s_next);
}

std::pair<State, Symbol> Specialist::sample(State s, Action a, Rng& rng) {
  Bits& ctx = context_buffer;
  state_context(s, a, ctx);
  State next = states_.sample_update(ctx, phi_.empty() ? 1 : state_count(), rng);
  reward_context(s, a, next, ctx);
  auto r = static_cast<Symbol>(rewards_.sample_update(ctx, reward_count_, rng));
  return {next, r};
}

void Specialist::revert(std::size_t n_steps) {
  states_.revert(n_steps);
  rewards_.revert(n_steps);
}

std::uint64_t Specialist::structural_hash() const {
  return hash_combine(states_.structural_hash(), rewards_.structural_hash());
}

void Specialist::save(std::ostream& out) const {
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put(out, id_);
  put(out, static_cast<std::uint64_t>(arrival));
  put(out, static_cast<std::int64_t>(death ? static_cast<std::int64_t>(*death) : -1));
  put(out, static_cast<std::uint32_t>(phi_.size()));
  for (const auto& p : phi_) {
    std::string s = p->spec().canonical();
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  states_.save(out);
  rewards_.save(out);
  if (!out) throw std::runtime_error("failed to write specialist snapshot");
}

Specialist Specialist::load(std::istream& in, const PredicateRegistry& registry, const HistoryLayout& layout) {
  char magic[4];
  if (!in.read(magic, sizeof magic) || std::string(magic, 4) != std::string(kMagic, 4))
    throw std::runtime_error("not a specialist snapshot");
  if (take<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported specialist snapshot version");
  auto id = take<SpecialistId>(in);
  auto arrival = take<std::uint64_t>(in);
  auto death = take<std::int64_t>(in);
  auto d = take<std::uint32_t>(in);
  if (d > kMaxPredicates) throw std::runtime_error("corrupt specialist snapshot");
  std::vector<PredicatePtr> phi;
  for (std::uint32_t i = 0; i < d; ++i) {
    auto len = take<std::uint32_t>(in);
    std::string s(len, '\0');
    if (!in.read(s.data(), len)) throw std::runtime_error("truncated specialist snapshot");
    phi.push_back(registry.build(PredicateSpec::parse(s)));
  }
  Specialist sp(id, std::move(phi), layout);
  sp.arrival = arrival;
  if (death >= 0) sp.death = static_cast<std::size_t>(death);
  sp.states_ = SymbolChain::load(in);
  sp.rewards_ = SymbolChain::load(in);
  if (sp.states_.context_bits() != layout.action.bit_width + d ||
      sp.rewards_.symbol_bits() != layout.reward.bit_width)
    throw std::runtime_error("specialist snapshot does not match the history layout");
  return sp;
}

}  // namespace hedgemix
