#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hedgemix/core.hpp"

namespace hedgemix {

using json = nlohmann::json;

// Rejection raised while parsing or building a predicate spec. `fields`
// names the offending keys (or the constructor name on a registry miss).
class SpecError : public std::invalid_argument {
 public:
  SpecError(const std::string& what, std::vector<std::string> fields)
      : std::invalid_argument(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

struct PredicateSpec {
  std::string constructor;
  json params = json::object();

  // Sorted keys, compact; this string is the predicate's identity.
  std::string canonical() const;
  json to_json() const;
  static PredicateSpec from_json(const json& j);
  static PredicateSpec parse(const std::string& text);

  bool operator==(const PredicateSpec& o) const {
    return constructor == o.constructor && params == o.params;
  }
};

// Reverse composition: compose(f, g)(x) == g(f(x)).
template <class F, class G>
auto compose(F f, G g) {
  return [f = std::move(f), g = std::move(g)](auto&& x) { return g(f(std::forward<decltype(x)>(x))); };
}

inline constexpr auto identity = [](auto&& x) -> decltype(auto) { return std::forward<decltype(x)>(x); };

// Encode_n: index of the 2^n equal-width bucket of [lo, hi] holding the
// (clamped) value.
std::uint32_t encode_bucket(double value, double lo, double hi, std::uint32_t n);
// Bit_i of an n-bit code, 1-indexed from the most significant bit.
int code_bit(std::uint32_t code, std::uint32_t n, std::uint32_t i);

// Keeps `bit` with probability p_keep using the uniform draw u.
inline int randomize_bit(int bit, double p_keep, double u) { return u < p_keep ? bit : 1 - bit; }

class Predicate {
 public:
  using Eval = std::function<int(const HistoryView&, std::uint64_t seed)>;

  Predicate(PredicateSpec spec, std::uint64_t seed, Eval eval);

  int operator()(const HistoryView& h) const;
  int eval(const HistoryView& h) const { return (*this)(h); }

  const PredicateSpec& spec() const { return spec_; }
  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }

 private:
  PredicateSpec spec_;
  std::string id_;
  std::uint64_t seed_;
  Eval eval_;
};

using PredicatePtr = std::shared_ptr<const Predicate>;

// Reads and validates constructor parameters; every key must be consumed.
class ParamReader {
 public:
  ParamReader(const PredicateSpec& spec) : spec_(spec) {}

  bool has(const std::string& key) const { return spec_.params.contains(key); }
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::string text(const std::string& key);
  std::string text(const std::string& key, const std::string& fallback);
  std::vector<std::int64_t> integers(const std::string& key);
  const json& raw(const std::string& key);
  // Throws SpecError listing unconsumed keys.
  void finish() const;
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;

 private:
  const json& get(const std::string& key);
  const PredicateSpec& spec_;
  std::set<std::string> used_;
};

// A real-valued history feature; nullopt when the history is too short.
using ValueFn = std::function<std::optional<double>(const HistoryView&)>;

struct ValueRange {
  double lo;
  double hi;
};

// Turns a value into a bit according to the spec's readout keys:
//   op "bit": Encode_n over [lo, hi], then Bit_i (=1)
//   op "geq": value >= thresh
// `range` supplies lo/hi when the spec omits them.
Predicate::Eval make_readout(ValueFn value, ParamReader& params, std::optional<ValueRange> range);

class PredicateRegistry;

struct ConstructorInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> keys;  // accepted parameter names
  std::function<Predicate::Eval(ParamReader&, const PredicateRegistry&)> build;
};

// Named constructors plus an intern table: equal specs yield the same
// predicate object (and so the same seed and the same bits).
class PredicateRegistry {
 public:
  explicit PredicateRegistry(std::uint64_t seed) : seed_(seed) {}
  PredicateRegistry(const PredicateRegistry&) = delete;
  PredicateRegistry& operator=(const PredicateRegistry&) = delete;

  void add(ConstructorInfo info);
  bool contains(const std::string& name) const { return constructors_.count(name) > 0; }
  std::vector<std::string> names() const;
  const ConstructorInfo& info(const std::string& name) const;

  PredicatePtr build(const PredicateSpec& spec) const;
  // Validates without interning.
  void validate(const PredicateSpec& spec) const;
  json manifest() const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t seed_for(const std::string& key) const;

 private:
  std::uint64_t seed_;
  std::map<std::string, ConstructorInfo> constructors_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, PredicatePtr> interned_;
};

// Constructors that only look at the bit view: RandomBit, Randomize, Suffix.
void register_generic_predicates(PredicateRegistry& registry);

struct PredicatePools {
  std::vector<PredicateSpec> informative;
  std::vector<PredicateSpec> uninformative;
};

}  // namespace hedgemix
