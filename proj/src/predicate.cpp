#include "hedgemix/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hedgemix/random.hpp"

namespace hedgemix {

std::string PredicateSpec::canonical() const { return to_json().dump(); }

json PredicateSpec::to_json() const {
  json j = params;
  j["constructor"] = constructor;
  return j;
}

PredicateSpec PredicateSpec::from_json(const json& j) {
  if (!j.is_object()) throw SpecError("predicate spec must be an object", {});
  auto it = j.find("constructor");
  if (it == j.end() || !it->is_string())
    throw SpecError("predicate spec needs a string 'constructor'", {"constructor"});
  PredicateSpec s;
  s.constructor = it->get<std::string>();
  s.params = j;
  s.params.erase("constructor");
  return s;
}

PredicateSpec PredicateSpec::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed predicate spec: ") + e.what(), {});
  }
  return from_json(j);
}

std::uint32_t encode_bucket(double value, double lo, double hi, std::uint32_t n) {
  if (!(lo < hi)) throw std::invalid_argument("encode_bucket requires lo < hi");
  if (n == 0 || n > 31) throw std::invalid_argument("encode_bucket width out of range");
  const double buckets = std::ldexp(1.0, static_cast<int>(n));
  double x = std::clamp(value, lo, hi);
  double k = std::floor((x - lo) / (hi - lo) * buckets);
  return static_cast<std::uint32_t>(std::min(k, buckets - 1.0));
}

int code_bit(std::uint32_t code, std::uint32_t n, std::uint32_t i) {
  if (i == 0 || i > n) throw std::out_of_range("bit index outside code width");
  return static_cast<int>((code >> (n - i)) & 1u);
}

Predicate::Predicate(PredicateSpec spec, std::uint64_t seed, Eval eval)
    : spec_(std::move(spec)), seed_(seed), eval_(std::move(eval)) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(spec_.canonical())));
  id_ = buf;
}

int Predicate::operator()(const HistoryView& h) const {
  if (h.empty()) return 0;
  return eval_(h, seed_) ? 1 : 0;
}

// -- parameters -----------------------------------------------------------------

const json& ParamReader::get(const std::string& key) {
  used_.insert(key);
  auto it = spec_.params.find(key);
  if (it == spec_.params.end()) fail(key, "missing required parameter");
  return *it;
}

void ParamReader::fail(const std::string& key, const std::string& why) const {
  throw SpecError(spec_.constructor + ": " + key + ": " + why, {key});
}

double ParamReader::number(const std::string& key) {
  const json& v = get(key);
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

double ParamReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : (used_.insert(key), fallback);
}

std::int64_t ParamReader::integer(const std::string& key) {
  const json& v = get(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (std::floor(d) == d) return static_cast<std::int64_t>(d);
  }
  fail(key, "expected an integer");
}

std::int64_t ParamReader::integer(const std::string& key, std::int64_t fallback) {
  return has(key) ? integer(key) : (used_.insert(key), fallback);
}

std::string ParamReader::text(const std::string& key) {
  const json& v = get(key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

std::string ParamReader::text(const std::string& key, const std::string& fallback) {
  return has(key) ? text(key) : (used_.insert(key), fallback);
}

std::vector<std::int64_t> ParamReader::integers(const std::string& key) {
  const json& v = get(key);
  if (!v.is_array()) fail(key, "expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) fail(key, "expected an array of integers");
    out.push_back(x.get<std::int64_t>());
  }
  return out;
}

const json& ParamReader::raw(const std::string& key) { return get(key); }

void ParamReader::finish() const {
  std::vector<std::string> unknown;
  for (auto it = spec_.params.begin(); it != spec_.params.end(); ++it)
    if (!used_.count(it.key())) unknown.push_back(it.key());
  if (unknown.empty()) return;
  std::string msg = spec_.constructor + ": unknown parameter";
  if (unknown.size() > 1) msg += "s";
  for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : " ") + unknown[i];
  throw SpecError(msg, unknown);
}

Predicate::Eval make_readout(ValueFn value, ParamReader& params, std::optional<ValueRange> range) {
  std::string op = params.text("op");
  if (op == "geq") {
    double thresh = params.number("thresh");
    return [value = std::move(value), thresh](const HistoryView& h, std::uint64_t) {
      auto v = value(h);
      return v && *v >= thresh ? 1 : 0;
    };
  }
  if (op == "bit") {
    auto n = params.integer("n");
    auto i = params.integer("i");
    if (n < 1 || n > 16) params.fail("n", "bucket width must be in 1..16");
    if (i < 1 || i > n) params.fail("i", "bit index must be in 1..n");
    double lo = range ? params.number("lo", range->lo) : params.number("lo");
    double hi = range ? params.number("hi", range->hi) : params.number("hi");
    if (!(lo < hi)) params.fail("hi", "range needs lo < hi");
    auto bits = static_cast<std::uint32_t>(n);
    auto index = static_cast<std::uint32_t>(i);
    auto encode = [lo, hi, bits](double v) { return encode_bucket(v, lo, hi, bits); };
    auto bit = [bits, index](std::uint32_t code) { return code_bit(code, bits, index); };
    auto eq1 = [](int b) { return b == 1 ? 1 : 0; };
    auto chain = compose(compose(encode, bit), eq1);
    return [value = std::move(value), chain](const HistoryView& h, std::uint64_t) {
      auto v = value(h);
      return v ? chain(*v) : 0;
    };
  }
  params.fail("op", "expected \"bit\" or \"geq\"");
}

// -- registry ----------------------------------------------------------------------

void PredicateRegistry::add(ConstructorInfo info) {
  std::string name = info.name;
  constructors_[name] = std::move(info);
}

std::vector<std::string> PredicateRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : constructors_) out.push_back(k);
  return out;
}

const ConstructorInfo& PredicateRegistry::info(const std::string& name) const {
  auto it = constructors_.find(name);
  if (it == constructors_.end()) throw SpecError("unknown predicate constructor '" + name + "'", {name});
  return it->second;
}

std::uint64_t PredicateRegistry::seed_for(const std::string& key) const {
  return hash_combine(seed_, hash_string(key));
}

PredicatePtr PredicateRegistry::build(const PredicateSpec& spec) const {
  std::string key = spec.canonical();
  {
    std::lock_guard lock(mutex_);
    auto it = interned_.find(key);
    if (it != interned_.end()) return it->second;
  }
  const ConstructorInfo& ci = info(spec.constructor);
  ParamReader reader(spec);
  auto eval = ci.build(reader, *this);
  reader.finish();
  auto p = std::make_shared<const Predicate>(spec, seed_for(key), std::move(eval));
  std::lock_guard lock(mutex_);
  return interned_.emplace(key, p).first->second;
}

void PredicateRegistry::validate(const PredicateSpec& spec) const {
  const ConstructorInfo& ci = info(spec.constructor);
  ParamReader reader(spec);
  (void)ci.build(reader, *this);
  reader.finish();
}

json PredicateRegistry::manifest() const {
  json out = json::array();
  for (const auto& [name, ci] : constructors_) {
    out.push_back({{"constructor", name}, {"summary", ci.summary}, {"params", ci.keys}});
  }
  return out;
}

// -- generic constructors ---------------------------------------------------------------

void register_generic_predicates(PredicateRegistry& registry) {
  registry.add({"RandomBit", "1 with probability p, redrawn every step", {"p", "k"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  double p = r.number("p");
                  if (p < 0 || p > 1) r.fail("p", "probability outside [0,1]");
                  (void)r.integer("k", 0);  // instance label, only changes the seed
                  return [p](const HistoryView& h, std::uint64_t seed) {
                    return counter_uniform(seed, h.end_index()) < p ? 1 : 0;
                  };
                }});
  registry.add({"Randomize", "inner predicate kept with probability p, else flipped", {"p", "inner"},
                [](ParamReader& r, const PredicateRegistry& reg) -> Predicate::Eval {
                  double p = r.number("p");
                  if (p < 0 || p > 1) r.fail("p", "probability outside [0,1]");
                  PredicatePtr inner;
                  try {
                    inner = reg.build(PredicateSpec::from_json(r.raw("inner")));
                  } catch (const SpecError& e) {
                    std::vector<std::string> fields{"inner"};
                    for (const auto& f : e.fields()) fields.push_back("inner." + f);
                    throw SpecError(std::string("Randomize: inner: ") + e.what(), fields);
                  }
                  return [p, inner](const HistoryView& h, std::uint64_t seed) {
                    return randomize_bit((*inner)(h), p, counter_uniform(seed, h.end_index()));
                  };
                }});
  registry.add({"Suffix", "N-th bit from the end of the binary history", {"N"},
                [](ParamReader& r, const PredicateRegistry&) -> Predicate::Eval {
                  auto n = r.integer("N");
                  if (n < 1) r.fail("N", "must be >= 1");
                  return [n](const HistoryView& h, std::uint64_t) {
                    return h.suffix_bit(static_cast<std::size_t>(n)) == 1 ? 1 : 0;
                  };
                }});
}

}  // namespace hedgemix
