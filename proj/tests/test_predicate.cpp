#include <doctest.h>

#include <random>
#include <set>

#include "hedgemix/domain.hpp"
#include "hedgemix/domain_predicates.hpp"
#include "hedgemix/envs.hpp"
#include "hedgemix/predicate.hpp"

using namespace hedgemix;

namespace {

Domain epidemic_domain() {
  return make_domain("epidemic", {{"graph", {{"synth", {{"n", 20}, {"degree", 4}}}}}}, 7);
}

History rps_history(const std::vector<std::pair<Action, std::uint16_t>>& rounds) {
  History h(rps_layout());
  for (auto [a, env] : rounds) {
    std::vector<std::uint16_t> o{env};
    double r = rps_payoff(static_cast<std::uint16_t>(a), env);
    h.append(a, o, static_cast<Symbol>(r + 1), r);
  }
  return h;
}

std::vector<std::string> spec_error_fields(const PredicateRegistry& reg, const PredicateSpec& spec) {
  try {
    reg.build(spec);
  } catch (const SpecError& e) {
    return e.fields();
  }
  return {"<no error>"};
}

}  // namespace

TEST_CASE("encode_bucket clamps and splits the range evenly") {
  CHECK(encode_bucket(0.3, 0.0, 1.0, 2) == 1);
  CHECK(encode_bucket(1.0, 0.0, 1.0, 2) == 3);
  CHECK(encode_bucket(-5.0, 0.0, 1.0, 3) == 0);
  std::set<std::uint32_t> seen;
  std::uint32_t prev = 0;
  for (double v = -0.5; v <= 1.5; v += 0.001) {
    auto b = encode_bucket(v, 0.0, 1.0, 3);
    CHECK(b >= prev);
    prev = b;
    seen.insert(b);
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("reverse composition applies left to right") {
  auto encode2 = [](double v) { return encode_bucket(v, 0.0, 1.0, 2); };
  auto bit1 = [](std::uint32_t code) { return code_bit(code, 2, 1); };
  auto is_one = [](int b) { return b == 1; };
  CHECK(compose(compose(encode2, bit1), is_one)(0.3) == false);
  CHECK(code_bit(1, 2, 2) == 1);
  auto f = [](int x) { return x + 3; };
  auto g = [](int x) { return x * 2; };
  auto h = [](int x) { return x - 7; };
  for (int x = -20; x <= 20; ++x) {
    CHECK(compose(identity, f)(x) == f(x));
    CHECK(compose(f, identity)(x) == f(x));
    CHECK(compose(f, g)(x) == g(f(x)));
    CHECK(compose(compose(f, g), h)(x) == compose(f, compose(g, h))(x));
  }
}

TEST_CASE("randomize keeps or flips bits by the uniform draw") {
  for (double u : {0.0, 0.3, 0.999})
    for (int b : {0, 1}) {
      CHECK(randomize_bit(b, 1.0, u) == b);
      CHECK(randomize_bit(b, 0.0, u) == 1 - b);
    }
  std::size_t kept = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) kept += randomize_bit(1, 0.8, counter_uniform(99, i)) == 1;
  CHECK(std::abs(static_cast<double>(kept) / n - 0.8) < 0.01);
}

TEST_CASE("Randomize predicates are stable per step and keep at the requested rate") {
  PredicateRegistry reg(5);
  register_generic_predicates(reg);
  register_rps_predicates(reg);
  auto p = reg.build(PredicateSpec::parse(R"({"constructor":"Randomize","p":0.8,"inner":{"constructor":"IsRock"}})"));
  auto inner = reg.build(PredicateSpec{"IsRock", {}});
  Rng rng(1);
  std::vector<std::pair<Action, std::uint16_t>> rounds;
  for (int i = 0; i < 100000; ++i) rounds.push_back({rng() % 3, static_cast<std::uint16_t>(rng() % 3)});
  History h = rps_history(rounds);
  std::size_t kept = 0;
  for (std::size_t t = 1; t <= h.size(); ++t) {
    HistoryView v(h, 0, t);
    int a = p->eval(v);
    REQUIRE(a == p->eval(v));
    kept += a == inner->eval(v);
  }
  CHECK(std::abs(static_cast<double>(kept) / h.size() - 0.8) < 0.01);
}

TEST_CASE("RandomBit fires at rate p and instances differ") {
  PredicateRegistry reg(5);
  register_generic_predicates(reg);
  auto a = reg.build(PredicateSpec{"RandomBit", {{"p", 0.3}, {"k", 0}}});
  auto b = reg.build(PredicateSpec{"RandomBit", {{"p", 0.3}, {"k", 1}}});
  CHECK(a->seed() != b->seed());
  History h = rps_history(std::vector<std::pair<Action, std::uint16_t>>(20000, {0, 0}));
  std::size_t ones = 0, agree = 0;
  for (std::size_t t = 1; t <= h.size(); ++t) {
    HistoryView v(h, 0, t);
    ones += a->eval(v);
    agree += a->eval(v) == b->eval(v);
  }
  CHECK(std::abs(ones / 20000.0 - 0.3) < 0.015);
  CHECK(std::abs(agree / 20000.0 - 0.58) < 0.015);  // 0.3^2 + 0.7^2
}

TEST_CASE("RPS predicates read the previous round") {
  PredicateRegistry reg(1);
  register_rps_predicates(reg);
  auto rock = reg.build(PredicateSpec{"IsRock", {{"lag", 1}}});
  auto lose = reg.build(PredicateSpec{"IsLose", {{"lag", 1}}});
  auto rock2 = reg.build(PredicateSpec{"IsRock", {{"lag", 2}}});
  History h = rps_history({{kScissors, kRock}, {kRock, kPaper}});
  CHECK(rock->eval(HistoryView(h, 0, 1)) == 1);
  CHECK(lose->eval(HistoryView(h, 0, 1)) == 1);
  CHECK(rock->eval(h) == 0);
  CHECK(lose->eval(h) == 1);
  CHECK(rock2->eval(h) == 1);
  History win = rps_history({{kPaper, kRock}});
  CHECK(lose->eval(win) == 0);
  History draw = rps_history({{kRock, kRock}});
  CHECK(lose->eval(draw) == 0);
}

TEST_CASE("taxi predicates read the latest observation") {
  PredicateRegistry reg(1);
  register_generic_predicates(reg);
  register_taxi_predicates(reg);
  History h(taxi_layout());
  // taxi at (0, 0) with the passenger in corner 3 at (1, 4), destination corner 0
  std::vector<std::uint16_t> o{0, 0, 3, 0, 0};
  h.append(kNorth, o, 0, -1.0);
  auto xp = reg.build(PredicateSpec{"XDistToPassenger", {{"op", "geq"}, {"thresh", 1}}});
  auto yp = reg.build(PredicateSpec{"YDistToPassenger", {{"op", "bit"}, {"n", 3}, {"i", 1}}});
  auto picked = reg.build(PredicateSpec{"PassengerPickedUp", json::object()});
  CHECK(xp->eval(h) == 1);
  CHECK(yp->eval(h) == 1);  // +4 on [-4, 4] is the top bucket
  CHECK(picked->eval(h) == 0);
  std::vector<std::uint16_t> o2{1, 4, 3, 0, 1};
  h.append(kPickup, o2, 1, 0.0);
  CHECK(picked->eval(h) == 1);
  CHECK(xp->eval(h) == 0);
}

TEST_CASE("every pooled predicate defaults to 0 on the empty history and is pure") {
  std::vector<Domain> domains{make_domain("rps", json::object(), 1), make_domain("taxi", json::object(), 1),
                              epidemic_domain()};
  Rng rng(4);
  for (auto& d : domains) {
    History empty(d.layout);
    History h(d.layout);
    for (int i = 0; i < 30; ++i) {
      std::vector<std::uint16_t> o;
      for (const auto& s : d.layout.observation) o.push_back(static_cast<std::uint16_t>(rng() % s.cardinality));
      Symbol r = rng() % d.codec.levels();
      h.append(rng() % d.layout.action.cardinality, o, r, d.codec.decode(r));
    }
    for (const auto* pool : {&d.pools.informative, &d.pools.uninformative})
      for (const auto& spec : *pool) {
        auto p = d.registry->build(spec);
        CHECK_MESSAGE(p->eval(empty) == 0, spec.canonical());
        int first = p->eval(h);
        CHECK((first == 0 || first == 1));
        CHECK(p->eval(h) == first);
      }
  }
}

TEST_CASE("specs round-trip through their canonical text") {
  std::vector<Domain> domains{make_domain("rps", json::object(), 1), make_domain("taxi", json::object(), 1),
                              epidemic_domain()};
  for (auto& d : domains)
    for (const auto* pool : {&d.pools.informative, &d.pools.uninformative})
      for (const auto& spec : *pool) {
        auto back = PredicateSpec::parse(spec.canonical());
        CHECK(back == spec);
        CHECK(back.canonical() == spec.canonical());
        CHECK(PredicateSpec::from_json(spec.to_json()) == spec);
      }
  auto a = PredicateSpec::parse(R"({"constructor":"RandomBit","p":0.1,"k":2})");
  auto b = PredicateSpec::parse(R"({"k":2,"constructor":"RandomBit","p":0.1})");
  CHECK(a.canonical() == b.canonical());
}

TEST_CASE("bad specs are rejected with the offending fields") {
  auto d = make_domain("taxi", json::object(), 1);
  const auto& reg = *d.registry;
  CHECK(spec_error_fields(reg, PredicateSpec{"NoSuchThing", json::object()}) ==
        std::vector<std::string>{"NoSuchThing"});
  CHECK(spec_error_fields(reg, PredicateSpec{"Suffix", json::object()}) == std::vector<std::string>{"N"});
  CHECK(spec_error_fields(reg, PredicateSpec{"Suffix", {{"N", 3}, {"bogus", 1}}}) ==
        std::vector<std::string>{"bogus"});
  CHECK(spec_error_fields(reg, PredicateSpec{"Suffix", {{"N", "three"}}}) == std::vector<std::string>{"N"});
  CHECK(spec_error_fields(reg, PredicateSpec{"XDistToPassenger", {{"op", "bit"}, {"n", 2}}}) ==
        std::vector<std::string>{"i"});
  CHECK_THROWS_AS(PredicateSpec::parse("{not json"), SpecError);
  CHECK_THROWS_AS(PredicateSpec::parse(R"({"p":1})"), SpecError);
}

TEST_CASE("equal specs intern to one predicate") {
  auto d = make_domain("rps", json::object(), 3);
  auto a = d.registry->build(PredicateSpec{"RandomBit", {{"p", 0.5}, {"k", 0}}});
  auto b = d.registry->build(PredicateSpec::parse(R"({"k":0,"p":0.5,"constructor":"RandomBit"})"));
  auto c = d.registry->build(PredicateSpec{"RandomBit", {{"p", 0.5}, {"k", 1}}});
  CHECK(a.get() == b.get());
  CHECK(a.get() != c.get());
  CHECK(a->id() == b->id());
  auto other = make_domain("rps", json::object(), 3);
  CHECK(other.registry->build(a->spec())->seed() == a->seed());
}

TEST_CASE("PercentAction reads the share of an action over a window") {
  auto d = epidemic_domain();
  auto p = d.registry->build(PredicateSpec{"PercentAction", {{"a", 0}, {"N", 50}, {"op", "geq"}, {"thresh", 0.5}}});
  History h(d.layout);
  std::vector<std::uint16_t> o(d.layout.observation.size(), kUnknown);
  for (int i = 0; i < 100; ++i) {
    h.append(i < 60 ? 0 : 1, o, 0, 0.0);
    // among the last min(50, t) actions, count zeros
    std::size_t k = std::min<std::size_t>(50, h.size()), zeros = 0;
    for (std::size_t lag = 1; lag <= k; ++lag) zeros += h.step(h.size() - lag).action == 0;
    CHECK(p->eval(h) == (zeros * 2 >= k ? 1 : 0));
  }
}

TEST_CASE("ActionSequenceIndicator matches a direct suffix comparison") {
  auto d = epidemic_domain();
  Rng rng(12);
  History h(d.layout);
  std::vector<std::uint16_t> o(d.layout.observation.size(), kUnknown);
  std::vector<PredicatePtr> preds;
  std::vector<std::vector<Action>> seqs;
  for (std::size_t k = 1; k <= 3; ++k)
    for (int code = 0; code < (1 << k); ++code) {
      std::vector<Action> seq;
      for (std::size_t j = 0; j < k; ++j) seq.push_back((code >> j) & 1);
      seqs.push_back(seq);
      json arr = json::array();
      for (Action a : seq) arr.push_back(a);
      preds.push_back(d.registry->build(PredicateSpec{"ActionSequenceIndicator", {{"actions", arr}}}));
    }
  for (int t = 0; t < 200; ++t) {
    h.append(rng() % 2, o, 0, 0.0);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      const auto& seq = seqs[i];
      int want = h.size() >= seq.size();
      for (std::size_t j = 0; want && j < seq.size(); ++j)
        want = h.step(h.size() - seq.size() + j).action == seq[j];
      CHECK(preds[i]->eval(h) == want);
    }
  }
}

TEST_CASE("MAReward reads the mean of the last w rewards") {
  auto d = epidemic_domain();
  const auto& codec = d.codec;
  const double mid = 0.5 * (codec.r_min() + codec.r_max());
  auto p = d.registry->build(PredicateSpec{"MAReward", {{"w", 5}, {"op", "geq"}, {"thresh", mid}}});
  Rng rng(8);
  std::uniform_real_distribution<double> u(codec.r_min(), codec.r_max());
  History h(d.layout);
  std::vector<std::uint16_t> o(d.layout.observation.size(), kUnknown);
  for (int t = 0; t < 200; ++t) {
    double r = u(rng);
    h.append(0, o, codec.encode(r), r);
    std::size_t k = std::min<std::size_t>(5, h.size());
    double sum = 0;
    for (std::size_t lag = 1; lag <= k; ++lag) sum += h.step(h.size() - lag).reward;
    CHECK(p->eval(h) == (sum / k >= mid ? 1 : 0));
  }
}
