#include <doctest.h>

#include <stdexcept>

#include "hedgemix/core.hpp"
#include "hedgemix/random.hpp"

using namespace hedgemix;

TEST_CASE("binarize is most-significant bit first and debinarize inverts it") {
  CHECK(binarize(5, 4) == Bits{0, 1, 0, 1});
  CHECK(binarize(0, 3) == Bits{0, 0, 0});
  CHECK(binarize(6, 3) == Bits{1, 1, 0});
  CHECK(debinarize(Bits{1, 1, 0}) == 6);
  CHECK(debinarize(Bits{0, 1, 0, 1}) == 5);
  CHECK(debinarize(Bits{0, 0, 0}) == 0);
  for (std::uint32_t w = 1; w <= 8; ++w)
    for (std::uint64_t k = 0; k < (1u << w); ++k) REQUIRE(debinarize(binarize(k, w)) == k);
}

TEST_CASE("binarize rejects out-of-range indices and debinarize rejects empty input") {
  CHECK_THROWS_AS(binarize(8, 3), std::domain_error);
  CHECK_THROWS_AS(debinarize(Bits{}), std::domain_error);
}

TEST_CASE("symbol spaces use the minimal width") {
  CHECK(SymbolSpace::of("a", 1).bit_width == 1);
  CHECK(SymbolSpace::of("a", 2).bit_width == 1);
  CHECK(SymbolSpace::of("a", 3).bit_width == 2);
  CHECK(SymbolSpace::of("a", 4).bit_width == 2);
  CHECK(SymbolSpace::of("a", 5).bit_width == 3);
  CHECK(SymbolSpace::of("a", 64).bit_width == 6);
  for (std::uint32_t c = 2; c <= 300; ++c) {
    auto s = SymbolSpace::of("a", c);
    CHECK((1u << (s.bit_width - 1)) < c);
    CHECK(c <= (1u << s.bit_width));
  }
}

TEST_CASE("linear reward codec clamps, is monotone and loses at most one level") {
  auto codec = RewardCodec::linear(-20.0, 10.0, 32);
  CHECK(codec.encode(-20.0) == 0);
  CHECK(codec.encode(10.0) == 31);
  CHECK(codec.encode(-5.0) == 16);
  CHECK(codec.encode(-100.0) == 0);
  CHECK(codec.encode(100.0) == 31);
  Symbol prev = 0;
  for (double r = -25.0; r <= 15.0; r += 0.01) {
    Symbol s = codec.encode(r);
    CHECK(s >= prev);
    prev = s;
    if (r >= -20.0 && r <= 10.0) CHECK(std::abs(codec.decode(s) - r) <= 30.0 / 32 + 1e-12);
    CHECK(codec.encode(codec.decode(s)) == s);
  }
}

TEST_CASE("table reward codec is exact") {
  auto codec = RewardCodec::table({-1.0, 0.0, 1.0});
  CHECK(codec.levels() == 3);
  for (Symbol s = 0; s < 3; ++s) CHECK(codec.encode(codec.decode(s)) == s);
  CHECK(codec.decode(codec.encode(1.0)) == 1.0);
  CHECK(codec.decoded_min() == -1.0);
  CHECK(codec.decoded_max() == 1.0);
}

TEST_CASE("the bit view concatenates a-o-r triples") {
  HistoryLayout l{SymbolSpace::of("a", 3), {SymbolSpace::of("o1", 2), SymbolSpace::of("o2", 5)},
                  SymbolSpace::of("r", 4)};
  CHECK(l.step_bits() == 2 + 1 + 3 + 2);
  History h(l);
  Bits expected;
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Action a = rng() % 3;
    std::vector<std::uint16_t> o{static_cast<std::uint16_t>(rng() % 2), static_cast<std::uint16_t>(rng() % 5)};
    Symbol r = rng() % 4;
    h.append(a, o, r, static_cast<double>(r));
    for (auto [v, w] : {std::pair<std::uint64_t, std::uint32_t>{a, 2}, {o[0], 1}, {o[1], 3}, {r, 2}}) {
      auto b = binarize(v, w);
      expected.insert(expected.end(), b.begin(), b.end());
    }
    REQUIRE(h.bit_view() == expected);
  }
  HistoryView v(h);
  for (std::size_t n = 1; n <= expected.size(); ++n) CHECK(v.suffix_bit(n) == expected[expected.size() - n]);
  CHECK(v.suffix_bit(expected.size() + 1) == -1);
}

TEST_CASE("history views truncate lookback") {
  History h(HistoryLayout{SymbolSpace::of("a", 2), {SymbolSpace::of("o", 4)}, SymbolSpace::of("r", 2)});
  for (std::uint16_t i = 0; i < 4; ++i) {
    std::vector<std::uint16_t> o{i};
    h.append(i % 2, o, 0, 0.0);
  }
  HistoryView v(h, 1, 3);
  CHECK(v.size() == 2);
  CHECK(v.observation_back(1)[0] == 2);
  CHECK(v.observation_back(2)[0] == 1);
  CHECK(v.back(3) == nullptr);
  CHECK(v.observation_back(3).empty());
  CHECK(v.suffix_bit(v.layout().step_bits() * 2 + 1) == -1);
}
