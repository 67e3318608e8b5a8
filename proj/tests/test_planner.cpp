#include <doctest.h>

#include "fixtures.hpp"
#include "hedgemix/planner.hpp"

using namespace hedgemix;

TEST_CASE("uct_select prefers unvisited actions, then the bonus, then the value") {
  std::vector<ActionStats> a{{3.0, 3}, {0.0, 0}, {5.0, 2}};
  CHECK(uct_select(a, 5, 1.0) == 1);
  std::vector<ActionStats> b{{0.0, 0}, {0.0, 0}};
  CHECK(uct_select(b, 0, 1.0) == 0);
  std::vector<ActionStats> c{{1.0, 1}, {100.0, 100}};
  CHECK(uct_select(c, 101, 1.0) == 0);
  std::vector<ActionStats> d{{10.0 * 1e6, 1000000}, {0.0, 1000000}};
  CHECK(uct_select(d, 2000000, 1.0) == 0);
  std::vector<ActionStats> tie{{2.0, 4}, {2.0, 4}};
  CHECK(uct_select(tie, 8, 1.0) == 0);
}

TEST_CASE("rollouts over a constant-reward model sum the steps") {
  auto codec = RewardCodec::table({1.0});
  Specialist sp(1, fixture::phi(1), fixture::layout(2, codec));
  Rng rng(1);
  CHECK(rollout(sp, 0, 0, codec, rng) == 0.0);
  CHECK(rollout(sp, 0, 3, codec, rng) == 3.0);
  sp.revert(3);
}

TEST_CASE("constant reward gives Q = H + 1 exactly; zero reward gives zero") {
  for (double r : {1.0, 0.0}) {
    auto codec = RewardCodec::table({r});
    Specialist sp(1, fixture::phi(2), fixture::layout(3, codec));
    PlannerConfig cfg;
    cfg.horizon = 4;
    cfg.simulations = 100;
    auto q = q_estimate(sp, 0, codec, cfg);
    REQUIRE(q.size() == 3);
    for (double x : q) CHECK(x == 5.0 * r);
  }
}

TEST_CASE("zero simulations are rejected") {
  auto codec = RewardCodec::table({0.0, 1.0});
  Specialist sp(1, fixture::phi(1), fixture::layout(2, codec));
  PlannerConfig cfg;
  cfg.simulations = 0;
  CHECK_THROWS(q_estimate(sp, 0, codec, cfg));
}

TEST_CASE("bandit Q-values match the trained payoff rates") {
  auto codec = RewardCodec::table({0.0, 1.0});
  Specialist sp(1, fixture::phi(1), fixture::layout(2, codec));
  for (int i = 0; i < 1000; ++i) {
    sp.observe(0, 0, 0, i % 5 != 0);  // 0.8
    sp.observe(0, 1, 0, i % 5 == 0);  // 0.2
  }
  sp.commit();
  PlannerConfig cfg;
  cfg.horizon = 0;
  cfg.simulations = 10000;
  cfg.seed = 3;
  auto q = q_estimate(sp, 0, codec, cfg);
  CHECK(std::abs(q[0] - 0.8) < 0.05);
  CHECK(std::abs(q[1] - 0.2) < 0.05);
}

TEST_CASE("search leaves the model untouched and is deterministic per seed") {
  auto codec = RewardCodec::table({0.0, 1.0});
  Specialist sp(1, fixture::phi(1), fixture::layout(2, codec));
  fixture::TwoStateMdp::train(sp, 500, 1);
  const auto hash = sp.structural_hash();
  const auto nodes = sp.node_count();
  PlannerConfig cfg;
  cfg.horizon = 5;
  cfg.simulations = 300;
  cfg.seed = 42;
  auto q1 = q_estimate(sp, 1, codec, cfg);
  CHECK(sp.structural_hash() == hash);
  CHECK(sp.node_count() == nodes);
  CHECK(sp.trail_depth() == 0);
  auto q2 = q_estimate(sp, 1, codec, cfg);
  CHECK(q1 == q2);
  for (double x : q1) {
    CHECK(x >= 0.0);
    CHECK(x <= 6.0);
  }
}

TEST_CASE("Q estimates approach value iteration on a two-state MDP") {
  auto codec = RewardCodec::table({0.0, 1.0});
  Specialist sp(1, fixture::phi(1), fixture::layout(2, codec));
  fixture::TwoStateMdp::train(sp, 20000, 2);
  PlannerConfig cfg;
  cfg.horizon = 2;
  cfg.simulations = 20000;
  cfg.seed = 9;
  for (State s0 : {0u, 1u}) {
    auto q = q_estimate(sp, s0, codec, cfg);
    auto exact = oracle::q_values(fixture::believed_mdp(sp, codec), s0, cfg.horizon + 1);
    for (int a = 0; a < 2; ++a) CHECK(std::abs(q[a] - exact[a]) < 0.1);
  }
}
