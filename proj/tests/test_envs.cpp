#include <doctest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <set>

#include "hedgemix/envs.hpp"
#include "hedgemix/graph.hpp"
#include "hedgemix/particle_filter.hpp"

using namespace hedgemix;

namespace {

std::shared_ptr<const EpidemicModel> two_node_model() {
  auto g = std::make_shared<const ContactGraph>(ContactGraph::from_edges(2, {{0, 1}}));
  return std::make_shared<const EpidemicModel>(g, EpidemicConfig{});
}

// Shortest-path counting by brute force: betweenness of v is the sum over
// pairs s < t of sigma_st(v) / sigma_st.
std::vector<double> betweenness_oracle(const ContactGraph& g) {
  const std::size_t n = g.n;
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  std::vector<std::vector<double>> sigma(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::queue<NodeId> q;
    dist[s][s] = 0;
    sigma[s][s] = 1.0;
    q.push(static_cast<NodeId>(s));
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop();
      for (NodeId w : g.adjacency[u]) {
        if (dist[s][w] < 0) {
          dist[s][w] = dist[s][u] + 1;
          q.push(w);
        }
        if (dist[s][w] == dist[s][u] + 1) sigma[s][w] += sigma[s][u];
      }
    }
  }
  std::vector<double> bc(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = s + 1; t < n; ++t) {
      if (dist[s][t] < 0) continue;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == s || v == t || dist[s][v] < 0 || dist[v][t] < 0) continue;
        if (dist[s][v] + dist[v][t] == dist[s][t]) bc[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
      }
    }
  return bc;
}

bool connected_bfs(const ContactGraph& g) {
  std::vector<char> seen(g.n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w : g.adjacency[u])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == g.n;
}

}  // namespace

// -- RPS --------------------------------------------------------------------------------

TEST_CASE("RPS payoff is win +1, draw 0, loss -1") {
  CHECK(rps_payoff(kPaper, kRock) == 1.0);
  CHECK(rps_payoff(kRock, kRock) == 0.0);
  CHECK(rps_payoff(kScissors, kRock) == -1.0);
  CHECK(rps_payoff(kScissors, kPaper) == 1.0);
  CHECK(rps_payoff(kRock, kScissors) == 1.0);
}

TEST_CASE("the RPS opponent repeats a winning rock and is otherwise uniform") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto out = rps_step(RpsRound{kRock, kScissors}, kPaper, rng);
    REQUIRE(out.env_move == kRock);
    CHECK(out.reward == 1.0);
  }
  std::array<int, 3> first{}, after_loss{};
  for (int i = 0; i < 10000; ++i) {
    ++first[rps_step(std::nullopt, kRock, rng).env_move];
    ++after_loss[rps_step(RpsRound{kRock, kPaper}, kRock, rng).env_move];  // env lost with rock
  }
  for (int m = 0; m < 3; ++m) {
    CHECK(std::abs(first[m] / 10000.0 - 1.0 / 3) < 0.02);
    CHECK(std::abs(after_loss[m] / 10000.0 - 1.0 / 3) < 0.02);
  }
}

// -- Taxi -------------------------------------------------------------------------------

TEST_CASE("taxi walls cost -1 and leave the taxi in place") {
  Rng rng(1);
  TaxiState s{0, 2, 0, 1, false};
  auto out = taxi_step(s, kNorth, rng);
  CHECK(out.next == s);
  CHECK(out.reward == -1.0);
  s = {1, 4, 0, 1, false};
  CHECK(taxi_step(s, kSouth, rng).reward == -1.0);
  CHECK(taxi_step(s, kEast, rng).reward == -1.0);
  auto west = taxi_step(s, kWest, rng);
  CHECK(west.reward == 0.0);
  CHECK(west.next.y == 3);
  CHECK_THROWS(taxi_step(s, 6, rng));
}

TEST_CASE("taxi pickup and dropoff") {
  Rng rng(1);
  // passenger at corner 2 = (0, 4), destination corner 1 = (1, 0)
  TaxiState s{0, 4, 2, 1, false};
  auto up = taxi_step(s, kPickup, rng);
  CHECK(up.next.in_taxi);
  CHECK(up.reward == 0.0);
  auto wrong = taxi_step(up.next, kDropoff, rng);
  CHECK(wrong.reward == 0.0);
  CHECK(wrong.next.in_taxi);
  TaxiState there = up.next;
  there.x = 1;
  there.y = 0;
  auto done = taxi_step(there, kDropoff, rng);
  CHECK(done.reward == 100.0);
  CHECK(done.delivered);
  CHECK_FALSE(done.next.in_taxi);
  CHECK(done.next.passenger != done.next.destination);
  CHECK(done.next.x == 1);
  CHECK(done.next.y == 0);
  auto empty_pickup = taxi_step(TaxiState{1, 1, 0, 1, false}, kPickup, rng);
  CHECK_FALSE(empty_pickup.next.in_taxi);
}

TEST_CASE("taxi observations stay inside their spaces") {
  TaxiEnvironment env(4);
  const auto& l = env.layout();
  Rng rng(8);
  for (int i = 0; i < 5000; ++i) {
    auto p = env.step(rng() % 6);
    REQUIRE(p.observation.size() == l.observation.size());
    for (std::size_t k = 0; k < p.observation.size(); ++k) CHECK(l.observation[k].contains(p.observation[k]));
    CHECK((p.reward == -1.0 || p.reward == 0.0 || p.reward == 100.0));
  }
}

// -- SEIRS ------------------------------------------------------------------------------

TEST_CASE("SEIRS rows follow the equations and sum to one") {
  EpidemicParams p;
  auto s = transition_row(Label::S, 1, 1.0, p);
  CHECK(s[1] == doctest::Approx(0.2));
  CHECK(transition_row(Label::E, 0, 1.0, p)[2] == doctest::Approx(0.3));
  CHECK(transition_row(Label::S, 2, 2.0, p)[1] == doctest::Approx((1 - 0.8 * 0.8) / 2));
  CHECK(transition_row(Label::I, 3, 4.0, p)[3] == doctest::Approx(0.08));
  CHECK(transition_row(Label::R, 0, 1.0, p)[0] == doctest::Approx(0.1));
  CHECK(observation_row(Label::I, p)[kPositive] == doctest::Approx(0.72));
  for (Label l : {Label::S, Label::E, Label::I, Label::R}) {
    for (unsigned k = 0; k <= 5; ++k)
      for (double omega : {1.0, 2.0, 4.0}) {
        auto row = transition_row(l, k, omega, p);
        double sum = 0;
        for (double x : row) {
          CHECK(x >= 0.0);
          sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
      }
    auto o = observation_row(l, p);
    CHECK(o[0] + o[1] + o[2] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("two-node Monte-Carlo frequencies match the transition rows") {
  auto model = two_node_model();
  const auto& p = model->config().params;
  Rng rng(77);
  struct Case {
    Label a, b;
    std::uint8_t immunity_a;
  };
  for (Case c : {Case{Label::S, Label::I, 0}, Case{Label::S, Label::I, 1}, Case{Label::E, Label::R, 0},
                 Case{Label::I, Label::S, 2}}) {
    EpidemicState start{{c.a, c.b}, {c.immunity_a, 0}, {0, 0}};
    auto k = model->infectious_neighbours(start);
    auto row_a = transition_row(c.a, k[0], model->config().immunity[c.immunity_a], p);
    auto row_b = transition_row(c.b, k[1], model->config().immunity[0], p);
    std::map<std::pair<int, int>, int> counts;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      EpidemicState s = start;
      model->evolve(s, p, rng);
      ++counts[{static_cast<int>(s.label[0]), static_cast<int>(s.label[1])}];
    }
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) {
        double freq = counts[{x, y}] / static_cast<double>(trials);
        CHECK(std::abs(freq - row_a[x] * row_b[y]) < 0.005);
      }
  }
}

TEST_CASE("quarantine is transient and removes incident edges") {
  auto g = std::make_shared<const ContactGraph>(ContactGraph::from_edges(3, {{0, 1}, {1, 2}}));
  EpidemicModel model(g, EpidemicConfig{});
  EpidemicState s{{Label::I, Label::S, Label::I}, {0, 0, 0}, {0, 0, 0}};
  // node 1 ranks first; quarantining the top 20% of 3 nodes isolates nobody,
  // the top 40% isolates node 1
  model.apply_action(s, 2);
  CHECK(decode_epidemic_action(2).kind == EpidemicAction::Kind::kQuarantine);
  CHECK(s.quarantined[1] == 1);
  CHECK(model.infectious_neighbours(s)[1] == 0);
  model.apply_action(s, 0);
  CHECK(std::count(s.quarantined.begin(), s.quarantined.end(), 1) == 0);
  CHECK(model.infectious_neighbours(s)[1] == 2);
}

TEST_CASE("vaccination raises immunity one level up to the cap") {
  auto model = two_node_model();
  EpidemicState s{{Label::S, Label::S}, {0, 0}, {0, 0}};
  // with 2 nodes the band (0.4, 0.6] holds rank position 0 only
  Action band = 0;
  for (Action a = 0; a < kEpidemicActions; ++a) {
    auto act = decode_epidemic_action(a);
    if (act.kind == EpidemicAction::Kind::kVaccinate && act.lo == 0.4) band = a;
  }
  for (int i = 0; i < 5; ++i) model->apply_action(s, band);
  NodeId top = model->graph().betweenness_rank[0];
  CHECK(s.immunity[top] == 2);
  CHECK(s.immunity[1 - top] == 0);
}

TEST_CASE("the action set has one DoNothing, five quarantines and five vaccinations") {
  std::map<EpidemicAction::Kind, int> kinds;
  for (Action a = 0; a < kEpidemicActions; ++a) ++kinds[decode_epidemic_action(a).kind];
  CHECK(kinds[EpidemicAction::Kind::kDoNothing] == 1);
  CHECK(kinds[EpidemicAction::Kind::kQuarantine] == 5);
  CHECK(kinds[EpidemicAction::Kind::kVaccinate] == 5);
  EpidemicConfig cfg;
  CHECK(epidemic_action_cost(0, 100, cfg) == 0.0);
  for (Action a = 1; a < kEpidemicActions; ++a) {
    auto act = decode_epidemic_action(a);
    double want = act.kind == EpidemicAction::Kind::kQuarantine ? 0.10 * act.hi * 100 : 0.05 * (act.hi - act.lo) * 100;
    CHECK(epidemic_action_cost(a, 100, cfg) == doctest::Approx(want));
  }
}

TEST_CASE("without transmission the infection only burns out") {
  auto g = std::make_shared<const ContactGraph>(synth_graph(40, 4, 3));
  EpidemicConfig cfg;
  cfg.params.beta = 0.0;
  cfg.params.rho = 0.0;
  cfg.initial_exposed = 0.5;
  EpidemicModel model(g, cfg);
  Rng rng(5);
  auto s = model.initial_state(rng);
  auto active = [&] {
    return std::count_if(s.label.begin(), s.label.end(), [](Label l) { return l == Label::E || l == Label::I; });
  };
  auto prev = active();
  for (int t = 0; t < 200; ++t) {
    model.apply_action(s, 0);
    model.evolve(s, cfg.params, rng);
    CHECK(active() <= prev);
    prev = active();
  }
}

TEST_CASE("epidemic rewards count positives, charge actions and pay the terminal bonus") {
  auto g = std::make_shared<const ContactGraph>(synth_graph(10, 2, 1));
  auto model = std::make_shared<const EpidemicModel>(g, EpidemicConfig{});
  EpidemicEnvironment env(model, 3);
  auto codec = model->reward_codec();
  for (int t = 0; t < 3000; ++t) {
    Action a = t % kEpidemicActions;
    std::size_t before = env.episodes_completed();
    auto p = env.step(a);
    auto pos = std::count(p.observation.begin(), p.observation.end(), kPositive);
    double expected = -static_cast<double>(pos) - epidemic_action_cost(a, 10, model->config());
    if (env.episodes_completed() > before) expected += 2.0 * 10;
    CHECK(p.reward == doctest::Approx(expected));
    CHECK(p.reward >= codec.r_min());
    CHECK(p.reward <= codec.r_max());
  }
  CHECK(env.episodes_completed() > 0);
}

// -- graphs -----------------------------------------------------------------------------

TEST_CASE("betweenness ranking on small graphs") {
  auto star = ContactGraph::from_edges(5, {{0, 3}, {1, 3}, {2, 3}, {3, 4}});
  CHECK(star.betweenness_rank[0] == 3);
  CHECK(star.betweenness[3] == doctest::Approx(6.0));
  auto path = ContactGraph::from_edges(3, {{0, 1}, {1, 2}});
  CHECK(path.betweenness_rank[0] == 1);
  auto tri = ContactGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(tri.betweenness == std::vector<double>{0, 0, 0});
  CHECK(tri.betweenness_rank == std::vector<NodeId>{0, 1, 2});
  CHECK_THROWS(ContactGraph::from_edges(0, {}));
}

TEST_CASE("Brandes betweenness matches brute-force path counting") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = synth_graph(30, 4, seed);
    auto want = betweenness_oracle(g);
    for (std::size_t v = 0; v < g.n; ++v) CHECK(g.betweenness[v] == doctest::Approx(want[v]).epsilon(1e-12));
    std::vector<NodeId> rank = g.betweenness_rank;
    std::sort(rank.begin(), rank.end());
    for (NodeId v = 0; v < g.n; ++v) CHECK(rank[v] == v);
    for (std::size_t i = 1; i < g.n; ++i) {
      auto a = g.betweenness_rank[i - 1], b = g.betweenness_rank[i];
      CHECK((g.betweenness[a] > g.betweenness[b] || (g.betweenness[a] == g.betweenness[b] && a < b)));
    }
  }
  // disconnected graphs count only reachable pairs
  auto two = ContactGraph::from_edges(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  CHECK(two.betweenness == betweenness_oracle(two));
}

TEST_CASE("edge lists are parsed, deduplicated and normalized") {
  auto g = parse_edge_list("1 2\n2 3\n");
  CHECK(g.n == 3);
  CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});
  auto d = parse_edge_list("1 2\n2 1\n# comment\n% also\n3 3\n2 3\n");
  CHECK(d.edges == std::vector<Edge>{{0, 1}, {1, 2}});
  auto zero = parse_edge_list("0 1\n1 2\n");
  CHECK(zero.n == 3);
  CHECK(zero.edges == std::vector<Edge>{{0, 1}, {1, 2}});
  try {
    parse_edge_list("1 2\n2 x\n");
    FAIL("expected a parse error");
  } catch (const GraphParseError& e) {
    CHECK(e.line() == 2);
  }
  auto path = std::filesystem::temp_directory_path() / "hedgemix_edges.txt";
  std::ofstream(path) << "1 2\n2 3\n3 1\n";
  auto f = load_edge_list(path.string());
  CHECK(f.n == 3);
  CHECK(f.edges.size() == 3);
  std::filesystem::remove(path);
  CHECK_THROWS(load_edge_list("/nonexistent/edges.txt"));
}

TEST_CASE("synthetic graphs are connected, near-regular and deterministic") {
  auto cycle = synth_graph(4, 2, 9);
  CHECK(cycle.edges.size() == 4);
  for (const auto& adj : cycle.adjacency) CHECK(adj.size() == 2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto g = synth_graph(100, 6, seed);
    CHECK(connected_bfs(g));
    CHECK(g.connected());
    std::set<Edge> unique(g.edges.begin(), g.edges.end());
    CHECK(unique.size() == g.edges.size());
    for (auto [u, v] : g.edges) CHECK(u < v);
  }
  CHECK(synth_graph(100, 6, 5).edges == synth_graph(100, 6, 5).edges);
  CHECK(synth_graph(100, 6, 5).edges != synth_graph(100, 6, 6).edges);
  CHECK_THROWS(synth_graph(4, 4, 1));
  CHECK_THROWS(synth_graph(1, 0, 1));
}

// -- particle filter ----------------------------------------------------------------------

TEST_CASE("particle filter degenerate beliefs and the prior") {
  auto model = two_node_model();
  ParticleFilterConfig cfg;
  cfg.particles = 500;
  cfg.seed = 3;
  ParticleFilter pf(model, cfg);
  CHECK(pf.infection_rate() == 0.0);  // the prior seeds exposed nodes only
  std::vector<EpidemicState> all_i(10, EpidemicState{{Label::I, Label::I}, {0, 0}, {0, 0}});
  pf.set_particles(all_i);
  CHECK(pf.infection_rate() == 1.0);
}

TEST_CASE("particle filter tracks the exact two-node forward filter") {
  auto model = two_node_model();
  const auto& theta = model->config().params;
  // exact filter over the 16 joint labels, DoNothing every step
  auto idx = [](int a, int b) { return a * 4 + b; };
  std::array<double, 16> belief{};
  belief[idx(1, 0)] = 0.5;  // one node exposed, chosen uniformly
  belief[idx(0, 1)] = 0.5;
  std::vector<std::vector<std::uint16_t>> observations{{kPositive, kUnknown}, {kNegative, kPositive},
                                                       {kUnknown, kUnknown}};
  ParticleFilterConfig cfg;
  cfg.particles = 10000;
  cfg.seed = 11;
  ParticleFilter pf(model, cfg);
  for (const auto& obs : observations) {
    std::array<double, 16> next{};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double p = belief[idx(a, b)];
        if (p == 0.0) continue;
        auto ra = transition_row(static_cast<Label>(a), b == 2 ? 1 : 0, 1.0, theta);
        auto rb = transition_row(static_cast<Label>(b), a == 2 ? 1 : 0, 1.0, theta);
        for (int x = 0; x < 4; ++x)
          for (int y = 0; y < 4; ++y) next[idx(x, y)] += p * ra[x] * rb[y];
      }
    double z = 0.0;
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) {
        next[idx(x, y)] *= observation_row(static_cast<Label>(x), theta)[obs[0]] *
                           observation_row(static_cast<Label>(y), theta)[obs[1]];
        z += next[idx(x, y)];
      }
    for (double& p : next) p /= z;
    belief = next;
    pf.advance(0, obs, -1.0);
    double exact = 0.0;
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) exact += belief[idx(x, y)] * ((x == 2) + (y == 2)) / 2.0;
    CHECK(std::abs(pf.infection_rate() - exact) < 0.02);
  }
}
