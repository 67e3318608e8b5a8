#include "hedgemix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "hedgemix/random.hpp"

namespace hedgemix {

ContactGraph ContactGraph::from_edges(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) throw std::invalid_argument("contact graph has no nodes");
  ContactGraph g;
  g.n = n;
  std::set<Edge> unique;
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw std::out_of_range("edge endpoint outside node range");
    if (u == v) continue;
    unique.insert({std::min(u, v), std::max(u, v)});
  }
  g.edges.assign(unique.begin(), unique.end());
  g.adjacency.assign(n, {});
  for (auto [u, v] : g.edges) {
    g.adjacency[u].push_back(v);
    g.adjacency[v].push_back(u);
  }
  g.betweenness = betweenness_centrality(g.adjacency);
  g.betweenness_rank = hedgemix::betweenness_rank(g);
  return g;
}

std::vector<NodeId> ContactGraph::rank_band(double lo, double hi) const {
  auto a = static_cast<std::size_t>(std::floor(std::clamp(lo, 0.0, 1.0) * n + 1e-9));
  auto b = static_cast<std::size_t>(std::floor(std::clamp(hi, 0.0, 1.0) * n + 1e-9));
  if (b <= a) return {};
  return {betweenness_rank.begin() + a, betweenness_rank.begin() + b};
}

bool ContactGraph::connected() const {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

std::vector<double> betweenness_centrality(const std::vector<std::vector<NodeId>>& adjacency) {
  const std::size_t n = adjacency.size();
  if (n == 0) throw std::invalid_argument("betweenness of an empty graph");
  std::vector<double> bc(n, 0.0);
  std::vector<std::vector<NodeId>> pred(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<long> dist(n);
  std::vector<NodeId> order;
  order.reserve(n);
  for (NodeId s = 0; s < n; ++s) {
    for (auto& p : pred) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<NodeId> q;
    q.push(s);
    while (!q.empty()) {
      NodeId v = q.front();
      q.pop();
      order.push_back(v);
      for (NodeId w : adjacency[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      NodeId w = *it;
      for (NodeId v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }
  for (auto& x : bc) x /= 2.0;
  return bc;
}

std::vector<NodeId> betweenness_rank(const ContactGraph& graph) {
  if (graph.n == 0) throw std::invalid_argument("betweenness rank of an empty graph");
  std::vector<NodeId> order(graph.n);
  for (NodeId i = 0; i < graph.n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return graph.betweenness[a] > graph.betweenness[b];
  });
  return order;
}

ContactGraph parse_edge_list(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<long long, long long>> raw;
  long long min_id = -1, max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    auto cut = line.find_first_of("#%");
    if (cut != std::string::npos) line.resize(cut);
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw GraphParseError(source, lineno, "expected two node ids");
    long long u, v;
    try {
      std::size_t pa = 0, pb = 0;
      u = std::stoll(a, &pa);
      v = std::stoll(b, &pb);
      if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw GraphParseError(source, lineno, "node ids must be integers");
    }
    if (u < 0 || v < 0) throw GraphParseError(source, lineno, "node ids must be non-negative");
    if (ls >> extra) {
      // a third column (weight or timestamp) is tolerated only if numeric
      try {
        (void)std::stod(extra);
      } catch (const std::exception&) {
        throw GraphParseError(source, lineno, "unexpected token '" + extra + "'");
      }
    }
    raw.emplace_back(u, v);
    min_id = min_id < 0 ? std::min(u, v) : std::min({min_id, u, v});
    max_id = std::max({max_id, u, v});
  }
  if (raw.empty()) throw GraphParseError(source, lineno, "no edges found");
  long long offset = min_id == 0 ? 0 : 1;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (auto [u, v] : raw) edges.emplace_back(static_cast<NodeId>(u - offset), static_cast<NodeId>(v - offset));
  return ContactGraph::from_edges(static_cast<std::size_t>(max_id - offset + 1), edges);
}

ContactGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str(), path);
}

ContactGraph synth_graph(std::size_t n, std::size_t degree, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synth_graph needs at least 2 nodes");
  if (degree == 0 || degree >= n || (degree == 1 && n > 2))
    throw std::invalid_argument("synth_graph: degree " + std::to_string(degree) + " infeasible for " +
                                std::to_string(n) + " connected nodes");
  Rng rng(hash_combine(seed, 0x5eed));
  std::set<Edge> edges;
  std::vector<std::size_t> deg(n, 0);
  auto add = [&](NodeId u, NodeId v) {
    if (u == v) return false;
    Edge e{std::min(u, v), std::max(u, v)};
    if (!edges.insert(e).second) return false;
    ++deg[u];
    ++deg[v];
    return true;
  };
  // a ring through a random permutation keeps the graph connected
  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i + 1 < n; ++i) add(perm[i], perm[i + 1]);
  if (n > 2) add(perm[n - 1], perm[0]);

  std::size_t failures = 0;
  while (failures < 50 * n) {
    std::vector<NodeId> open;
    for (NodeId i = 0; i < n; ++i)
      if (deg[i] < degree) open.push_back(i);
    if (open.size() < 2) break;
    std::uniform_int_distribution<std::size_t> pick_open(0, open.size() - 1);
    NodeId u = open[pick_open(rng)];
    NodeId v = open[pick_open(rng)];
    if (!add(u, v)) ++failures;
  }
  return ContactGraph::from_edges(n, {edges.begin(), edges.end()});
}

}  // namespace hedgemix
