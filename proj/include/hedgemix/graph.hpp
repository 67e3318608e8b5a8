#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hedgemix {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Undirected simple graph with its betweenness ranking computed at load.
struct ContactGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;  // u < v, sorted, unique
  std::vector<std::vector<NodeId>> adjacency;
  std::vector<double> betweenness;
  std::vector<NodeId> betweenness_rank;  // descending betweenness, ties by id

  // Deduplicates, drops self-loops and ranks nodes.
  static ContactGraph from_edges(std::size_t n, const std::vector<Edge>& edges);

  // Nodes whose rank position lies in [floor(lo*n), floor(hi*n)).
  std::vector<NodeId> rank_band(double lo, double hi) const;
  bool connected() const;
};

class GraphParseError : public std::runtime_error {
 public:
  GraphParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Exact betweenness (Brandes) on an unweighted undirected graph; each
// unordered pair is counted once.
std::vector<double> betweenness_centrality(const std::vector<std::vector<NodeId>>& adjacency);
std::vector<NodeId> betweenness_rank(const ContactGraph& graph);

// Whitespace-separated "u v" pairs, one per line; '#' and '%' start comments.
// Ids are 1-indexed unless a 0 appears anywhere in the file.
ContactGraph load_edge_list(const std::string& path);
ContactGraph parse_edge_list(const std::string& text, const std::string& source = "<text>");

// Connected, approximately degree-regular random graph: a ring plus random
// chords. Deterministic per seed.
ContactGraph synth_graph(std::size_t n, std::size_t degree, std::uint64_t seed);

}  // namespace hedgemix
