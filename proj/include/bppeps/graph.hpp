#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bppeps/rng.hpp"

namespace bppeps {

// Undirected simple graph with a fixed, canonical edge numbering. Edges are
// stored as (u, v) with u < v, sorted lexicographically; the edge id is the
// position in that order. Directed edge d = 2*e + s, where s = 0 points
// low->high and s = 1 high->low, so reversal is d ^ 1.
class Graph {
 public:
  Graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges);

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

  // neighbors in ascending vertex id; the k-th entry matches virtual leg k+1
  // of a site tensor
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adj_[v]; }
  std::size_t degree(std::size_t v) const { return adj_[v].size(); }
  std::size_t max_degree() const;

  // edge id for {u, v}; throws if absent
  std::size_t edge_id(std::size_t u, std::size_t v) const;
  bool has_edge(std::size_t u, std::size_t v) const;

  std::size_t directed(std::size_t src, std::size_t dst) const;
  static std::size_t reverse(std::size_t d) { return d ^ 1; }
  std::size_t dir_src(std::size_t d) const;
  std::size_t dir_dst(std::size_t d) const;

  // leg slot (0-based among neighbors) of dst in src's sorted neighbor list
  std::size_t leg_of(std::size_t src, std::size_t dst) const;

  // BFS distances from a set of sources; -1 where unreachable
  std::vector<int> distances(const std::vector<std::size_t>& sources) const;
  int distance(std::size_t u, std::size_t v) const;
  int diameter() const;  // over the largest component pairs; -1 if disconnected
  bool connected() const;

 private:
  std::size_t n_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

// Connected edge-induced subgraph used as a generalized loop. Canonical form:
// sorted edge ids. Vertices are the endpoints, sorted.
struct Loop {
  std::vector<std::size_t> edges;
  std::vector<std::size_t> vertices;
  std::size_t weight() const { return edges.size(); }
  bool operator==(const Loop& o) const { return edges == o.edges; }
  bool operator<(const Loop& o) const {
    if (edges.size() != o.edges.size()) return edges.size() < o.edges.size();
    return edges < o.edges;
  }
};

// All connected subgraphs with at most max_weight edges whose internal degree
// is >= 2 everywhere except at vertices in `anchors`, where >= 1 suffices.
// An empty anchor set gives the plain loop family. Output is sorted by
// (weight, lexicographic edge ids) and duplicate free.
std::vector<Loop> enumerate_loops(const Graph& g, std::size_t max_weight,
                                  const std::vector<std::size_t>& anchors = {});

bool loop_touches(const Loop& l, const std::vector<std::size_t>& vertices);
bool loops_overlap(const Loop& a, const Loop& b);  // share a vertex or an edge

// graph families
Graph make_grid(std::size_t rows, std::size_t cols, bool periodic);
Graph make_complete(std::size_t n);
Graph make_cycle(std::size_t n);
Graph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed);

// "grid:RxC", "grid:RxC:periodic", "complete:n", "cycle:n",
// "random-regular:n:d:seed"
Graph make_family(const std::string& desc);

}  // namespace bppeps
