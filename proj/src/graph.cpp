#include "bppeps/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace bppeps {

Graph::Graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges)
    : n_(n), edges_(std::move(edges)), adj_(n) {
  for (auto& [u, v] : edges_) {
    if (u == v) throw std::invalid_argument("graph: self loop");
    if (u > v) std::swap(u, v);
    if (v >= n_) throw std::invalid_argument("graph: vertex id out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw std::invalid_argument("graph: duplicate edge");
  for (auto [u, v] : edges_) {
    adj_[u].push_back(v);
    adj_[v].push_back(u);
  }
  for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

std::size_t Graph::max_degree() const {
  std::size_t d = 0;
  for (const auto& nb : adj_) d = std::max(d, nb.size());
  return d;
}

std::size_t Graph::edge_id(std::size_t u, std::size_t v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(u, v));
  if (it == edges_.end() || *it != std::make_pair(u, v))
    throw std::invalid_argument("graph: no such edge");
  return static_cast<std::size_t>(it - edges_.begin());
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
  if (u == v || u >= n_ || v >= n_) return false;
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(u, v));
}

std::size_t Graph::directed(std::size_t src, std::size_t dst) const {
  std::size_t e = edge_id(src, dst);
  return 2 * e + (src < dst ? 0 : 1);
}

std::size_t Graph::dir_src(std::size_t d) const {
  const auto& [u, v] = edges_[d / 2];
  return (d & 1) == 0 ? u : v;
}

std::size_t Graph::dir_dst(std::size_t d) const {
  const auto& [u, v] = edges_[d / 2];
  return (d & 1) == 0 ? v : u;
}

std::size_t Graph::leg_of(std::size_t src, std::size_t dst) const {
  const auto& nb = adj_[src];
  auto it = std::lower_bound(nb.begin(), nb.end(), dst);
  if (it == nb.end() || *it != dst) throw std::invalid_argument("graph: not adjacent");
  return static_cast<std::size_t>(it - nb.begin());
}

std::vector<int> Graph::distances(const std::vector<std::size_t>& sources) const {
  std::vector<int> dist(n_, -1);
  std::deque<std::size_t> queue;
  for (std::size_t s : sources) {
    if (s >= n_) throw std::invalid_argument("graph: source out of range");
    if (dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t w : adj_[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

int Graph::distance(std::size_t u, std::size_t v) const { return distances({u})[v]; }

int Graph::diameter() const {
  int d = 0;
  for (std::size_t v = 0; v < n_; ++v) {
    auto dist = distances({v});
    for (int x : dist) {
      if (x < 0) return -1;
      d = std::max(d, x);
    }
  }
  return d;
}

bool Graph::connected() const {
  if (n_ == 0) return true;
  auto dist = distances({0});
  return std::none_of(dist.begin(), dist.end(), [](int x) { return x < 0; });
}

namespace {

Loop make_loop(const Graph& g, const std::set<std::size_t>& edge_set) {
  Loop l;
  std::set<std::size_t> verts;
  for (std::size_t e : edge_set) {
    l.edges.push_back(e);
    verts.insert(g.edges()[e].first);
    verts.insert(g.edges()[e].second);
  }
  l.vertices.assign(verts.begin(), verts.end());
  return l;
}

bool degree_ok(const Graph& g, const Loop& l, const std::set<std::size_t>& anchors) {
  std::map<std::size_t, std::size_t> deg;
  for (std::size_t e : l.edges) {
    ++deg[g.edges()[e].first];
    ++deg[g.edges()[e].second];
  }
  for (auto [v, d] : deg)
    if (d < 2 && anchors.count(v) == 0) return false;
  return true;
}

}  // namespace

std::vector<Loop> enumerate_loops(const Graph& g, std::size_t max_weight,
                                  const std::vector<std::size_t>& anchors) {
  const std::set<std::size_t> anchor_set(anchors.begin(), anchors.end());
  std::set<std::set<std::size_t>> seen;

  // grow connected edge sets from each root edge, never adding an edge with a
  // smaller id than the root; the seen-set removes the remaining duplicates
  std::vector<std::set<std::size_t>> stack;
  for (std::size_t root = 0; root < g.num_edges(); ++root) stack.push_back({root});
  while (!stack.empty()) {
    std::set<std::size_t> cur = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    if (cur.size() >= max_weight) continue;
    const std::size_t root = *cur.begin();
    std::set<std::size_t> frontier;  // edges adjacent to the current vertex set
    std::set<std::size_t> verts;
    for (std::size_t e : cur) {
      verts.insert(g.edges()[e].first);
      verts.insert(g.edges()[e].second);
    }
    for (std::size_t v : verts)
      for (std::size_t w : g.neighbors(v)) {
        std::size_t e = g.edge_id(v, w);
        if (e > root && cur.count(e) == 0) frontier.insert(e);
      }
    for (std::size_t e : frontier) {
      std::set<std::size_t> next = cur;
      next.insert(e);
      stack.push_back(std::move(next));
    }
  }

  std::vector<Loop> loops;
  for (const auto& edge_set : seen) {
    Loop l = make_loop(g, edge_set);
    if (degree_ok(g, l, anchor_set)) loops.push_back(std::move(l));
  }
  std::sort(loops.begin(), loops.end());
  return loops;
}

bool loop_touches(const Loop& l, const std::vector<std::size_t>& vertices) {
  for (std::size_t v : vertices)
    if (std::binary_search(l.vertices.begin(), l.vertices.end(), v)) return true;
  return false;
}

bool loops_overlap(const Loop& a, const Loop& b) {
  for (std::size_t v : a.vertices)
    if (std::binary_search(b.vertices.begin(), b.vertices.end(), v)) return true;
  return false;
}

Graph make_grid(std::size_t rows, std::size_t cols, bool periodic) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("grid: empty");
  std::set<std::pair<std::size_t, std::size_t>> es;
  auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  auto put = [&es](std::size_t a, std::size_t b) {
    if (a == b) return;  // wrap of a length-1 dimension
    if (a > b) std::swap(a, b);
    es.insert({a, b});
  };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) put(id(r, c), id(r, c + 1));
      if (r + 1 < rows) put(id(r, c), id(r + 1, c));
      if (periodic && c + 1 == cols) put(id(r, c), id(r, 0));
      if (periodic && r + 1 == rows) put(id(r, c), id(0, c));
    }
  return Graph(rows * cols, {es.begin(), es.end()});
}

Graph make_complete(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> es;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) es.push_back({u, v});
  return Graph(n, std::move(es));
}

Graph make_cycle(std::size_t n) {
  if (n < 3) throw std::invalid_argument("cycle: need n >= 3");
  std::vector<std::pair<std::size_t, std::size_t>> es;
  for (std::size_t v = 0; v < n; ++v) es.push_back({v, (v + 1) % n});
  return Graph(n, std::move(es));
}

Graph make_random_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n * d % 2 != 0) throw std::invalid_argument("random-regular: n*d must be even");
  if (d >= n) throw std::invalid_argument("random-regular: need d < n");
  CounterRng rng(seed, 0x7265677561726c72ULL);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::vector<std::size_t> stubs;
    stubs.reserve(n * d);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t k = 0; k < d; ++k) stubs.push_back(v);
    for (std::size_t i = stubs.size(); i > 1; --i) {
      std::size_t j = rng.next_u64() % i;
      std::swap(stubs[i - 1], stubs[j]);
    }
    std::set<std::pair<std::size_t, std::size_t>> es;
    bool ok = true;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      std::size_t a = stubs[i], b = stubs[i + 1];
      if (a == b) { ok = false; break; }
      if (a > b) std::swap(a, b);
      if (!es.insert({a, b}).second) { ok = false; break; }
    }
    if (ok) return Graph(n, {es.begin(), es.end()});
  }
  throw std::runtime_error("random-regular: pairing model did not produce a simple graph");
}

Graph make_family(const std::string& desc) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= desc.size()) {
    std::size_t next = desc.find(':', pos);
    if (next == std::string::npos) next = desc.size();
    parts.push_back(desc.substr(pos, next - pos));
    pos = next + 1;
  }
  auto to_num = [](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("graph family: bad number '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  const std::string& kind = parts[0];
  if (kind == "grid") {
    if (parts.size() < 2) throw std::invalid_argument("grid: missing RxC");
    std::size_t x = parts[1].find('x');
    if (x == std::string::npos) throw std::invalid_argument("grid: expected RxC");
    bool periodic = parts.size() > 2 && parts[2] == "periodic";
    if (parts.size() > 2 && !periodic) throw std::invalid_argument("grid: bad modifier");
    return make_grid(to_num(parts[1].substr(0, x)), to_num(parts[1].substr(x + 1)), periodic);
  }
  if (kind == "complete" && parts.size() == 2) return make_complete(to_num(parts[1]));
  if (kind == "cycle" && parts.size() == 2) return make_cycle(to_num(parts[1]));
  if (kind == "random-regular" && parts.size() == 4)
    return make_random_regular(to_num(parts[1]), to_num(parts[2]), to_num(parts[3]));
  throw std::invalid_argument("unknown graph family: " + desc);
}

}  // namespace bppeps
