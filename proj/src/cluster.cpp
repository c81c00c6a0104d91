#include "bppeps/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bppeps {

namespace {

double c0_constant(std::size_t max_degree) {
  return std::log(2.0 * std::exp(1.0) * static_cast<double>(max_degree)) + 0.5;
}

// rate c such that |Z_l| <= exp(-c |l|) holds for every enumerated loop
double achieved_rate(const std::vector<Loop>& loops, const std::vector<cplx>& activities) {
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const double a = std::abs(activities[i]);
    if (a < 1e-300) continue;
    c = std::min(c, -std::log(a) / static_cast<double>(loops[i].weight()));
  }
  return c;
}

bool cluster_touches(const Cluster& w, const std::vector<Loop>& loops,
                     const std::vector<std::size_t>& verts) {
  for (auto [idx, mult] : w.items)
    if (loop_touches(loops[idx], verts)) return true;
  return false;
}

}  // namespace

std::size_t Cluster::occurrences() const {
  std::size_t n = 0;
  for (auto [idx, mult] : items) n += mult;
  return n;
}

std::vector<Cluster> enumerate_clusters(const std::vector<Loop>& loops, std::size_t max_weight) {
  std::vector<Cluster> out;
  Cluster cur;
  // loops are sorted by weight, so the scan can stop once one does not fit
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!cur.items.empty()) {
      // connectivity of the occurrence interaction graph: identical copies
      // are always linked, so distinct-loop overlap connectivity suffices
      std::vector<bool> seen(cur.items.size(), false);
      std::vector<std::size_t> stack{0};
      seen[0] = true;
      while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < cur.items.size(); ++j)
          if (!seen[j] && loops_overlap(loops[cur.items[i].first], loops[cur.items[j].first])) {
            seen[j] = true;
            stack.push_back(j);
          }
      }
      if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) out.push_back(cur);
    }
    for (std::size_t i = start; i < loops.size(); ++i) {
      const std::size_t w = loops[i].weight();
      if (cur.weight + w > max_weight) break;
      cur.items.push_back({i, 0});
      for (std::size_t mult = 1; cur.weight + w <= max_weight; ++mult) {
        cur.items.back().second = mult;
        cur.weight += w;
        self(self, i + 1);
      }
      cur.weight -= cur.items.back().second * w;
      cur.items.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    return a.items < b.items;
  });
  return out;
}

Rational ursell(const Cluster& cluster, const std::vector<Loop>& loops) {
  const std::size_t n = cluster.occurrences();
  if (n > 12) throw std::invalid_argument("ursell: cluster has more than 12 occurrences");
  if (n == 0) throw std::invalid_argument("ursell: empty cluster");

  // expand the multiset into occurrences
  std::vector<std::size_t> occ;
  for (auto [idx, mult] : cluster.items)
    for (std::size_t k = 0; k < mult; ++k) occ.push_back(idx);

  // interaction graph: identical occurrences or overlapping loops
  std::vector<std::uint32_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (occ[i] == occ[j] || loops_overlap(loops[occ[i]], loops[occ[j]])) {
        adj[i] |= 1u << j;
        adj[j] |= 1u << i;
      }

  // signed connected spanning-subgraph count via the exponential formula:
  // a(S) = [S has no internal edges], a(S) = sum_{T ni v0} c(T) a(S \ T)
  const std::uint32_t full = (n == 32 ? ~0u : (1u << n) - 1);
  std::vector<long long> c(full + 1, 0);
  auto edge_free = [&](std::uint32_t s) -> bool {
    for (std::size_t i = 0; i < n; ++i)
      if ((s >> i & 1u) && (adj[i] & s)) return false;
    return true;
  };
  for (std::uint32_t s = 1; s <= full; ++s) {
    const std::uint32_t v0 = s & (~s + 1u);  // lowest bit
    long long acc = edge_free(s) ? 1 : 0;
    // subsets T of s with v0 in T, T != s
    const std::uint32_t rest = s ^ v0;
    for (std::uint32_t sub = rest; sub > 0; sub = (sub - 1) & rest) {
      const std::uint32_t t = (rest ^ sub) | v0;  // proper subset containing v0
      if (edge_free(sub)) acc -= c[t];
    }
    c[s] = acc;
  }

  long long fact = 1;
  for (auto [idx, mult] : cluster.items)
    for (std::size_t k = 2; k <= mult; ++k) fact *= static_cast<long long>(k);
  Rational r{c[full], fact};
  const long long g = std::gcd(std::llabs(r.num), r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

FreeEnergyReport free_energy(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                             std::size_t max_weight) {
  FreeEnergyReport rep;
  rep.log_z_bp = norm.log_z_bp;
  rep.loops = enumerate_loops(net.graph, max_weight);
  for (const Loop& l : rep.loops) rep.activities.push_back(loop_activity(net, msgs, norm, l));

  std::vector<Cluster> clusters = enumerate_clusters(rep.loops, max_weight);
  rep.f_by_order.assign(max_weight, rep.log_z_bp);
  for (const Cluster& w : clusters) {
    ExpansionTerm term;
    term.cluster = w;
    term.phi = ursell(w, rep.loops);
    term.z_w = cplx{1.0, 0.0};
    for (auto [idx, mult] : w.items)
      for (std::size_t k = 0; k < mult; ++k) term.z_w *= rep.activities[idx];
    for (std::size_t m = w.weight; m <= max_weight; ++m)
      rep.f_by_order[m - 1] += term.phi.value() * term.z_w.real();
    rep.terms.push_back(std::move(term));
  }

  rep.c_rate = achieved_rate(rep.loops, rep.activities);
  const double c0 = c0_constant(std::max<std::size_t>(net.graph.max_degree(), 2));
  rep.c_certified = rep.c_rate > c0;
  rep.tail = rep.c_certified
                 ? tail_bound(static_cast<double>(net.graph.num_vertices()), max_weight,
                              rep.c_rate, c0)
                 : 0.0;
  return rep;
}

double tail_bound(double region_size, std::size_t max_weight, double c_rate, double c0) {
  if (!(c_rate > c0)) return std::numeric_limits<double>::infinity();
  return region_size * std::exp(-(c_rate - c0) * static_cast<double>(max_weight + 1));
}

namespace {

struct DressedData {
  std::vector<Loop> loops;
  std::vector<cplx> base;  // undressed activities
  double c_rate = 0.0;
  bool c_certified = false;
  double c0 = 0.0;
};

DressedData prepare(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                    const std::vector<std::size_t>& anchors, std::size_t max_weight) {
  DressedData d;
  d.loops = enumerate_loops(net.graph, max_weight, anchors);
  for (const Loop& l : d.loops) d.base.push_back(loop_activity(net, msgs, norm, l));
  d.c_rate = achieved_rate(d.loops, d.base);
  d.c0 = c0_constant(std::max<std::size_t>(net.graph.max_degree(), 2));
  d.c_certified = d.c_rate > d.c0;
  return d;
}

cplx bp_observable(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                   const Insertions& region) {
  cplx v{1.0, 0.0};
  for (const auto& [w, o] : region)
    v *= vertex_closure_value(net, msgs, w, &o) / norm.vertex_closure[w];
  return v;
}

Insertions restrict_region(const Insertions& region, const Loop& l) {
  Insertions out;
  for (const auto& [w, o] : region)
    if (std::binary_search(l.vertices.begin(), l.vertices.end(), w)) out.emplace(w, o);
  return out;
}

std::vector<std::size_t> region_vertices(const Insertions& region) {
  std::vector<std::size_t> v;
  for (const auto& [w, o] : region) v.push_back(w);
  return v;
}

}  // namespace

ObservableReport expectation_multiplicative(const PepsNetwork& net, const MessageSet& msgs,
                                            const BpNorm& norm, const Insertions& region,
                                            std::size_t max_weight) {
  const std::vector<std::size_t> a_verts = region_vertices(region);
  DressedData d = prepare(net, msgs, norm, a_verts, max_weight);

  // dressed activities with the dressed-vertex normalization
  std::vector<cplx> dressed(d.loops.size());
  for (std::size_t i = 0; i < d.loops.size(); ++i) {
    if (!loop_touches(d.loops[i], a_verts)) {
      dressed[i] = d.base[i];
      continue;
    }
    Insertions ins = restrict_region(region, d.loops[i]);
    dressed[i] = loop_activity(net, msgs, norm, d.loops[i], &ins, /*dressed_norm=*/true);
  }

  ObservableReport rep;
  rep.bp_value = bp_observable(net, msgs, norm, region);
  rep.c_rate = d.c_rate;
  rep.c_certified = d.c_certified;
  rep.tail = tail_bound(static_cast<double>(region.size()), max_weight, d.c_rate, d.c0);

  cplx exponent{0.0, 0.0};
  for (const Cluster& w : enumerate_clusters(d.loops, max_weight)) {
    if (!cluster_touches(w, d.loops, a_verts)) continue;
    cplx zw{1.0, 0.0}, zwa{1.0, 0.0};
    for (auto [idx, mult] : w.items)
      for (std::size_t k = 0; k < mult; ++k) {
        zw *= d.base[idx];
        zwa *= dressed[idx];
      }
    exponent += ursell(w, d.loops).value() * (zwa - zw);
    ++rep.clusters_used;
  }
  rep.corrected = rep.bp_value * std::exp(exponent);
  return rep;
}

ObservableReport expectation_additive(const PepsNetwork& net, const MessageSet& msgs,
                                      const BpNorm& norm, const Insertions& region,
                                      std::size_t max_weight) {
  const std::vector<std::size_t> a_verts = region_vertices(region);
  DressedData d = prepare(net, msgs, norm, a_verts, max_weight);

  // dressed activities in the base normalization
  std::vector<cplx> dressed(d.loops.size());
  std::vector<bool> touches(d.loops.size());
  for (std::size_t i = 0; i < d.loops.size(); ++i) {
    touches[i] = loop_touches(d.loops[i], a_verts);
    if (!touches[i]) {
      dressed[i] = d.base[i];
      continue;
    }
    Insertions ins = restrict_region(region, d.loops[i]);
    dressed[i] = loop_activity(net, msgs, norm, d.loops[i], &ins, /*dressed_norm=*/false);
  }

  ObservableReport rep;
  rep.bp_value = bp_observable(net, msgs, norm, region);
  rep.c_rate = d.c_rate;
  rep.c_certified = d.c_certified;
  rep.tail = tail_bound(static_cast<double>(region.size()), max_weight, d.c_rate, d.c0);

  cplx corr{0.0, 0.0};
  for (const Cluster& w : enumerate_clusters(d.loops, max_weight)) {
    if (!cluster_touches(w, d.loops, a_verts)) continue;
    ++rep.clusters_used;
    const double phi = ursell(w, d.loops).value();
    cplx zw{1.0, 0.0};
    for (auto [idx, mult] : w.items)
      for (std::size_t k = 0; k < mult; ++k) zw *= d.base[idx];
    // sum_l alpha_l (Z^A_l Z_l^(alpha-1) prod_rest - <O>_BP Z_W), written
    // without dividing so vanishing activities stay well defined
    for (std::size_t i = 0; i < w.items.size(); ++i) {
      auto [idx, mult] = w.items[i];
      if (!touches[idx]) continue;
      cplx rest{1.0, 0.0};
      for (std::size_t j = 0; j < w.items.size(); ++j) {
        auto [jdx, jmult] = w.items[j];
        const std::size_t power = (j == i) ? jmult - 1 : jmult;
        for (std::size_t k = 0; k < power; ++k) rest *= d.base[jdx];
      }
      corr += phi * static_cast<double>(mult) * (dressed[idx] * rest - rep.bp_value * zw);
    }
  }
  rep.corrected = rep.bp_value + corr;
  return rep;
}

CorrelatorReport connected_correlator(const PepsNetwork& net, const MessageSet& msgs,
                                      const BpNorm& norm, const Insertions& region_a,
                                      const Insertions& region_b, std::size_t max_weight) {
  for (const auto& [w, o] : region_a)
    if (region_b.count(w)) throw std::invalid_argument("correlator: regions overlap");
  std::vector<std::size_t> anchors = region_vertices(region_a);
  const std::vector<std::size_t> a_verts = anchors;
  const std::vector<std::size_t> b_verts = region_vertices(region_b);
  anchors.insert(anchors.end(), b_verts.begin(), b_verts.end());
  DressedData d = prepare(net, msgs, norm, anchors, max_weight);

  // per-loop derivative data
  const std::size_t nl = d.loops.size();
  std::vector<cplx> da(nl), db(nl), dab(nl);
  for (std::size_t i = 0; i < nl; ++i) {
    const Loop& l = d.loops[i];
    Insertions ins_a = restrict_region(region_a, l);
    Insertions ins_b = restrict_region(region_b, l);
    cplx za{0.0, 0.0}, zb{0.0, 0.0}, zab{0.0, 0.0};
    cplx sa{0.0, 0.0}, sb{0.0, 0.0};
    for (const auto& [w, o] : ins_a) {
      Insertions one{{w, o}};
      za += loop_activity(net, msgs, norm, l, &one);
      sa += vertex_closure_value(net, msgs, w, &o) / norm.vertex_closure[w];
    }
    for (const auto& [w, o] : ins_b) {
      Insertions one{{w, o}};
      zb += loop_activity(net, msgs, norm, l, &one);
      sb += vertex_closure_value(net, msgs, w, &o) / norm.vertex_closure[w];
    }
    for (const auto& [wa, oa] : ins_a)
      for (const auto& [wb, ob] : ins_b) {
        Insertions two{{wa, oa}, {wb, ob}};
        zab += loop_activity(net, msgs, norm, l, &two);
      }
    da[i] = za - d.base[i] * sa;
    db[i] = zb - d.base[i] * sb;
    dab[i] = zab - za * sb - zb * sa + d.base[i] * sa * sb;
  }

  CorrelatorReport rep;
  rep.c_rate = d.c_rate;
  rep.c_certified = d.c_certified;
  {
    auto dist = net.graph.distances(a_verts);
    int dmin = -1;
    for (std::size_t v : b_verts)
      if (dist[v] >= 0 && (dmin < 0 || dist[v] < dmin)) dmin = dist[v];
    rep.distance = dmin;
  }
  if (d.c_certified) {
    rep.xi_inv = d.c_rate - d.c0;
    rep.envelope = static_cast<double>(region_a.size() * region_b.size()) *
                   std::exp(-rep.xi_inv * std::max(rep.distance, 0));
  }

  auto prod_pow = [&](const Cluster& w, std::size_t skip_i, std::size_t drop_i,
                      std::size_t skip_j, std::size_t drop_j) -> cplx {
    cplx p{1.0, 0.0};
    for (std::size_t k = 0; k < w.items.size(); ++k) {
      auto [idx, mult] = w.items[k];
      std::size_t power = mult;
      if (k == skip_i) power -= drop_i;
      if (k == skip_j) power -= drop_j;
      for (std::size_t t = 0; t < power; ++t) p *= d.base[idx];
    }
    return p;
  };

  cplx value{0.0, 0.0};
  const std::size_t none = static_cast<std::size_t>(-1);
  for (const Cluster& w : enumerate_clusters(d.loops, max_weight)) {
    if (!cluster_touches(w, d.loops, a_verts) || !cluster_touches(w, d.loops, b_verts)) continue;
    ++rep.clusters_used;
    const double phi = ursell(w, d.loops).value();
    cplx term{0.0, 0.0};
    for (std::size_t i = 0; i < w.items.size(); ++i) {
      const auto [idx, mult] = w.items[i];
      const double alpha = static_cast<double>(mult);
      term += alpha * dab[idx] * prod_pow(w, i, 1, none, 0);
      if (mult >= 2) term += alpha * (alpha - 1.0) * da[idx] * db[idx] * prod_pow(w, i, 2, none, 0);
      for (std::size_t j = 0; j < w.items.size(); ++j) {
        if (j == i) continue;
        const auto [jdx, jmult] = w.items[j];
        term += alpha * static_cast<double>(jmult) * da[idx] * db[jdx] * prod_pow(w, i, 1, j, 1);
      }
    }
    value += phi * term;
  }
  rep.value = value;
  return rep;
}

}  // namespace bppeps
