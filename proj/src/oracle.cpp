#include "bppeps/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace bppeps {

namespace {

// double layer of vertex v: for each incident edge (ascending neighbor order)
// a doubled index y = k * D + b; entry = sum_p T[p, k...] conj(T[p, b...]),
// with an optional operator between the layers. Stored row-major over the
// doubled legs in ascending neighbor order.
std::vector<cplx> double_layer(const PepsNetwork& net, std::size_t v, const Matrix* o) {
  const std::size_t D = net.bond_dim;
  const std::size_t deg = net.graph.degree(v);
  const std::size_t d = net.phys_dim;
  std::size_t nv = 1;
  for (std::size_t k = 0; k < deg; ++k) nv *= D;
  const Tensor& t = net.site[v];

  std::vector<cplx> out(nv * nv);
  // flat layout of t: p * nv + (virtual multi-index), row-major
  for (std::size_t ket = 0; ket < nv; ++ket) {
    for (std::size_t bra = 0; bra < nv; ++bra) {
      cplx acc{0.0, 0.0};
      if (o == nullptr) {
        for (std::size_t p = 0; p < d; ++p)
          acc += t[p * nv + ket] * std::conj(t[p * nv + bra]);
      } else {
        for (std::size_t p = 0; p < d; ++p)
          for (std::size_t pp = 0; pp < d; ++pp)
            acc += std::conj(t[p * nv + bra]) * (*o)(p, pp) * t[pp * nv + ket];
      }
      // doubled multi-index: leg j contributes (k_j * D + b_j)
      std::size_t y = 0, kk = ket, bb = bra;
      std::size_t kdigits[32], bdigits[32];
      for (std::size_t j = deg; j-- > 0;) {
        kdigits[j] = kk % D;
        kk /= D;
        bdigits[j] = bb % D;
        bb /= D;
      }
      for (std::size_t j = 0; j < deg; ++j) y = y * (D * D) + (kdigits[j] * D + bdigits[j]);
      out[y] = acc;
    }
  }
  return out;
}

const Matrix* find_ins(const OracleInsertions* ins, std::size_t v) {
  if (ins == nullptr) return nullptr;
  auto it = ins->find(v);
  return it == ins->end() ? nullptr : &it->second;
}

}  // namespace

cplx oracle_enumerate(const PepsNetwork& net, const OracleInsertions* ins) {
  const Graph& g = net.graph;
  const std::size_t D2 = net.bond_dim * net.bond_dim;
  const std::size_t ne = g.num_edges();
  const std::size_t nv = g.num_vertices();

  double budget = static_cast<double>(nv);
  for (std::size_t e = 0; e < ne; ++e) budget *= static_cast<double>(D2);
  if (budget > 2e9) throw std::length_error("oracle: enumeration budget exceeded");

  std::vector<std::vector<cplx>> layers(nv);
  for (std::size_t v = 0; v < nv; ++v) layers[v] = double_layer(net, v, find_ins(ins, v));

  // per vertex: flat index = sum over incident edges (ascending neighbor
  // order) of y_e * stride
  std::vector<std::vector<std::size_t>> v_edges(nv);
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t m : g.neighbors(v)) v_edges[v].push_back(g.edge_id(v, m));

  std::vector<std::size_t> y(ne, 0);
  cplx total{0.0, 0.0};
  MulCounter::add(static_cast<std::uint64_t>(budget));
  while (true) {
    cplx term{1.0, 0.0};
    for (std::size_t v = 0; v < nv; ++v) {
      std::size_t idx = 0;
      for (std::size_t e : v_edges[v]) idx = idx * D2 + y[e];
      term *= layers[v][idx];
      if (term == cplx{0.0, 0.0}) break;
    }
    total += term;
    std::size_t e = ne;
    while (e-- > 0) {
      if (++y[e] < D2) break;
      y[e] = 0;
      if (e == 0) return total;
    }
  }
}

cplx oracle_sequential(const PepsNetwork& net, const OracleInsertions* ins) {
  const Graph& g = net.graph;
  const std::size_t D2 = net.bond_dim * net.bond_dim;
  const std::size_t nv = g.num_vertices();

  // boundary tensor over the open doubled edges, edge ids ascending
  std::vector<cplx> bnd{cplx{1.0, 0.0}};
  std::vector<std::size_t> open;  // edge ids, index 0 is the slowest dimension

  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<cplx> layer = double_layer(net, v, find_ins(ins, v));
    std::vector<std::size_t> v_edges;
    for (std::size_t m : g.neighbors(v)) v_edges.push_back(g.edge_id(v, m));
    const std::size_t deg = v_edges.size();

    // split incident edges into shared (already open) and fresh
    std::vector<std::size_t> shared_pos;  // position in `open`, aligned to v_edges order
    std::vector<bool> is_shared(deg, false);
    for (std::size_t j = 0; j < deg; ++j) {
      for (std::size_t p = 0; p < open.size(); ++p)
        if (open[p] == v_edges[j]) {
          shared_pos.push_back(p);
          is_shared[j] = true;
        }
    }
    std::vector<std::size_t> keep_pos;  // surviving positions of `open`
    for (std::size_t p = 0; p < open.size(); ++p) {
      bool drop = false;
      for (std::size_t sp : shared_pos)
        if (sp == p) drop = true;
      if (!drop) keep_pos.push_back(p);
    }
    std::size_t keep_size = 1, fresh_size = 1, shared_size = 1;
    for (std::size_t p = 0; p < keep_pos.size(); ++p) keep_size *= D2;
    std::size_t fresh_count = 0;
    for (std::size_t j = 0; j < deg; ++j)
      if (!is_shared[j]) ++fresh_count;
    for (std::size_t j = 0; j < fresh_count; ++j) fresh_size *= D2;
    for (std::size_t j = 0; j < shared_pos.size(); ++j) shared_size *= D2;

    // new boundary legs: kept open edges then fresh edges of v, both in their
    // existing orders; sort afterwards is avoided by tracking ids explicitly
    std::vector<cplx> next(keep_size * fresh_size, cplx{0.0, 0.0});
    const std::size_t old_rank = open.size();
    std::vector<std::size_t> digits(old_rank, 0);
    MulCounter::add(static_cast<std::uint64_t>(bnd.size()) * fresh_size);
    for (std::size_t flat = 0; flat < bnd.size(); ++flat) {
      const cplx bv = bnd[flat];
      if (bv != cplx{0.0, 0.0}) {
        // decode digits of the old boundary index
        std::size_t rem = flat;
        for (std::size_t p = old_rank; p-- > 0;) {
          digits[p] = rem % D2;
          rem /= D2;
        }
        std::size_t keep_idx = 0;
        for (std::size_t p : keep_pos) keep_idx = keep_idx * D2 + digits[p];
        // iterate fresh digits; for each, build v's layer index and scatter
        std::vector<std::size_t> fresh(fresh_count, 0);
        while (true) {
          std::size_t lidx = 0, fj = 0, sj = 0;
          for (std::size_t j = 0; j < deg; ++j) {
            const std::size_t dig = is_shared[j] ? digits[shared_pos[sj++]] : fresh[fj++];
            lidx = lidx * D2 + dig;
          }
          std::size_t fidx = 0;
          for (std::size_t j = 0; j < fresh_count; ++j) fidx = fidx * D2 + fresh[j];
          next[keep_idx * fresh_size + fidx] += bv * layer[lidx];
          std::size_t j = fresh_count;
          bool done = (fresh_count == 0);
          while (j-- > 0) {
            if (++fresh[j] < D2) break;
            fresh[j] = 0;
            if (j == 0) done = true;
          }
          if (done) break;
        }
      }
    }
    std::vector<std::size_t> next_open;
    for (std::size_t p : keep_pos) next_open.push_back(open[p]);
    for (std::size_t j = 0; j < deg; ++j)
      if (!is_shared[j]) next_open.push_back(v_edges[j]);
    open = std::move(next_open);
    bnd = std::move(next);
    (void)shared_size;
  }
  if (!open.empty() || bnd.size() != 1)
    throw std::logic_error("oracle_sequential: dangling boundary");
  return bnd[0];
}

cplx exact_contraction(const PepsNetwork& net, const OracleInsertions* ins) {
  const cplx a = oracle_enumerate(net, ins);
  const cplx b = oracle_sequential(net, ins);
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  if (std::abs(a - b) > 1e-10 * scale)
    throw std::runtime_error("oracle: enumeration and sequential contraction disagree");
  return b;
}

double exact_log_norm(const PepsNetwork& net) {
  const cplx z = exact_contraction(net);
  if (!(z.real() > 0.0) || std::abs(z.imag()) > 1e-9 * std::abs(z))
    throw std::runtime_error("oracle: norm is not positive");
  return std::log(z.real());
}

cplx exact_expectation(const PepsNetwork& net, const OracleInsertions& region) {
  const cplx z = exact_contraction(net);
  const cplx zo = exact_contraction(net, &region);
  return zo / z;
}

cplx exact_connected_correlator(const PepsNetwork& net, const OracleInsertions& region_a,
                                const OracleInsertions& region_b) {
  OracleInsertions both = region_a;
  for (const auto& [v, o] : region_b) {
    if (!both.emplace(v, o).second)
      throw std::invalid_argument("oracle correlator: regions overlap");
  }
  const cplx z = exact_contraction(net);
  const cplx zab = exact_contraction(net, &both);
  const cplx za = exact_contraction(net, &region_a);
  const cplx zb = exact_contraction(net, &region_b);
  return zab / z - (za / z) * (zb / z);
}

}  // namespace bppeps
