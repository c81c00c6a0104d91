#include "bppeps/loops.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bppeps {

namespace {

Tensor matrix_as_tensor(const Matrix& m) {
  Tensor t(std::vector<std::size_t>{m.rows(), m.cols()});
  t.data() = m.data();
  return t;
}

// Double layer of vertex w with messages closing every leg not in f_edges and
// an optional single-site operator between bra and ket. Output legs: ket legs
// of the f-edges in ascending neighbor order, then the matching bra legs.
Tensor decorated_vertex(const PepsNetwork& net, const MessageSet& msgs, std::size_t w,
                        const std::set<std::size_t>& f_edges, const Matrix* o) {
  const Graph& g = net.graph;
  Tensor a = net.site[w];
  if (o != nullptr) {
    if (o->rows() != net.phys_dim || o->cols() != net.phys_dim)
      throw std::invalid_argument("loop_activity: operator dimension mismatch");
    a = contract(matrix_as_tensor(*o), a, {{1, 0}});
  }
  const auto& nbrs = g.neighbors(w);
  std::vector<std::size_t> legpos(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) legpos[k] = k + 1;
  std::vector<std::size_t> closed;  // neighbor slots closed by messages, in order
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const std::size_t e = g.edge_id(w, nbrs[k]);
    if (f_edges.count(e)) continue;
    const std::size_t pos = legpos[k];
    // ket index pairs with the message row; the column leg meets the bra later
    a = contract(a, matrix_as_tensor(msgs[g.directed(nbrs[k], w)]), {{pos, 0}});
    for (std::size_t j = 0; j < legpos.size(); ++j)
      if (legpos[j] > pos) --legpos[j];
    closed.push_back(k);
  }
  std::vector<std::size_t> appended(closed.size());
  for (std::size_t j = 0; j < closed.size(); ++j) appended[j] = a.rank() - closed.size() + j;

  Tensor bra = net.site[w].conj();
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 0}};
  for (std::size_t j = 0; j < closed.size(); ++j) pairs.push_back({appended[j], closed[j] + 1});
  return contract(a, bra, pairs);
}

}  // namespace

cplx vertex_closure_value(const PepsNetwork& net, const MessageSet& msgs, std::size_t v,
                          const Matrix* o) {
  Tensor t = decorated_vertex(net, msgs, v, {}, o);
  if (t.rank() != 0) throw std::logic_error("vertex_closure: expected scalar");
  return t[0];
}

BpNorm bp_normalization(const PepsNetwork& net, const MessageSet& msgs) {
  const Graph& g = net.graph;
  BpNorm norm;
  norm.edge_overlap.resize(g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edges()[e];
    // bond pairing in the (ket, bra) layout: sum_{k,b} mu1[k,b] mu2[k,b]
    const cplx i_e =
        multiply(msgs[g.directed(u, v)], msgs[g.directed(v, u)].transpose()).trace();
    if (!(i_e.real() > 0.0) || std::abs(i_e.imag()) > 1e-9 * std::max(1.0, std::abs(i_e)))
      throw std::runtime_error("bp_normalization: edge overlap not positive");
    norm.edge_overlap[e] = i_e.real();
  }
  norm.vertex_closure.resize(g.num_vertices());
  norm.vertex_value.resize(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const cplx nv = vertex_closure_value(net, msgs, v);
    if (!(nv.real() > 0.0) || std::abs(nv.imag()) > 1e-9 * std::max(1.0, std::abs(nv)))
      throw std::runtime_error("bp_normalization: vertex closure not positive");
    norm.vertex_closure[v] = nv.real();
    double z = nv.real();
    for (std::size_t m : g.neighbors(v)) z /= std::sqrt(norm.edge_overlap[g.edge_id(v, m)]);
    norm.vertex_value[v] = z;
    norm.log_z_bp += std::log(z);
  }
  return norm;
}

Matrix excitation_projector_apply(const Matrix& x, const Matrix& xp, const Matrix& y) {
  const cplx denom = multiply(x, xp).trace();
  if (std::abs(denom) < 1e-300) throw std::invalid_argument("projector: tr(X X') is zero");
  const cplx coef = multiply(x, y).trace() / denom;
  Matrix out = xp;
  out.scale(coef);
  return subtract(y, out);
}

cplx loop_activity(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                   const Loop& loop, const Insertions* insertions, bool dressed_norm) {
  const Graph& g = net.graph;
  const std::set<std::size_t> f_edges(loop.edges.begin(), loop.edges.end());

  // open leg labels on the accumulator: (edge id, side), side 0 = ket of the
  // already absorbed endpoint, 1 = bra; 2/3 = pending ket/bra of the endpoint
  // being absorbed after the edge operator is applied
  struct Label {
    std::size_t edge;
    int side;
  };
  Tensor acc = Tensor::scalar(1.0);
  std::vector<Label> open;
  std::set<std::size_t> absorbed;

  for (std::size_t w : loop.vertices) {
    const Matrix* o = nullptr;
    if (insertions != nullptr) {
      auto it = insertions->find(w);
      if (it != insertions->end()) o = &it->second;
    }
    Tensor dw = decorated_vertex(net, msgs, w, f_edges, o);
    // scale by the closure normalization of this vertex
    cplx nw{norm.vertex_closure[w], 0.0};
    if (dressed_norm && o != nullptr) {
      nw = vertex_closure_value(net, msgs, w, o);
      if (std::abs(nw) < 1e-300)
        throw std::runtime_error("loop_activity: dressed closure is zero");
    }
    dw.scale(1.0 / nw);

    // loop edges at w in ascending neighbor order; dw legs are their ket
    // indices then their bra indices
    std::vector<std::size_t> w_edges, w_other;
    for (std::size_t m : g.neighbors(w)) {
      const std::size_t e = g.edge_id(w, m);
      if (f_edges.count(e)) {
        w_edges.push_back(e);
        w_other.push_back(m);
      }
    }
    const std::size_t nf = w_edges.size();

    // apply the edge operator for every loop edge whose other endpoint was
    // already absorbed:
    //   E[k_u, b_u, k_w, b_w] = I_e delta(k_u,k_w) delta(b_u,b_w)
    //                           - mu_(w,u)[k_u,b_u] * mu_(u,w)[k_w,b_w]
    std::vector<std::pair<std::size_t, std::size_t>> merge_pairs;  // (acc leg, dw leg)
    for (std::size_t j = 0; j < nf; ++j) {
      const std::size_t e = w_edges[j];
      const std::size_t u = w_other[j];
      if (!absorbed.count(u)) continue;
      std::size_t pk = open.size(), pb = open.size();
      for (std::size_t p = 0; p < open.size(); ++p) {
        if (open[p].edge != e) continue;
        if (open[p].side == 0) pk = p;
        if (open[p].side == 1) pb = p;
      }
      if (pk == open.size() || pb == open.size())
        throw std::logic_error("loop_activity: missing open edge legs");
      const std::size_t D = net.bond_dim;
      const Matrix& mu_into_u = msgs[g.directed(w, u)];
      const Matrix& mu_into_w = msgs[g.directed(u, w)];
      const double i_e = norm.edge_overlap[e];
      Tensor eop(std::vector<std::size_t>{D, D, D, D});
      for (std::size_t ku = 0; ku < D; ++ku)
        for (std::size_t bu = 0; bu < D; ++bu)
          for (std::size_t kw = 0; kw < D; ++kw)
            for (std::size_t bw = 0; bw < D; ++bw)
              eop.at({ku, bu, kw, bw}) =
                  (ku == kw && bu == bw ? cplx{i_e, 0.0} : cplx{0.0, 0.0}) -
                  mu_into_u(ku, bu) * mu_into_w(kw, bw);
      acc = contract(acc, eop, {{pk, 0}, {pb, 1}});
      // update labels: two legs removed, pending ket/bra of w appended
      std::vector<Label> next;
      for (std::size_t p = 0; p < open.size(); ++p)
        if (p != pk && p != pb) next.push_back(open[p]);
      next.push_back({e, 2});
      next.push_back({e, 3});
      open = std::move(next);
    }
    // merge dw: pending legs pair with dw's ket/bra legs for those edges
    for (std::size_t p = 0; p < open.size(); ++p) {
      if (open[p].side < 2) continue;
      const std::size_t j =
          static_cast<std::size_t>(std::find(w_edges.begin(), w_edges.end(), open[p].edge) -
                                   w_edges.begin());
      if (j == nf) throw std::logic_error("loop_activity: pending edge not at vertex");
      merge_pairs.push_back({p, open[p].side == 2 ? j : nf + j});
    }
    acc = contract(acc, dw, merge_pairs);
    // rebuild labels: survivors keep order, then dw's unmatched legs
    std::vector<Label> next;
    for (std::size_t p = 0; p < open.size(); ++p)
      if (open[p].side < 2) next.push_back(open[p]);
    std::vector<bool> dw_used(2 * nf, false);
    for (auto [p, q] : merge_pairs) dw_used[q] = true;
    for (std::size_t j = 0; j < nf; ++j)
      if (!dw_used[j]) next.push_back({w_edges[j], 0});
    for (std::size_t j = 0; j < nf; ++j)
      if (!dw_used[nf + j]) next.push_back({w_edges[j], 1});
    open = std::move(next);
    absorbed.insert(w);
  }
  if (!open.empty() || acc.rank() != 0)
    throw std::logic_error("loop_activity: dangling legs after contraction");
  return acc[0];
}

}  // namespace bppeps
