#include "bppeps/bp.hpp"

#include <cmath>
#include <stdexcept>

namespace bppeps {

MessageSet uniform_messages(const PepsNetwork& net) {
  const std::size_t D = net.bond_dim;
  Matrix u = Matrix::identity(D);
  u.scale(cplx{1.0 / static_cast<double>(D), 0.0});
  return MessageSet(2 * net.graph.num_edges(), u);
}

Matrix bp_update_edge(const PepsNetwork& net, const MessageSet& msgs, std::size_t d,
                      RepairStats* repair) {
  const Graph& g = net.graph;
  const std::size_t v = g.dir_src(d);
  const std::size_t n = g.dir_dst(d);

  // f[i,i'] = sum_p T[p, .., i, ..] prod_m mu_(m,v)[j_m, j'_m] conj(T)[p, .., i', ..]
  // contracted leg by leg; messages are stored in (ket, bra) layout, so the
  // ket leg pairs with the message row and the appended column leg later
  // meets the bra tensor.
  Tensor a = net.site[v];
  std::vector<std::size_t> legpos(g.degree(v));  // current position of each virtual leg in a
  for (std::size_t k = 0; k < legpos.size(); ++k) legpos[k] = k + 1;
  std::vector<std::size_t> appended;  // legs of a carrying mu row indices, in neighbor order
  std::size_t kept = 0;               // position the out leg will land on
  for (std::size_t k = 0; k < g.neighbors(v).size(); ++k) {
    const std::size_t m = g.neighbors(v)[k];
    if (m == n) continue;
    const std::size_t pos = legpos[k];
    Tensor mu(std::vector<std::size_t>{net.bond_dim, net.bond_dim});
    const Matrix& mm = msgs[g.directed(m, v)];
    for (std::size_t r = 0; r < net.bond_dim; ++r)
      for (std::size_t c = 0; c < net.bond_dim; ++c) mu.at({r, c}) = mm(r, c);
    a = contract(a, mu, {{pos, 0}});
    // legs after pos shift left by one; the new row leg lands at the tail,
    // behind the previously appended ones
    for (std::size_t j = 0; j < legpos.size(); ++j)
      if (legpos[j] > pos) --legpos[j];
    appended.push_back(0);
    for (std::size_t j = 0; j < appended.size(); ++j) appended[j] = a.rank() - appended.size() + j;
  }
  const std::size_t out_leg_a = legpos[g.leg_of(v, n)];

  // pair with conj(T): physical leg 0, and each appended row leg with the
  // matching bra virtual leg
  Tensor bra = net.site[v].conj();
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 0}};
  std::size_t ap = 0;
  for (std::size_t k = 0; k < g.neighbors(v).size(); ++k) {
    if (g.neighbors(v)[k] == n) continue;
    pairs.push_back({appended[ap++], k + 1});
  }
  Tensor f = contract(a, bra, pairs);
  // remaining legs: ket out leg (from a), bra out leg (from bra)
  if (f.rank() != 2) throw std::logic_error("bp_update_edge: leg bookkeeping");
  (void)out_leg_a;

  Matrix fm(net.bond_dim, net.bond_dim);
  for (std::size_t r = 0; r < net.bond_dim; ++r)
    for (std::size_t c = 0; c < net.bond_dim; ++c) fm(r, c) = f.at({r, c});

  // hermitize, clip, renormalize
  Matrix h = add(fm, fm.adjoint());
  h.scale(cplx{0.5, 0.0});
  EigResult eig = eig_hermitian(h);
  bool any_negative = false;
  for (double ev : eig.values)
    if (ev < 0.0) any_negative = true;
  if (any_negative) {
    constexpr double kClipTol = -1e-10;
    Matrix rebuilt(h.rows(), h.cols());
    for (std::size_t a2 = 0; a2 < eig.values.size(); ++a2) {
      double ev = eig.values[a2];
      if (ev < 0.0) {
        if (repair) {
          repair->worst_negative = std::min(repair->worst_negative, ev);
          if (ev < kClipTol) ++repair->clip_events;
        }
        ev = 0.0;
      }
      for (std::size_t r = 0; r < h.rows(); ++r)
        for (std::size_t c = 0; c < h.cols(); ++c)
          rebuilt(r, c) += ev * eig.vectors(r, a2) * std::conj(eig.vectors(c, a2));
    }
    h = rebuilt;
  }
  const double tr = h.trace().real();
  if (!(tr > 0.0)) throw std::runtime_error("bp_update_edge: nonpositive message trace");
  h.scale(cplx{1.0 / tr, 0.0});
  return h;
}

MessageSet bp_sweep(const PepsNetwork& net, const MessageSet& msgs, RepairStats* repair) {
  MessageSet out(msgs.size());
  for (std::size_t d = 0; d < msgs.size(); ++d) out[d] = bp_update_edge(net, msgs, d, repair);
  return out;
}

double message_distance(const MessageSet& a, const MessageSet& b) {
  if (a.size() != b.size()) throw std::invalid_argument("message_distance: size mismatch");
  double m = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) m = std::max(m, schatten1(subtract(a[d], b[d])));
  return m;
}

BpRun find_fixed_point(const PepsNetwork& net, const BpOptions& opts) {
  return find_fixed_point_from(net, uniform_messages(net), opts);
}

BpRun find_fixed_point_from(const PepsNetwork& net, MessageSet start, const BpOptions& opts) {
  BpRun run;
  run.messages = std::move(start);
  for (run.iters = 0; run.iters < opts.max_iters; ++run.iters) {
    MessageSet next = bp_sweep(net, run.messages, &run.repair);
    const double delta = message_distance(next, run.messages);
    run.deltas.push_back(delta);
    run.messages = std::move(next);
    if (delta <= opts.tol) {
      run.converged = true;
      ++run.iters;
      break;
    }
  }
  return run;
}

Thresholds compute_thresholds(std::size_t bond_dim, std::size_t max_degree, double eps) {
  if (max_degree < 2) throw std::invalid_argument("thresholds: need max degree >= 2");
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("thresholds: eps out of range");
  const double D = static_cast<double>(bond_dim);
  const double deg = static_cast<double>(max_degree);
  Thresholds t;
  t.eps_star = 1.0 / (2.0 * deg - 1.0);
  t.q = 2.0 * (deg - 1.0) * eps / (1.0 - eps);
  t.c0 = std::log(2.0 * std::exp(1.0) * deg) + 0.5;
  t.eta = 2.0 * std::pow(D, 2.0 - deg / 2.0) * (D + 2.0) * eps;
  const double series = std::pow(D, deg / 2.0 - 2.0) / (2.0 * (D + 2.0)) *
                        std::exp(-0.75 * deg) * std::pow(2.0 * deg, -deg / 2.0);
  t.eps_dstar = std::min(series, std::min(1.0 / (1.0 + 2.0 * std::sqrt(D)), 1.0 / D));
  t.xi_star_inv = (eps > 0.0 && eps < t.eps_star) ? std::log(t.eps_star / eps) : 0.0;
  return t;
}

}  // namespace bppeps
