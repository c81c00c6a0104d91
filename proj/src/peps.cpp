#include "bppeps/peps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bppeps {

void PepsNetwork::validate() const {
  if (bond_dim < 2) throw std::invalid_argument("peps: bond_dim must be >= 2");
  if (site.size() != graph.num_vertices()) throw std::invalid_argument("peps: tensor count");
  for (std::size_t v = 0; v < site.size(); ++v) {
    const std::size_t deg = graph.degree(v);
    if (deg == 0) throw std::invalid_argument("peps: isolated vertex");
    const auto& sh = site[v].shape();
    if (sh.size() != deg + 1 || sh[0] != phys_dim)
      throw std::invalid_argument("peps: bad site tensor rank or physical dim");
    for (std::size_t k = 1; k < sh.size(); ++k)
      if (sh[k] != bond_dim) throw std::invalid_argument("peps: bad virtual dim");
  }
}

Matrix virtual_to_physical(const PepsNetwork& net, std::size_t v) {
  return matricize(net.site[v], {0});
}

InjectivityReport measure_injectivity(const PepsNetwork& net) {
  InjectivityReport rep;
  rep.min_delta = 1.0;
  rep.max_eps = 0.0;
  for (std::size_t v = 0; v < net.site.size(); ++v) {
    Matrix m = virtual_to_physical(net, v);
    if (m.rows() < m.cols())
      throw std::invalid_argument("injectivity: phys_dim below virtual dim at vertex " +
                                  std::to_string(v));
    SvdResult svd = svd_jacobi(m);
    VertexInjectivity vi;
    vi.singular_values = svd.s;
    const double smax = svd.s.front();
    if (smax <= 0.0) throw std::invalid_argument("injectivity: zero tensor");
    const double smin = svd.s.back();
    vi.delta = smin / smax;
    vi.eps = 1.0 - vi.delta * vi.delta;
    rep.min_delta = std::min(rep.min_delta, vi.delta);
    rep.max_eps = std::max(rep.max_eps, vi.eps);
    rep.vertex.push_back(std::move(vi));
  }
  return rep;
}

PepsNetwork generate_random_peps(const Graph& g, std::size_t bond_dim, double eps_target,
                                 std::uint64_t seed, std::size_t phys_dim) {
  if (eps_target < 0.0 || eps_target >= 1.0)
    throw std::invalid_argument("generate: eps_target must be in [0, 1)");
  const std::size_t delta_max = g.max_degree();
  std::size_t d = phys_dim;
  if (d == 0) {
    d = 1;
    for (std::size_t k = 0; k < delta_max; ++k) d *= bond_dim;
  }
  PepsNetwork net{g, bond_dim, d, {}};
  CounterRng master(seed, 0x70657073ULL);
  const double smin = std::sqrt(1.0 - eps_target);
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const std::size_t deg = g.degree(v);
    if (deg == 0) throw std::invalid_argument("generate: isolated vertex");
    std::size_t nv = 1;
    for (std::size_t k = 0; k < deg; ++k) nv *= bond_dim;
    if (d < nv)
      throw std::invalid_argument("generate: phys_dim too small for injectivity at vertex " +
                                  std::to_string(v));
    CounterRng rv = master.split(v);
    CounterRng r_iso = rv.split(0), r_uni = rv.split(1), r_sig = rv.split(2);
    Matrix viso = haar_isometry(d, nv, r_iso);
    Matrix u = haar_isometry(nv, nv, r_uni);
    std::vector<double> sigma(nv);
    sigma[0] = 1.0;
    if (nv > 1) sigma[nv - 1] = smin;
    for (std::size_t k = 1; k + 1 < nv; ++k) sigma[k] = smin + (1.0 - smin) * r_sig.uniform();
    std::sort(sigma.rbegin(), sigma.rend());
    // T = V Sigma U^dagger as a d x nv matrix
    Matrix t(d, nv);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < nv; ++c) {
        cplx acc = 0.0;
        for (std::size_t a = 0; a < nv; ++a) acc += viso(r, a) * sigma[a] * std::conj(u(c, a));
        t(r, c) = acc;
      }
    std::vector<std::size_t> shape{d};
    for (std::size_t k = 0; k < deg; ++k) shape.push_back(bond_dim);
    net.site.push_back(tensorize(t, shape, {0}));
  }
  net.validate();
  return net;
}

PerturbReport perturb_site(PepsNetwork& net, std::size_t v, double strength, std::uint64_t seed) {
  if (v >= net.site.size()) throw std::invalid_argument("perturb: vertex out of range");
  if (strength < 0.0) throw std::invalid_argument("perturb: negative strength");
  PerturbReport rep;
  rep.vertex = v;
  rep.strength = strength;
  rep.sv_before = svd_jacobi(virtual_to_physical(net, v)).s;

  CounterRng rng(seed, 0x70657274ULL + v);
  Tensor noise(net.site[v].shape());
  for (cplx& x : noise.data()) x = rng.normal_cplx();
  const double nrm = schatten_inf(matricize(noise, {0}));
  if (nrm <= 0.0) throw std::runtime_error("perturb: degenerate noise sample");
  noise.scale(strength / nrm);
  for (std::size_t k = 0; k < noise.size(); ++k) net.site[v][k] += noise[k];

  SvdResult after = svd_jacobi(virtual_to_physical(net, v));
  rep.sv_after = after.s;
  for (std::size_t k = 0; k < rep.sv_before.size(); ++k)
    rep.max_shift = std::max(rep.max_shift, std::abs(rep.sv_after[k] - rep.sv_before[k]));

  const double top = after.s.front();
  rep.rescale = 1.0 / top;
  net.site[v].scale(cplx{rep.rescale, 0.0});
  const double smin = after.s.back() / top;
  rep.eps_after = 1.0 - smin * smin;
  return rep;
}

Matrix VirtualChannel::apply(const Matrix& x) const {
  if (x.rows() != dim_in || x.cols() != dim_in)
    throw std::invalid_argument("channel: input dimension mismatch");
  Matrix out(dim_out, dim_out);
  for (std::size_t a = 0; a < kraus.size(); ++a) {
    Matrix kx = multiply(kraus[a], x);
    Matrix kxk = multiply(kx, kraus[a].adjoint());
    kxk.scale(cplx{weights[a], 0.0});
    out = add(out, kxk);
  }
  return out;
}

Matrix VirtualChannel::apply_depolarizing(const Matrix& x) const {
  if (x.rows() != dim_in || x.cols() != dim_in)
    throw std::invalid_argument("channel: input dimension mismatch");
  Matrix out = Matrix::identity(dim_out);
  out.scale(x.trace());
  return out;
}

Matrix VirtualChannel::apply_delta(const Matrix& x) const {
  return subtract(apply(x), apply_depolarizing(x));
}

VirtualChannel build_channel(const PepsNetwork& net, std::size_t v, std::size_t out) {
  const Graph& g = net.graph;
  const std::size_t deg = g.degree(v);
  const std::size_t out_leg = g.leg_of(v, out);  // 0-based among neighbors
  Matrix m = virtual_to_physical(net, v);        // d x D^deg
  SvdResult svd = svd_jacobi(m);                 // m = U S V^dagger

  VirtualChannel ch;
  ch.dim_out = net.bond_dim;
  ch.dim_in = 1;
  for (std::size_t k = 0; k + 1 < deg; ++k) ch.dim_in *= net.bond_dim;

  // T[p, j_1..j_deg] = sum_a U[p,a] s_a conj(V[(j),a]); the Kraus operator of
  // branch a is conj(V[., a]) reshaped with the out leg as rows
  std::vector<std::size_t> vshape(deg, net.bond_dim);
  for (std::size_t a = 0; a < svd.s.size(); ++a) {
    Tensor col(vshape);
    for (std::size_t f = 0; f < col.size(); ++f) col[f] = std::conj(svd.v(f, a));
    Matrix k = matricize(col, {out_leg});
    ch.kraus.push_back(std::move(k));
    ch.weights.push_back(svd.s[a] * svd.s[a]);
  }
  return ch;
}

}  // namespace bppeps
