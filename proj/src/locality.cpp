#include "bppeps/locality.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <stdexcept>

namespace bppeps {

namespace {

bool matrices_equal_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(cplx)) == 0;
}

std::vector<std::size_t> diff_vertices(const PepsNetwork& a, const PepsNetwork& b) {
  if (a.site.size() != b.site.size()) throw std::invalid_argument("diff: vertex count differs");
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < a.site.size(); ++v) {
    if (a.site[v].shape() != b.site[v].shape() ||
        std::memcmp(a.site[v].data().data(), b.site[v].data().data(),
                    a.site[v].size() * sizeof(cplx)) != 0)
      out.push_back(v);
  }
  return out;
}

}  // namespace

double stability_margin(const PepsNetwork& net, std::size_t vertex, double eps_th) {
  if (eps_th <= 0.0 || eps_th >= 1.0) throw std::invalid_argument("stability: bad threshold");
  SvdResult svd = svd_jacobi(virtual_to_physical(net, vertex));
  const double delta = svd.s.back() / svd.s.front();
  const double delta_th = std::sqrt(1.0 - eps_th);
  if (delta <= delta_th) return 0.0;
  // Weyl shift eta moves delta to at worst (delta - eta) / (1 + eta) after the
  // top singular value is renormalized; keep that above delta_th
  return svd.s.front() * (delta - delta_th) / (1.0 + delta_th);
}

PerturbationExperiment run_perturbation_experiment(const PepsNetwork& net, std::size_t vertex,
                                                   double strength, std::uint64_t seed,
                                                   double tol, bool enforce_guard) {
  const Graph& g = net.graph;
  const Thresholds th0 = compute_thresholds(net.bond_dim, g.max_degree(),
                                            measure_injectivity(net).max_eps);
  if (enforce_guard) {
    const double margin = stability_margin(net, vertex, th0.eps_star);
    if (strength >= margin)
      throw std::domain_error("perturbation strength " + std::to_string(strength) +
                              " exceeds the stability margin " + std::to_string(margin));
  }

  PerturbationExperiment ex;
  BpRun base = find_fixed_point(net, {tol, 5000});
  if (!base.converged) throw std::runtime_error("perturbation experiment: baseline diverged");

  PepsNetwork pert = net;
  ex.perturb = perturb_site(pert, vertex, strength, seed);

  const Thresholds th = compute_thresholds(net.bond_dim, g.max_degree(),
                                           measure_injectivity(pert).max_eps);
  ex.q = th.q;

  // light cone of the synchronous map: run the perturbed and unperturbed
  // sweeps in lockstep from the same start; after t steps, any edge whose
  // source is at distance >= t from the perturbed vertex has seen an
  // identical computation and must match bit for bit
  const std::vector<int> dist = g.distances({vertex});
  const int horizon = std::max(g.diameter(), 1) + 1;
  ex.lightcone_steps = horizon;
  ex.lightcone_ok = true;
  MessageSet cur = base.messages;
  MessageSet ref = base.messages;
  for (int t = 1; t <= horizon; ++t) {
    cur = bp_sweep(pert, cur);
    ref = bp_sweep(net, ref);
    for (std::size_t d = 0; d < cur.size(); ++d) {
      if (dist[g.dir_src(d)] < t) continue;
      ++ex.lightcone_checked;
      if (!matrices_equal_bits(cur[d], ref[d])) ex.lightcone_ok = false;
    }
  }

  BpRun pert_run = find_fixed_point_from(pert, base.messages, {tol, 5000});
  ex.converged = pert_run.converged;

  int rmax = 0;
  for (std::size_t d = 0; d < cur.size(); ++d) rmax = std::max(rmax, dist[g.dir_src(d)]);
  ex.delta_by_radius.assign(static_cast<std::size_t>(rmax) + 1, 0.0);
  for (std::size_t d = 0; d < cur.size(); ++d) {
    const int r = dist[g.dir_src(d)];
    if (r < 0) continue;
    const double shift = schatten1(subtract(pert_run.messages[d], base.messages[d]));
    ex.delta_by_radius[static_cast<std::size_t>(r)] =
        std::max(ex.delta_by_radius[static_cast<std::size_t>(r)], shift);
  }
  ex.envelope_c = 0.0;
  if (ex.q > 0.0 && ex.q < 1.0) {
    for (std::size_t r = 1; r < ex.delta_by_radius.size(); ++r) {
      if (ex.delta_by_radius[r] < 1e-13) continue;  // below the convergence floor
      ex.envelope_c = std::max(
          ex.envelope_c, ex.delta_by_radius[r] / std::pow(ex.q, static_cast<double>(r) - 1.0));
    }
  }
  return ex;
}

ObservableCache build_observable_cache(const PepsNetwork& net, const Insertions& region,
                                       std::size_t max_weight, double tol) {
  ObservableCache c{net, {}, {}, region, max_weight, {}, {}, {}, {}, {}, {}, {}};
  BpRun run = find_fixed_point(net, {tol, 5000});
  if (!run.converged) throw std::runtime_error("observable cache: fixed point not reached");
  c.messages = std::move(run.messages);
  c.norm = bp_normalization(net, c.messages);

  std::vector<std::size_t> verts;
  for (const auto& [v, o] : region) verts.push_back(v);
  c.loops = enumerate_loops(net.graph, max_weight, verts);
  for (const Loop& l : c.loops) {
    c.base.push_back(loop_activity(net, c.messages, c.norm, l));
    if (loop_touches(l, verts)) {
      Insertions ins;
      for (const auto& [v, o] : region)
        if (std::binary_search(l.vertices.begin(), l.vertices.end(), v)) ins.emplace(v, o);
      c.dressed.push_back(loop_activity(net, c.messages, c.norm, l, &ins, true));
    } else {
      c.dressed.push_back(c.base.back());
    }
  }
  c.bp_value = cplx{1.0, 0.0};
  for (const auto& [v, o] : region)
    c.bp_value *= vertex_closure_value(net, c.messages, v, &o) / c.norm.vertex_closure[v];

  cplx exponent{0.0, 0.0};
  for (const Cluster& w : enumerate_clusters(c.loops, max_weight)) {
    bool touches = false;
    for (auto [idx, mult] : w.items)
      if (loop_touches(c.loops[idx], verts)) touches = true;
    if (!touches) continue;
    c.clusters.push_back(w);
    c.phi.push_back(ursell(w, c.loops).value());
    cplx zw{1.0, 0.0}, zwa{1.0, 0.0};
    for (auto [idx, mult] : w.items)
      for (std::size_t k = 0; k < mult; ++k) {
        zw *= c.base[idx];
        zwa *= c.dressed[idx];
      }
    exponent += c.phi.back() * (zwa - zw);
  }
  c.corrected = c.bp_value * std::exp(exponent);
  return c;
}

IncrementalResult incremental_observable_update(const PepsNetwork& new_net,
                                                const ObservableCache& cache,
                                                int radius_threshold, double tol) {
  const Graph& g = new_net.graph;
  const std::uint64_t mul_start = MulCounter::read();
  IncrementalResult res;
  res.changed_vertices = diff_vertices(cache.net, new_net);
  if (res.changed_vertices.empty()) {
    res.value = cache.corrected;
    return res;
  }

  // buffer: the message lightcone radius plus enough contraction steps to
  // push the frozen-boundary error below tol
  const Thresholds th = compute_thresholds(new_net.bond_dim, g.max_degree(),
                                           measure_injectivity(new_net).max_eps);
  int buffer_steps;
  if (th.q > 0.0 && th.q < 1.0)
    buffer_steps = static_cast<int>(std::ceil(std::log(1.0 / tol) / std::log(1.0 / th.q)));
  else
    buffer_steps = g.diameter() + 1;  // no contraction certificate, rebuild everything
  const int r_buf = radius_threshold + buffer_steps;

  const std::vector<int> dist_a = g.distances(res.changed_vertices);
  std::vector<std::size_t> active;
  for (std::size_t d = 0; d < cache.messages.size(); ++d)
    if (dist_a[g.dir_src(d)] >= 0 && dist_a[g.dir_src(d)] <= r_buf) active.push_back(d);
  res.active_edges = active.size();

  MessageSet msgs = cache.messages;
  for (int it = 0; it < 5000; ++it) {
    MessageSet next = msgs;
    double delta = 0.0;
    for (std::size_t d : active) {
      next[d] = bp_update_edge(new_net, msgs, d);
      delta = std::max(delta, schatten1(subtract(next[d], msgs[d])));
    }
    msgs = std::move(next);
    ++res.iterations;
    if (delta <= tol) break;
    if (it == 4999) throw std::runtime_error("incremental update: message re-convergence failed");
  }

  BpNorm norm = bp_normalization(new_net, msgs);

  std::vector<std::size_t> region_verts;
  for (const auto& [v, o] : cache.region) region_verts.push_back(v);
  const std::vector<int> dist_b = g.distances(region_verts);

  // near loops (within radius_threshold of the region) are re-evaluated with
  // the fresh messages; far loops keep their cached activities
  std::vector<cplx> base = cache.base, dressed = cache.dressed;
  for (std::size_t i = 0; i < cache.loops.size(); ++i) {
    const Loop& l = cache.loops[i];
    int far = 0;
    for (std::size_t v : l.vertices) far = std::max(far, dist_b[v]);
    if (far > radius_threshold) {
      ++res.loops_reused;
      continue;
    }
    ++res.loops_reevaluated;
    base[i] = loop_activity(new_net, msgs, norm, l);
    if (loop_touches(l, region_verts)) {
      Insertions ins;
      for (const auto& [v, o] : cache.region)
        if (std::binary_search(l.vertices.begin(), l.vertices.end(), v)) ins.emplace(v, o);
      dressed[i] = loop_activity(new_net, msgs, norm, l, &ins, true);
    } else {
      dressed[i] = base[i];
    }
  }

  cplx bp_value{1.0, 0.0};
  for (const auto& [v, o] : cache.region)
    bp_value *= vertex_closure_value(new_net, msgs, v, &o) / norm.vertex_closure[v];
  cplx exponent{0.0, 0.0};
  for (std::size_t k = 0; k < cache.clusters.size(); ++k) {
    cplx zw{1.0, 0.0}, zwa{1.0, 0.0};
    for (auto [idx, mult] : cache.clusters[k].items)
      for (std::size_t t = 0; t < mult; ++t) {
        zw *= base[idx];
        zwa *= dressed[idx];
      }
    exponent += cache.phi[k] * (zwa - zw);
  }
  res.value = bp_value * std::exp(exponent);

  // certificate for the reused far-cluster contributions
  double c_rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cache.loops.size(); ++i) {
    const double a = std::abs(base[i]);
    if (a < 1e-300) continue;
    c_rate = std::min(c_rate, -std::log(a) / static_cast<double>(cache.loops[i].weight()));
  }
  const double c0 = std::log(2.0 * std::exp(1.0) * static_cast<double>(g.max_degree())) + 0.5;
  if (c_rate > c0)
    res.far_cluster_bound = static_cast<double>(cache.region.size()) *
                            std::exp(-(c_rate - c0) * static_cast<double>(radius_threshold + 1));
  res.multiplies = MulCounter::read() - mul_start;
  return res;
}

std::vector<SweepRow> observable_locality_sweep(const PepsNetwork& net, const Insertions& region,
                                                const std::vector<std::size_t>& sites,
                                                double strength, std::uint64_t seed,
                                                std::size_t max_weight, double tol) {
  std::vector<std::size_t> region_verts;
  for (const auto& [v, o] : region) region_verts.push_back(v);
  const std::vector<int> dist = net.graph.distances(region_verts);

  BpRun base_run = find_fixed_point(net, {tol, 5000});
  if (!base_run.converged) throw std::runtime_error("locality sweep: baseline diverged");
  BpNorm base_norm = bp_normalization(net, base_run.messages);
  const cplx base_val =
      expectation_multiplicative(net, base_run.messages, base_norm, region, max_weight).corrected;

  std::vector<SweepRow> rows;
  for (std::size_t v : sites) {
    PepsNetwork pert = net;
    perturb_site(pert, v, strength, seed + v);
    BpRun run = find_fixed_point(pert, {tol, 5000});
    if (!run.converged) throw std::runtime_error("locality sweep: perturbed run diverged");
    BpNorm norm = bp_normalization(pert, run.messages);
    const cplx val =
        expectation_multiplicative(pert, run.messages, norm, region, max_weight).corrected;
    const Thresholds th = compute_thresholds(pert.bond_dim, pert.graph.max_degree(),
                                             measure_injectivity(pert).max_eps);
    SweepRow row;
    row.vertex = v;
    row.distance = dist[v];
    row.shift = std::abs(val - base_val);
    row.envelope = (th.q > 0.0 && th.q < 1.0 && row.distance >= 1)
                       ? std::pow(th.q, static_cast<double>(row.distance) - 1.0)
                       : 1.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bppeps
