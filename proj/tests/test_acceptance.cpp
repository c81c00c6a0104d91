// Acceptance gate: ten end-to-end criteria, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bppeps/cluster.hpp"
#include "bppeps/locality.hpp"
#include "bppeps/oracle.hpp"

using namespace bppeps;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %2d %-28s %s  (%s)\n", idx, name, ok ? "PASS" : "FAIL", detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Matrix pauli_z(std::size_t d) {
  Matrix o = Matrix::identity(d);
  for (std::size_t k = d / 2; k < d; ++k) o(k, k) = -1.0;
  return o;
}

struct Fixture {
  PepsNetwork net;
  BpRun run;
  BpNorm norm;
};

Fixture converge(const Graph& g, double eps, std::uint64_t seed, double tol = 1e-12) {
  Fixture f{generate_random_peps(g, 2, eps, seed), {}, {}};
  f.run = find_fixed_point(f.net, {tol, 5000});
  if (f.run.converged) f.norm = bp_normalization(f.net, f.run.messages);
  return f;
}

// ---- 1: isometric baseline ------------------------------------------------

void criterion1() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, Graph>> cases = {
      {"K3", make_complete(3)},
      {"C4", make_cycle(4)},
      {"K4", make_complete(4)},
      {"2x3 torus", make_grid(2, 3, true)}};
  for (const auto& [name, g] : cases) {
    Fixture f = converge(g, 0.0, 11);
    if (!f.run.converged || f.run.iters > 1) ok = false;
    const MessageSet uni = uniform_messages(f.net);
    if (message_distance(f.run.messages, uni) > 1e-12) ok = false;
    for (const Loop& l : enumerate_loops(g, std::min<std::size_t>(g.num_edges(), 8)))
      if (std::abs(loop_activity(f.net, f.run.messages, f.norm, l)) > 1e-12) ok = false;
    const double want = static_cast<double>(g.num_edges()) * std::log(2.0);
    const double rel = std::abs(std::expm1(f.norm.log_z_bp - want));
    if (rel > 1e-10) ok = false;
    detail += name + (ok ? " ok; " : " FAIL; ");
  }
  report(1, "isometric baseline", ok, detail);
}

// ---- 2: contraction certificate -------------------------------------------

void criterion2() {
  bool ok = true;
  double worst = 0.0;
  int checked = 0;
  for (const Graph& g : {make_grid(2, 3, true) /* degree 3 */, make_grid(3, 3, true) /* 4 */}) {
    for (double eps : {0.01, 0.03, 0.05}) {
      for (std::uint64_t seed : {1ull, 2ull}) {
        Fixture f = converge(g, eps, seed);
        const double measured = measure_injectivity(f.net).max_eps;
        const Thresholds th = compute_thresholds(2, g.max_degree(), measured);
        if (measured >= th.eps_star) continue;
        ++checked;
        if (!f.run.converged) ok = false;
        for (std::size_t i = 1; i < f.run.deltas.size(); ++i) {
          if (f.run.deltas[i - 1] < 1e-13) break;  // at the convergence floor
          const double ratio = f.run.deltas[i] / f.run.deltas[i - 1];
          worst = std::max(worst, ratio - th.q);
          if (ratio > th.q + 1e-9) ok = false;
        }
        // geometric bound on the iteration count
        if (th.q > 0.0 && !f.run.deltas.empty()) {
          const double d0 = f.run.deltas.front();
          const int bound =
              static_cast<int>(std::ceil(std::log(d0 / 1e-12) / std::log(1.0 / th.q))) + 2;
          if (f.run.iters > bound) ok = false;
        }
      }
    }
  }
  report(2, "contraction certificate", ok,
         "instances=" + std::to_string(checked) + " worst ratio-q=" + fmt(worst));
}

// ---- 3: fixed-point proximity ----------------------------------------------

void criterion3() {
  bool ok = true;
  int n = 0;
  double worst = 0.0;
  const std::vector<Graph> graphs = {make_complete(3), make_cycle(5), make_grid(2, 3, true),
                                     make_grid(3, 3, false)};
  for (const Graph& g : graphs) {
    for (double eps : {0.02, 0.06, 0.1}) {
      for (std::uint64_t seed : {3ull, 17ull}) {
        Fixture f = converge(g, eps, seed);
        if (!f.run.converged) {
          ok = false;
          continue;
        }
        ++n;
        const double measured = measure_injectivity(f.net).max_eps;
        const double bound = 2.0 * measured / (1.0 - measured) + 1e-9;
        Matrix target = Matrix::identity(f.net.bond_dim);
        target.scale(1.0 / static_cast<double>(f.net.bond_dim));
        for (const Matrix& mu : f.run.messages) {
          const double dist = schatten1(subtract(mu, target));
          worst = std::max(worst, dist - bound);
          if (dist > bound) ok = false;
        }
      }
    }
  }
  report(3, "fixed-point proximity", ok,
         "instances=" + std::to_string(n) + " worst slack=" + fmt(worst));
}

// ---- 4: cluster-corrected accuracy -----------------------------------------

void criterion4() {
  Fixture f = converge(make_grid(2, 3, true), 0.03, 7);
  bool ok = f.run.converged;
  const double exact = exact_log_norm(f.net);
  FreeEnergyReport fr = free_energy(f.net, f.run.messages, f.norm, 8);
  const double e4 = std::abs(fr.f_by_order[3] - exact);
  const double e6 = std::abs(fr.f_by_order[5] - exact);
  const double e8 = std::abs(fr.f_by_order[7] - exact);
  if (!(e6 <= e4 + 1e-15 && e8 <= e6 + 1e-15)) ok = false;
  const Thresholds th =
      compute_thresholds(2, f.net.graph.max_degree(), measure_injectivity(f.net).max_eps);
  if (fr.c_rate > th.c0) {
    const double n = static_cast<double>(f.net.graph.num_vertices());
    for (std::size_t m : {4u, 6u, 8u}) {
      const double tail = n * std::exp(-(fr.c_rate - th.c0) * static_cast<double>(m + 1));
      if (std::abs(fr.f_by_order[m - 1] - exact) > tail) ok = false;
    }
  }
  const double rel = std::abs(std::expm1(fr.f_by_order[7] - exact));
  if (rel > 1e-4) ok = false;
  report(4, "cluster-corrected accuracy", ok,
         "errors " + fmt(e4) + " >= " + fmt(e6) + " >= " +
             fmt(e8) + ", rel(expF8)=" + fmt(rel));
}

// ---- 5: single-loop exactness ----------------------------------------------

// independent Ursell brute force for a pure power cluster: interaction graph
// K_k, phi = (1/k!) * sum over connected spanning edge subsets of (-1)^|E'|
double ursell_bruteforce_power(std::size_t k) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < static_cast<int>(k); ++i)
    for (int j = i + 1; j < static_cast<int>(k); ++j) edges.push_back({i, j});
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << edges.size()); ++mask) {
    std::vector<std::vector<int>> adj(k);
    std::size_t ecount = 0;
    for (std::size_t e = 0; e < edges.size(); ++e)
      if (mask >> e & 1) {
        adj[edges[e].first].push_back(edges[e].second);
        adj[edges[e].second].push_back(edges[e].first);
        ++ecount;
      }
    std::vector<bool> seen(k, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
    bool connected = true;
    for (bool b : seen) connected = connected && b;
    if (connected) total += (ecount % 2 == 0 ? 1.0 : -1.0);
  }
  double fact = 1.0;
  for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
  return total / fact;
}

void criterion5() {
  Fixture f = converge(make_complete(3), 0.05, 21);
  bool ok = f.run.converged;
  auto loops = enumerate_loops(f.net.graph, 3);
  const double z = loop_activity(f.net, f.run.messages, f.norm, loops[0]).real();
  const double exact = exact_log_norm(f.net);
  const double rel = std::abs(std::expm1(f.norm.log_z_bp + std::log1p(z) - exact));
  if (rel > 1e-9) ok = false;

  // rational phi vs the independent brute force, and the Taylor identity
  double series = 0.0;
  for (std::size_t k = 1; k <= 6; ++k) {
    Cluster c{{{0, k}}, 3 * k};
    const Rational phi = ursell(c, loops);
    if (std::abs(phi.value() - ursell_bruteforce_power(k)) > 1e-14) ok = false;
    if (k == 1 && !(phi.num == 1 && phi.den == 1)) ok = false;
    if (k == 2 && !(phi.num == -1 && phi.den == 2)) ok = false;
    series += phi.value() * std::pow(z, static_cast<double>(k));
    double taylor = 0.0;
    for (std::size_t j = 1; j <= k; ++j)
      taylor += (j % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(j) *
                std::pow(z, static_cast<double>(j));
    if (std::abs(series - taylor) > 1e-14) ok = false;
  }
  report(5, "single-loop exactness", ok, "K3 identity rel err=" + fmt(rel));
}

// ---- 6: observables and correlators ----------------------------------------

void criterion6() {
  bool ok = true;
  std::string detail;

  // identity observable is exactly 1, identity correlator exactly 0
  {
    Fixture f = converge(make_cycle(4), 0.05, 5);
    Insertions id_a{{1, Matrix::identity(f.net.phys_dim)}};
    Insertions id_b{{3, Matrix::identity(f.net.phys_dim)}};
    ObservableReport o = expectation_additive(f.net, f.run.messages, f.norm, id_a, 6);
    if (std::abs(o.corrected - 1.0) > 1e-12) ok = false;
    CorrelatorReport cr = connected_correlator(f.net, f.run.messages, f.norm, id_a, id_b, 6);
    if (std::abs(cr.value) > 1e-12) ok = false;
  }

  // eps = 0.03 torus: corrected observable within the tail certificate
  {
    Fixture f = converge(make_grid(2, 3, true), 0.03, 7);
    Insertions region{{2, pauli_z(f.net.phys_dim)}};
    OracleInsertions oregion{{2, pauli_z(f.net.phys_dim)}};
    const cplx exact = exact_expectation(f.net, oregion);
    ObservableReport o = expectation_multiplicative(f.net, f.run.messages, f.norm, region, 8);
    const double err = std::abs(o.corrected - exact);
    detail += "obs err=" + fmt(err);
    if (!o.c_certified) ok = false;
    if (err > o.tail + 1e-12) ok = false;
  }

  // eps = 0 correlators at distance >= 2 vanish
  {
    Fixture f = converge(make_grid(2, 3, true), 0.0, 9);
    Insertions a{{0, pauli_z(f.net.phys_dim)}};
    Insertions b{{4, pauli_z(f.net.phys_dim)}};
    CorrelatorReport cr = connected_correlator(f.net, f.run.messages, f.norm, a, b, 6);
    if (cr.distance < 2 || std::abs(cr.value) > 1e-10) ok = false;
  }

  // decay envelope across placements on a cycle
  {
    Fixture f = converge(make_cycle(8), 0.08, 13);
    Insertions a{{0, pauli_z(f.net.phys_dim)}};
    double prev = 1e300;
    for (std::size_t vb : {1, 2, 3, 4}) {
      Insertions b{{vb, pauli_z(f.net.phys_dim)}};
      CorrelatorReport cr = connected_correlator(f.net, f.run.messages, f.norm, a, b, 10);
      if (cr.c_certified && cr.envelope > 0.0 && std::abs(cr.value) > cr.envelope + 1e-12)
        ok = false;
      if (std::abs(cr.value) > prev + 1e-12) ok = false;
      prev = std::abs(cr.value);
    }
  }
  report(6, "observables and correlators", ok, detail);
}

// ---- 7: lightcone bit-exactness ---------------------------------------------

void criterion7() {
  bool ok = true;
  int experiments = 0;
  std::size_t checked = 0;
  const std::vector<Graph> graphs = {make_grid(3, 4, false), make_cycle(8), make_grid(2, 4, true)};
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    PepsNetwork net = generate_random_peps(graphs[gi], 2, 0.05, 31 + gi);
    for (std::size_t vertex : {std::size_t{0}, graphs[gi].num_vertices() / 2}) {
      for (std::uint64_t seed = 1; seed <= 9; ++seed) {
        PerturbationExperiment ex =
            run_perturbation_experiment(net, vertex, 1e-3, seed + 100 * gi);
        ++experiments;
        checked += ex.lightcone_checked;
        if (!ex.lightcone_ok || ex.lightcone_checked == 0) ok = false;
      }
    }
  }
  if (experiments < 50) ok = false;
  report(7, "lightcone bit-exactness", ok,
         std::to_string(experiments) + " experiments, " + std::to_string(checked) +
             " edge checks, 0 tolerance");
}

// ---- 8: locality envelopes ---------------------------------------------------

void criterion8() {
  bool ok = true;
  // fitted single-C envelope on message deltas
  PepsNetwork net = generate_random_peps(make_grid(3, 4, false), 2, 0.05, 31);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    PerturbationExperiment ex = run_perturbation_experiment(net, 5, 1e-3, seed);
    if (!(ex.q > 0.0 && ex.q < 1.0)) ok = false;
    for (std::size_t r = 1; r < ex.delta_by_radius.size(); ++r) {
      if (ex.delta_by_radius[r] < 1e-13) continue;
      if (ex.delta_by_radius[r] >
          ex.envelope_c * std::pow(ex.q, static_cast<double>(r) - 1.0) + 1e-12)
        ok = false;
    }
  }
  // observable shifts decrease with distance across a placement grid
  PepsNetwork net2 = generate_random_peps(make_grid(3, 4, false), 2, 0.04, 42);
  Insertions region{{0, pauli_z(net2.phys_dim)}};
  auto rows = observable_locality_sweep(net2, region, {1, 6, 11}, 1e-3, 17, 6);
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].distance > rows[i - 1].distance && rows[i].shift > rows[i - 1].shift + 1e-12)
      ok = false;
  for (const SweepRow& r : rows)
    if (r.shift > r.envelope + 1e-12) ok = false;
  report(8, "locality envelopes", ok, "message and observable envelopes hold");
}

// ---- 9: incremental-update equivalence ---------------------------------------

void criterion9() {
  bool ok = true;
  std::string detail;
  const std::vector<std::tuple<Graph, std::size_t, std::size_t>> instances = {
      {make_grid(3, 4, false), std::size_t{0}, std::size_t{11}},
      {make_grid(2, 4, true), std::size_t{1}, std::size_t{6}},
      {make_grid(4, 5, false), std::size_t{0}, std::size_t{19}}};
  for (const auto& [g, obs_v, pert_v] : instances) {
    PepsNetwork net = generate_random_peps(g, 2, 0.04, 12);
    Insertions region{{obs_v, pauli_z(net.phys_dim)}};
    ObservableCache cache = build_observable_cache(net, region, 6);
    PepsNetwork pert = net;
    perturb_site(pert, pert_v, 5e-4, 99);
    ObservableCache fresh = build_observable_cache(pert, region, 6);

    const int diam = g.diameter();
    const std::uint64_t t0 = MulCounter::value();
    IncrementalResult full = incremental_observable_update(pert, cache, diam);
    const std::uint64_t full_mults = MulCounter::value() - t0;
    if (std::abs(full.value - fresh.corrected) > 1e-9) ok = false;

    IncrementalResult small = incremental_observable_update(pert, cache, 2);
    if (!(2 < diam)) continue;
    if (!(small.multiplies < full_mults)) ok = false;
    // agreement within the near/far certificate (plus BP re-convergence floor)
    const double budget = small.far_cluster_bound > 0.0 ? small.far_cluster_bound + 1e-7 : 1e-5;
    if (std::abs(small.value - fresh.corrected) > budget) ok = false;
    detail += std::to_string(small.multiplies) + "<" + std::to_string(full_mults) + " ";
  }
  report(9, "incremental equivalence", ok, "multiplies " + detail);
}

// ---- 10: Weyl stability --------------------------------------------------------

void criterion10() {
  bool ok = true;
  int accepted = 0;
  PepsNetwork net = generate_random_peps(make_grid(2, 4, true), 2, 0.04, 8);
  const Thresholds th =
      compute_thresholds(2, net.graph.max_degree(), measure_injectivity(net).max_eps);
  for (std::size_t v = 0; v < net.graph.num_vertices(); ++v) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const double margin = stability_margin(net, v, th.eps_star);
      const double strength = 0.5 * margin;
      PepsNetwork pert = net;
      PerturbReport rep = perturb_site(pert, v, strength, seed);
      ++accepted;
      // Weyl: every singular value moves by at most the perturbation norm
      if (rep.max_shift > strength + 1e-10) ok = false;
      if (rep.eps_after >= th.eps_star) ok = false;
    }
  }
  // violations are refused
  bool threw = false;
  try {
    run_perturbation_experiment(net, 0, 10.0, 1);
  } catch (const std::domain_error&) {
    threw = true;
  }
  if (!threw) ok = false;
  report(10, "Weyl stability", ok,
         std::to_string(accepted) + " accepted, oversized strength refused");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
