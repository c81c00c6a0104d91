// bppeps: contract PEPS networks on arbitrary graphs with belief propagation
// plus cluster-expansion corrections, and update results after local tensor
// perturbations using only local recomputation.
//
// Exit codes: 0 success, 2 config/feasibility, 3 non-convergence,
// 4 stability guard, 5 oracle budget.

#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bppeps/cluster.hpp"
#include "bppeps/io.hpp"
#include "bppeps/locality.hpp"
#include "bppeps/oracle.hpp"

using namespace bppeps;

namespace {

constexpr int kOk = 0;
constexpr int kBadConfig = 2;
constexpr int kNoConvergence = 3;
constexpr int kStabilityGuard = 4;
constexpr int kOracleBudget = 5;

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

void emit(const std::string& path, const json& report) {
  if (path.empty() || path == "-") {
    std::cout << report.dump(2) << "\n";
  } else {
    save_json_file(path, report);
  }
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedNetwork {
  PepsNetwork net;
  std::string hash;
};

LoadedNetwork load_network(const std::string& path) {
  const std::string bytes = file_bytes(path);
  PepsNetwork net = network_from_json(json::parse(bytes));
  net.validate();
  return {std::move(net), content_hash(bytes)};
}

Matrix load_operator(const std::string& path, std::size_t phys_dim) {
  if (path.empty()) return Matrix::identity(phys_dim);
  Matrix m = matrix_from_json(json::parse(file_bytes(path)));
  if (m.rows() != phys_dim || m.cols() != phys_dim)
    throw std::invalid_argument("operator " + path + " is not " + std::to_string(phys_dim) +
                                " x " + std::to_string(phys_dim));
  return m;
}

Insertions make_region(const std::vector<std::size_t>& verts,
                       const std::vector<std::string>& op_paths, const PepsNetwork& net) {
  if (!op_paths.empty() && op_paths.size() != verts.size())
    throw std::invalid_argument("got " + std::to_string(op_paths.size()) + " operators for " +
                                std::to_string(verts.size()) + " vertices");
  Insertions region;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    if (verts[i] >= net.graph.num_vertices())
      throw std::invalid_argument("vertex " + std::to_string(verts[i]) + " out of range");
    region[verts[i]] = load_operator(op_paths.empty() ? "" : op_paths[i], net.phys_dim);
  }
  return region;
}

json injectivity_json(const InjectivityReport& rep) {
  json per = json::array();
  for (const VertexInjectivity& v : rep.vertex)
    per.push_back({{"singular_values", v.singular_values}, {"delta", v.delta}, {"eps", v.eps}});
  return {{"vertex", per}, {"min_delta", rep.min_delta}, {"max_eps", rep.max_eps}};
}

json thresholds_json(const Thresholds& th) {
  return {{"eps_star", th.eps_star},     {"q", th.q},
          {"c0", th.c0},                 {"eta", th.eta},
          {"eps_double_star", th.eps_dstar}, {"xi_star_inv", th.xi_star_inv}};
}

json bp_run_json(const BpRun& run) {
  return {{"converged", run.converged},
          {"iterations", run.iters},
          {"deltas", run.deltas},
          {"clip_events", run.repair.clip_events}};
}

// empirical per-iteration contraction ratio, skipping steps at the noise floor
double contraction_ratio(const std::vector<double>& deltas) {
  double r = 0.0;
  for (std::size_t i = 1; i < deltas.size(); ++i)
    if (deltas[i - 1] > 1e-13 && deltas[i] > 1e-14) r = std::max(r, deltas[i] / deltas[i - 1]);
  return r;
}

struct CommonOpts {
  std::string network_path;
  std::string output = "-";
  double tol = 1e-12;
  std::size_t max_weight = 6;
  bool oracle = false;
  int threads = 0;  // engines run deterministic sequential reductions
};

void add_common(CLI::App* cmd, CommonOpts& c, bool needs_network = true) {
  if (needs_network)
    cmd->add_option("-n,--network", c.network_path, "network JSON file")->required();
  cmd->add_option("-o,--output", c.output, "report path, - for stdout");
  cmd->add_option("--tolerance", c.tol, "BP convergence tolerance");
  cmd->add_option("-m,--max-weight", c.max_weight, "cluster expansion truncation order");
  cmd->add_flag("--oracle", c.oracle, "compare against the exact contraction oracle");
  cmd->add_option("--threads", c.threads, "worker cap (results are thread-count independent)")
      ->envname("BPPEPS_THREADS");
}

json report_header(const std::string& cmd, const json& config, const std::string& input_hash) {
  json j = {{"schema", "bppeps/1"}, {"command", cmd}, {"config", config}};
  if (!input_hash.empty()) j["input_hash"] = input_hash;
  return j;
}

int cmd_generate(const std::string& graph_spec, const std::string& graph_file,
                 std::size_t bond_dim, std::size_t phys_dim, double eps, std::uint64_t seed,
                 const std::string& output) {
  Graph g = graph_file.empty()
                ? make_family(graph_spec)
                : graph_from_json(json::parse(file_bytes(graph_file)));
  std::size_t d = phys_dim;
  if (d == 0) {
    d = 1;
    for (std::size_t k = 0; k < g.max_degree(); ++k) d *= bond_dim;
  } else {
    std::size_t need = 1;
    for (std::size_t k = 0; k < g.max_degree(); ++k) need *= bond_dim;
    if (d < need) {
      std::cerr << "infeasible: phys_dim " << d << " < D^max_degree = " << need << "\n";
      return kBadConfig;
    }
  }
  PepsNetwork net = generate_random_peps(g, bond_dim, eps, seed, d);
  save_json_file(output, network_to_json(net));
  InjectivityReport rep = measure_injectivity(net);
  json summary = report_header("generate",
                               {{"graph", graph_spec},
                                {"graph_file", graph_file},
                                {"bond_dim", bond_dim},
                                {"phys_dim", d},
                                {"epsilon", eps},
                                {"seed", seed},
                                {"output", output}},
                               "");
  summary["injectivity"] = injectivity_json(rep);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_contract(const CommonOpts& c) {
  LoadedNetwork in = load_network(c.network_path);
  const PepsNetwork& net = in.net;
  json report = report_header("contract",
                              {{"network", c.network_path},
                               {"max_weight", c.max_weight},
                               {"tolerance", c.tol},
                               {"oracle", c.oracle}},
                              in.hash);
  BpRun run = find_fixed_point(net, {c.tol, 5000});
  report["bp"] = bp_run_json(run);
  report["thresholds"] = thresholds_json(
      compute_thresholds(net.bond_dim, net.graph.max_degree(), measure_injectivity(net).max_eps));
  report["contraction_ratio"] = contraction_ratio(run.deltas);
  if (!run.converged) {
    report["converged"] = false;
    emit(c.output, report);
    return kNoConvergence;
  }
  report["converged"] = true;
  BpNorm norm = bp_normalization(net, run.messages);
  FreeEnergyReport fr = free_energy(net, run.messages, norm, c.max_weight);
  report["log_z_bp"] = fr.log_z_bp;
  report["f_by_order"] = fr.f_by_order;
  report["free_energy"] = fr.f_by_order.empty() ? fr.log_z_bp : fr.f_by_order.back();
  report["c_rate"] = fr.c_rate;
  report["c_certified"] = fr.c_certified;
  report["tail"] = fr.tail;
  json terms = json::array();
  for (const ExpansionTerm& t : fr.terms) {
    json items = json::array();
    for (auto [idx, mult] : t.cluster.items) items.push_back({idx, mult});
    terms.push_back({{"items", items},
                     {"weight", t.cluster.weight},
                     {"phi", rational_to_string(t.phi)},
                     {"z_w", cplx_json(t.z_w)}});
  }
  report["terms"] = terms;
  if (c.oracle) {
    const double exact = exact_log_norm(net);
    const double f = report["free_energy"].get<double>();
    report["oracle"] = {{"log_z", exact},
                        {"relative_error", std::abs(std::expm1(f - exact))}};
  }
  emit(c.output, report);
  return kOk;
}

int cmd_observe(const CommonOpts& c, const std::vector<std::size_t>& verts,
                const std::vector<std::string>& ops) {
  LoadedNetwork in = load_network(c.network_path);
  const PepsNetwork& net = in.net;
  Insertions region = make_region(verts, ops, net);
  json report = report_header("observe",
                              {{"network", c.network_path},
                               {"vertices", verts},
                               {"operators", ops},
                               {"max_weight", c.max_weight},
                               {"tolerance", c.tol},
                               {"oracle", c.oracle}},
                              in.hash);
  BpRun run = find_fixed_point(net, {c.tol, 5000});
  report["bp"] = bp_run_json(run);
  if (!run.converged) {
    emit(c.output, report);
    return kNoConvergence;
  }
  BpNorm norm = bp_normalization(net, run.messages);
  ObservableReport add = expectation_additive(net, run.messages, norm, region, c.max_weight);
  report["bp_value"] = cplx_json(add.bp_value);
  report["additive"] = {{"value", cplx_json(add.corrected)},
                        {"clusters_used", add.clusters_used}};
  if (std::abs(add.bp_value) > 1e-12) {
    ObservableReport mul =
        expectation_multiplicative(net, run.messages, norm, region, c.max_weight);
    report["multiplicative"] = {{"value", cplx_json(mul.corrected)},
                                {"clusters_used", mul.clusters_used}};
  } else {
    report["multiplicative"] = {{"skipped", "BP value below the division guard"}};
  }
  report["c_rate"] = add.c_rate;
  report["c_certified"] = add.c_certified;
  report["tail"] = add.tail;
  if (c.oracle) {
    OracleInsertions oins(region.begin(), region.end());
    const cplx exact = exact_expectation(net, oins);
    report["oracle"] = {{"value", cplx_json(exact)},
                        {"additive_error", std::abs(add.corrected - exact)}};
  }
  emit(c.output, report);
  return kOk;
}

int cmd_correlate(const CommonOpts& c, std::size_t va, const std::string& opa, std::size_t vb,
                  const std::string& opb) {
  LoadedNetwork in = load_network(c.network_path);
  const PepsNetwork& net = in.net;
  Insertions a = make_region({va}, opa.empty() ? std::vector<std::string>{} : std::vector{opa}, net);
  Insertions b = make_region({vb}, opb.empty() ? std::vector<std::string>{} : std::vector{opb}, net);
  json report = report_header("correlate",
                              {{"network", c.network_path},
                               {"vertex_a", va},
                               {"operator_a", opa},
                               {"vertex_b", vb},
                               {"operator_b", opb},
                               {"max_weight", c.max_weight},
                               {"tolerance", c.tol},
                               {"oracle", c.oracle}},
                              in.hash);
  BpRun run = find_fixed_point(net, {c.tol, 5000});
  report["bp"] = bp_run_json(run);
  if (!run.converged) {
    emit(c.output, report);
    return kNoConvergence;
  }
  BpNorm norm = bp_normalization(net, run.messages);
  CorrelatorReport cr = connected_correlator(net, run.messages, norm, a, b, c.max_weight);
  report["value"] = cplx_json(cr.value);
  report["distance"] = cr.distance;
  report["clusters_used"] = cr.clusters_used;
  report["xi_inv"] = cr.xi_inv;
  report["envelope"] = cr.envelope;
  report["c_rate"] = cr.c_rate;
  report["c_certified"] = cr.c_certified;
  if (c.oracle) {
    OracleInsertions oa(a.begin(), a.end()), ob(b.begin(), b.end());
    const cplx exact = exact_connected_correlator(net, oa, ob);
    report["oracle"] = {{"value", cplx_json(exact)}, {"error", std::abs(cr.value - exact)}};
  }
  emit(c.output, report);
  return kOk;
}

int cmd_perturb(const CommonOpts& c, std::size_t vertex, double strength, std::uint64_t seed,
                const std::vector<std::size_t>& verts, const std::vector<std::string>& ops,
                int radius, bool no_guard) {
  LoadedNetwork in = load_network(c.network_path);
  const PepsNetwork& net = in.net;
  Insertions region = make_region(verts, ops, net);
  if (radius < 0) {
    // default R_th: half the distance from the perturbed site to the region
    int dmin = net.graph.diameter();
    for (const auto& [v, o] : region) dmin = std::min(dmin, net.graph.distance(vertex, v));
    radius = (dmin + 1) / 2;
  }
  json report = report_header("perturb",
                              {{"network", c.network_path},
                               {"vertex", vertex},
                               {"strength", strength},
                               {"seed", seed},
                               {"vertices", verts},
                               {"operators", ops},
                               {"radius", radius},
                               {"max_weight", c.max_weight},
                               {"tolerance", c.tol},
                               {"guard", !no_guard}},
                              in.hash);
  PerturbationExperiment ex =
      run_perturbation_experiment(net, vertex, strength, seed, c.tol, !no_guard);
  if (!ex.converged) {
    emit(c.output, report);
    return kNoConvergence;
  }
  report["lightcone"] = {{"ok", ex.lightcone_ok},
                         {"steps", ex.lightcone_steps},
                         {"edges_checked", ex.lightcone_checked}};
  report["delta_by_radius"] = ex.delta_by_radius;
  report["q"] = ex.q;
  report["envelope_c"] = ex.envelope_c;
  report["perturbation"] = {{"max_sv_shift", ex.perturb.max_shift},
                            {"rescale", ex.perturb.rescale},
                            {"eps_after", ex.perturb.eps_after}};

  ObservableCache cache = build_observable_cache(net, region, c.max_weight, c.tol);
  PepsNetwork pert = net;
  perturb_site(pert, vertex, strength, seed);
  IncrementalResult inc = incremental_observable_update(pert, cache, radius, c.tol);
  ObservableCache fresh = build_observable_cache(pert, region, c.max_weight, c.tol);
  const std::uint64_t before = MulCounter::value();
  ObservableCache scratch = build_observable_cache(pert, region, c.max_weight, c.tol);
  const std::uint64_t scratch_mults = MulCounter::value() - before;
  report["incremental"] = {{"value", cplx_json(inc.value)},
                           {"from_scratch", cplx_json(scratch.corrected)},
                           {"difference", std::abs(inc.value - fresh.corrected)},
                           {"active_edges", inc.active_edges},
                           {"loops_reevaluated", inc.loops_reevaluated},
                           {"loops_reused", inc.loops_reused},
                           {"multiplies", inc.multiplies},
                           {"from_scratch_multiplies", scratch_mults},
                           {"savings_ratio", scratch_mults == 0
                                                 ? 0.0
                                                 : static_cast<double>(inc.multiplies) /
                                                       static_cast<double>(scratch_mults)},
                           {"far_cluster_bound", inc.far_cluster_bound}};
  emit(c.output, report);
  return kOk;
}

int cmd_scan(const CommonOpts& c, const std::string& graph_spec, std::size_t bond_dim,
             std::vector<double> eps_grid, std::size_t ensemble, std::uint64_t seed) {
  Graph g = make_family(graph_spec);
  json report = report_header("scan",
                              {{"graph", graph_spec},
                               {"bond_dim", bond_dim},
                               {"epsilons", eps_grid},
                               {"ensemble", ensemble},
                               {"seed", seed},
                               {"max_weight", c.max_weight},
                               {"tolerance", c.tol},
                               {"oracle", c.oracle}},
                              "");
  const Thresholds marks = compute_thresholds(bond_dim, g.max_degree(), 0.0);
  report["eps_star"] = marks.eps_star;
  report["eps_double_star"] = marks.eps_dstar;
  json rows = json::array();
  for (double eps : eps_grid) {
    for (std::size_t k = 0; k < ensemble; ++k) {
      PepsNetwork net = generate_random_peps(g, bond_dim, eps, seed + k);
      const double measured = measure_injectivity(net).max_eps;
      const Thresholds th = compute_thresholds(bond_dim, g.max_degree(), measured);
      json row = {{"epsilon", eps},      {"seed", seed + k}, {"measured_eps", measured},
                  {"q", th.q},           {"c0", th.c0},      {"certified_regime", measured < th.eps_star}};
      BpRun run = find_fixed_point(net, {c.tol, 5000});
      row["converged"] = run.converged;
      row["iterations"] = run.iters;
      row["contraction_ratio"] = contraction_ratio(run.deltas);
      if (run.converged) {
        BpNorm norm = bp_normalization(net, run.messages);
        FreeEnergyReport fr = free_energy(net, run.messages, norm, c.max_weight);
        row["c_rate"] = fr.c_rate;
        row["c_certified"] = fr.c_certified;
        row["free_energy"] = fr.f_by_order.empty() ? fr.log_z_bp : fr.f_by_order.back();
        if (c.oracle) {
          const double exact = exact_log_norm(net);
          row["oracle_log_z"] = exact;
          row["relative_error"] =
              std::abs(std::expm1(row["free_energy"].get<double>() - exact));
        }
      }
      rows.push_back(row);
    }
  }
  report["rows"] = rows;
  emit(c.output, report);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"belief-propagation PEPS contraction with cluster corrections"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a random injective network");
  std::string graph_spec = "grid:2x3:periodic", graph_file;
  std::size_t bond_dim = 2, phys_dim = 0;
  double eps = 0.05;
  std::uint64_t seed = 1;
  std::string gen_output = "network.json";
  gen->add_option("-g,--graph", graph_spec,
                  "grid:RxC[:periodic] | complete:n | cycle:n | random-regular:n:d:seed");
  gen->add_option("--graph-file", graph_file, "graph JSON file (overrides --graph)");
  gen->add_option("-D,--bond-dim", bond_dim, "virtual bond dimension");
  gen->add_option("-d,--phys-dim", phys_dim, "physical dimension, 0 = D^max_degree");
  gen->add_option("-e,--epsilon", eps, "injectivity target");
  gen->add_option("-s,--seed", seed, "generator seed");
  gen->add_option("-o,--output", gen_output, "network file to write");

  // contract
  CommonOpts con;
  auto* contract = app.add_subcommand("contract", "free energy with cluster corrections");
  add_common(contract, con);

  // observe
  CommonOpts obs;
  std::vector<std::size_t> obs_verts;
  std::vector<std::string> obs_ops;
  auto* observe = app.add_subcommand("observe", "local observable expectation");
  add_common(observe, obs);
  observe->add_option("-v,--vertex", obs_verts, "region vertices")->required();
  observe->add_option("--operator", obs_ops, "operator matrix JSON per vertex (default identity)");

  // correlate
  CommonOpts cor;
  std::size_t va = 0, vb = 0;
  std::string opa, opb;
  auto* correlate = app.add_subcommand("correlate", "connected correlator between two regions");
  add_common(correlate, cor);
  correlate->add_option("--vertex-a", va, "first region vertex")->required();
  correlate->add_option("--vertex-b", vb, "second region vertex")->required();
  correlate->add_option("--operator-a", opa, "operator for region A (default identity)");
  correlate->add_option("--operator-b", opb, "operator for region B (default identity)");

  // perturb
  CommonOpts per;
  std::size_t pvertex = 0;
  double strength = 1e-3;
  std::uint64_t pseed = 1;
  std::vector<std::size_t> pverts;
  std::vector<std::string> pops;
  int radius = -1;
  bool no_guard = false;
  auto* perturb = app.add_subcommand("perturb", "local perturbation and incremental update");
  add_common(perturb, per);
  perturb->add_option("--vertex", pvertex, "perturbed vertex")->required();
  perturb->add_option("--strength", strength, "operator norm of the perturbation");
  perturb->add_option("-s,--seed", pseed, "perturbation seed");
  perturb->add_option("--region", pverts, "observable region vertices")->required();
  perturb->add_option("--operator", pops, "operator matrix JSON per region vertex");
  perturb->add_option("--radius", radius, "loop re-evaluation radius, -1 = ceil(d(site,A)/2)");
  perturb->add_flag("--no-guard", no_guard, "bypass the stability guard");

  // scan
  CommonOpts scn;
  std::string scan_graph = "cycle:6";
  std::size_t scan_D = 2, ensemble = 3;
  std::uint64_t scan_seed = 1;
  std::vector<double> eps_grid;
  auto* scan = app.add_subcommand("scan", "sweep epsilon across an ensemble");
  add_common(scan, scn, false);
  scan->add_option("-g,--graph", scan_graph, "graph family");
  scan->add_option("-D,--bond-dim", scan_D, "virtual bond dimension");
  scan->add_option("-e,--epsilons", eps_grid, "epsilon grid")->required();
  scan->add_option("--ensemble", ensemble, "instances per epsilon");
  scan->add_option("-s,--seed", scan_seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadConfig;
  }

  try {
    if (gen->parsed())
      return cmd_generate(graph_spec, graph_file, bond_dim, phys_dim, eps, seed, gen_output);
    if (contract->parsed()) return cmd_contract(con);
    if (observe->parsed()) return cmd_observe(obs, obs_verts, obs_ops);
    if (correlate->parsed()) return cmd_correlate(cor, va, opa, vb, opb);
    if (perturb->parsed())
      return cmd_perturb(per, pvertex, strength, pseed, pverts, pops, radius, no_guard);
    if (scan->parsed()) return cmd_scan(scn, scan_graph, scan_D, eps_grid, ensemble, scan_seed);
  } catch (const std::domain_error& e) {
    std::cerr << "stability guard: " << e.what() << "\n";
    return kStabilityGuard;
  } catch (const std::length_error& e) {
    std::cerr << "oracle budget: " << e.what() << "\n";
    return kOracleBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadConfig;
  }
  return kBadConfig;
}
