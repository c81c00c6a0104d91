#pragma once

#include <cstdint>
#include <vector>

#include "bppeps/cluster.hpp"

namespace bppeps {

// Largest perturbation operator norm that keeps every vertex above the
// injectivity threshold eps_th after renormalization (Weyl bound).
double stability_margin(const PepsNetwork& net, std::size_t vertex, double eps_th);

struct PerturbationExperiment {
  PerturbReport perturb;
  bool lightcone_ok = false;        // bit-exact outside the light cone
  int lightcone_steps = 0;          // synchronous steps checked
  std::size_t lightcone_checked = 0;
  std::vector<double> delta_by_radius;  // max trace-norm fixed-point shift at distance r
  double q = 0.0;                       // contraction factor of the perturbed network
  double envelope_c = 0.0;              // max_r delta_r / q^(r-1)
  bool converged = false;
};

// Perturbs one site, verifies the light cone of the synchronous map bit for
// bit, and measures the fixed-point shift versus distance. Refuses strengths
// beyond the stability margin unless enforce_guard is off.
PerturbationExperiment run_perturbation_experiment(const PepsNetwork& net, std::size_t vertex,
                                                   double strength, std::uint64_t seed,
                                                   double tol = 1e-12,
                                                   bool enforce_guard = true);

// Everything the incremental path can reuse from a converged baseline.
struct ObservableCache {
  PepsNetwork net;
  MessageSet messages;
  BpNorm norm;
  Insertions region;
  std::size_t max_weight = 0;
  std::vector<Loop> loops;          // anchored at the region
  std::vector<cplx> base;           // undressed activities
  std::vector<cplx> dressed;        // dressed activities (multiplicative convention)
  std::vector<Cluster> clusters;    // touching the region
  std::vector<double> phi;
  cplx bp_value;
  cplx corrected;
};

ObservableCache build_observable_cache(const PepsNetwork& net, const Insertions& region,
                                       std::size_t max_weight, double tol = 1e-12);

struct IncrementalResult {
  cplx value;
  std::vector<std::size_t> changed_vertices;
  std::size_t active_edges = 0;     // directed edges re-converged
  int iterations = 0;
  std::size_t loops_reevaluated = 0;
  std::size_t loops_reused = 0;
  std::uint64_t multiplies = 0;     // scalar multiplies spent inside this call
  double far_cluster_bound = 0.0;   // certified reuse error when c > c0
};

// Re-converges messages only within the perturbation's buffer zone and
// re-evaluates only loops within radius_threshold of the observable region;
// far loop activities are reused from the cache.
IncrementalResult incremental_observable_update(const PepsNetwork& new_net,
                                                const ObservableCache& cache,
                                                int radius_threshold, double tol = 1e-12);

struct SweepRow {
  std::size_t vertex;
  int distance;       // from the observable region
  double shift;       // |<O>_perturbed - <O>_base|
  double envelope;    // C * q^(distance-1) reference envelope
};

// Perturbs each listed vertex in turn (same strength) and records the shift
// of the cluster-corrected observable versus distance from the region.
std::vector<SweepRow> observable_locality_sweep(const PepsNetwork& net, const Insertions& region,
                                                const std::vector<std::size_t>& sites,
                                                double strength, std::uint64_t seed,
                                                std::size_t max_weight, double tol = 1e-12);

}  // namespace bppeps
