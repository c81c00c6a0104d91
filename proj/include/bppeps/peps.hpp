#pragma once

#include <cstdint>
#include <vector>

#include "bppeps/graph.hpp"
#include "bppeps/tensor.hpp"

namespace bppeps {

// PEPS on a graph. Site tensor legs: 0 = physical (dim d), then one virtual
// leg of dim D per neighbor in ascending neighbor id.
struct PepsNetwork {
  Graph graph;
  std::size_t bond_dim;
  std::size_t phys_dim;
  std::vector<Tensor> site;

  void validate() const;  // throws on shape mismatch
};

struct VertexInjectivity {
  std::vector<double> singular_values;  // of the virtual -> physical map, descending
  double delta;  // smallest / largest singular value
  double eps;    // 1 - delta^2
};

struct InjectivityReport {
  std::vector<VertexInjectivity> vertex;
  double min_delta;
  double max_eps;
};

// Matricization of the site tensor as a map from fused virtual legs to the
// physical leg (rows = physical).
Matrix virtual_to_physical(const PepsNetwork& net, std::size_t v);

InjectivityReport measure_injectivity(const PepsNetwork& net);

// Random injective PEPS with per-site spectrum pinned to largest singular
// value 1 and smallest sqrt(1 - eps_target); interior values i.i.d. uniform
// in between. phys_dim 0 selects the default D^max_degree.
PepsNetwork generate_random_peps(const Graph& g, std::size_t bond_dim, double eps_target,
                                 std::uint64_t seed, std::size_t phys_dim = 0);

struct PerturbReport {
  std::size_t vertex = 0;
  double strength = 0.0;              // operator norm of the additive noise
  double rescale = 1.0;               // applied so the new top singular value is 1
  std::vector<double> sv_before;      // pre-perturbation, pre-rescale
  std::vector<double> sv_after;       // post-perturbation, pre-rescale
  double max_shift = 0.0;             // max |sv_after - sv_before|
  double eps_after = 0.0;             // vertex injectivity after rescale
};

// Adds a random tensor with operator norm `strength` (on the virtual ->
// physical matricization) to site v, then rescales so the top singular value
// is 1 again.
PerturbReport perturb_site(PepsNetwork& net, std::size_t v, double strength, std::uint64_t seed);

// Virtual superoperator of vertex v toward neighbor `out`: X on the fused
// remaining virtual legs maps to sum_a lambda_a^2 K_a X K_a^dagger on the
// out leg.
struct VirtualChannel {
  std::vector<Matrix> kraus;     // dim_out x dim_in each
  std::vector<double> weights;   // lambda_a^2
  std::size_t dim_in;            // D^(deg-1)
  std::size_t dim_out;           // D

  Matrix apply(const Matrix& x) const;
  Matrix apply_depolarizing(const Matrix& x) const;  // trace(x) * identity
  Matrix apply_delta(const Matrix& x) const;         // apply - apply_depolarizing
};

VirtualChannel build_channel(const PepsNetwork& net, std::size_t v, std::size_t out);

}  // namespace bppeps
