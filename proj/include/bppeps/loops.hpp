#pragma once

#include <map>
#include <vector>

#include "bppeps/bp.hpp"

namespace bppeps {

// Per-edge overlaps and per-vertex values of the BP-normalized network.
struct BpNorm {
  std::vector<double> edge_overlap;   // I_e = tr(mu_fwd mu_bwd) per undirected edge
  std::vector<double> vertex_closure; // N^(v): site double layer closed with raw messages
  std::vector<double> vertex_value;   // Z^(v) = N^(v) * prod_n I_(v,n)^(-1/2)
  double log_z_bp = 0.0;
};

BpNorm bp_normalization(const PepsNetwork& net, const MessageSet& msgs);

// Excitation projector: Y - tr(X Y) / tr(X X') * X'.
Matrix excitation_projector_apply(const Matrix& x, const Matrix& xp, const Matrix& y);

// Single-site operators inserted between bra and ket, keyed by vertex.
using Insertions = std::map<std::size_t, Matrix>;

// Closure of the (optionally dressed) double layer of vertex v with the
// fixed-point messages on every leg; equals BpNorm::vertex_closure when o is
// null.
cplx vertex_closure_value(const PepsNetwork& net, const MessageSet& msgs, std::size_t v,
                          const Matrix* o = nullptr);

// Loop activity of the BP-normalized network. Excitation projectors sit on
// the loop edges, fixed-point messages close every other leg. `insertions`
// dresses vertices with single-site operators. With `dressed_norm` the
// dressed vertices are divided by their dressed closure (multiplicative
// convention); otherwise every vertex is divided by the bare closure
// (derivative convention).
cplx loop_activity(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                   const Loop& loop, const Insertions* insertions = nullptr,
                   bool dressed_norm = false);

}  // namespace bppeps
