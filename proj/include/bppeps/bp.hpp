#pragma once

#include <cstdint>
#include <vector>

#include "bppeps/peps.hpp"

namespace bppeps {

// One D x D message per directed edge, indexed by Graph::directed ids.
// Messages are Hermitian, PSD up to the repair tolerance, unit trace.
using MessageSet = std::vector<Matrix>;

MessageSet uniform_messages(const PepsNetwork& net);

struct RepairStats {
  std::uint64_t clip_events = 0;    // eigenvalues below the clip threshold
  double worst_negative = 0.0;      // most negative eigenvalue seen
};

// Normalized message map output for directed edge d (src -> dst):
// f = Phi_{(src,dst)}(tensor of incoming messages), then hermitize, clip
// negative eigenvalues, renormalize to unit trace.
Matrix bp_update_edge(const PepsNetwork& net, const MessageSet& msgs, std::size_t d,
                      RepairStats* repair = nullptr);

// One synchronous sweep: every directed edge updated from the previous set.
MessageSet bp_sweep(const PepsNetwork& net, const MessageSet& msgs, RepairStats* repair = nullptr);

struct BpOptions {
  double tol = 1e-12;       // max over edges of the trace-norm step
  int max_iters = 5000;
};

struct BpRun {
  MessageSet messages;
  bool converged = false;
  int iters = 0;
  std::vector<double> deltas;   // per-iteration max trace-norm step
  RepairStats repair;
};

double message_distance(const MessageSet& a, const MessageSet& b);  // max trace norm

BpRun find_fixed_point(const PepsNetwork& net, const BpOptions& opts = {});
BpRun find_fixed_point_from(const PepsNetwork& net, MessageSet start, const BpOptions& opts = {});

struct Thresholds {
  double eps_star;      // BP contraction threshold 1/(2*Delta - 1)
  double q;             // contraction factor 2*(Delta-1)*eps/(1-eps)
  double c0;            // cluster entropy constant log(2*e*Delta) + 1/2
  double eta;           // excitation strength 2*D^(2-Delta/2)*(D+2)*eps
  double eps_dstar;     // series convergence threshold
  double xi_star_inv;   // log(eps_star/eps), 0 if eps >= eps_star
};

Thresholds compute_thresholds(std::size_t bond_dim, std::size_t max_degree, double eps);

}  // namespace bppeps
