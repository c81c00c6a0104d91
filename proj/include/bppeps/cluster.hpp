#pragma once

#include <cstdint>
#include <vector>

#include "bppeps/loops.hpp"

namespace bppeps {

// Multiset of loops, stored as (index into a loop list, multiplicity) with
// strictly increasing indices. Weight is the multiplicity-weighted edge
// count.
struct Cluster {
  std::vector<std::pair<std::size_t, std::size_t>> items;
  std::size_t weight = 0;
  std::size_t occurrences() const;  // sum of multiplicities
};

// Exact rational, used for Ursell coefficients.
struct Rational {
  long long num = 0;
  long long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// All clusters of total weight <= max_weight whose occurrence interaction
// graph (edges between overlapping or identical loops) is connected. Ordered
// by (weight, items).
std::vector<Cluster> enumerate_clusters(const std::vector<Loop>& loops, std::size_t max_weight);

// Ursell coefficient: (1/W!) * signed count of connected spanning edge sets
// of the interaction graph. Refuses clusters with more than 12 occurrences.
Rational ursell(const Cluster& cluster, const std::vector<Loop>& loops);

struct ExpansionTerm {
  Cluster cluster;
  Rational phi;
  cplx z_w;  // product of loop activities over the multiset
};

struct FreeEnergyReport {
  double log_z_bp = 0.0;
  std::vector<Loop> loops;
  std::vector<cplx> activities;
  std::vector<ExpansionTerm> terms;
  std::vector<double> f_by_order;   // f_by_order[k] = F_m for m = k+1
  double c_rate = 0.0;              // min over loops of -log|Z_l| / |l|
  bool c_certified = false;         // c_rate > c0
  double tail = 0.0;                // N * exp(-(c_rate - c0) * (m+1)) when certified
};

// Truncated loop-corrected free energy F_m = log Z_BP + sum_{|W| <= m} phi Z_W.
FreeEnergyReport free_energy(const PepsNetwork& net, const MessageSet& msgs, const BpNorm& norm,
                             std::size_t max_weight);

double tail_bound(double region_size, std::size_t max_weight, double c_rate, double c0);

struct ObservableReport {
  cplx bp_value;        // BP estimate of <O_A>
  cplx corrected;       // cluster-corrected estimate
  std::size_t clusters_used = 0;
  double c_rate = 0.0;
  bool c_certified = false;
  double tail = 0.0;
};

// <O_A> with multiplicative corrections: <O>_BP * exp(sum phi (Z^A_W - Z_W)),
// clusters drawn from the anchored loop family and required to touch A.
ObservableReport expectation_multiplicative(const PepsNetwork& net, const MessageSet& msgs,
                                            const BpNorm& norm, const Insertions& region,
                                            std::size_t max_weight);

// Additive variant: <O>_BP + sum phi Z_W sum_{l in W, l touches A}
// alpha_l (Z^A_l / Z_l - <O>_BP), arranged without dividing by Z_l.
ObservableReport expectation_additive(const PepsNetwork& net, const MessageSet& msgs,
                                      const BpNorm& norm, const Insertions& region,
                                      std::size_t max_weight);

struct CorrelatorReport {
  cplx value;                  // connected correlator estimate
  std::size_t clusters_used = 0;
  int distance = 0;            // graph distance between the regions
  double xi_inv = 0.0;         // certified inverse decay length, 0 if uncertified
  double envelope = 0.0;       // |A||B| exp(-distance * xi_inv) when certified
  double c_rate = 0.0;
  bool c_certified = false;
};

// Connected correlator <O_A O_B> - <O_A><O_B> in the derivative convention:
// clusters from the (A u B)-anchored family that touch both regions, expanded
// by the product rule with single- and double-insertion activities.
CorrelatorReport connected_correlator(const PepsNetwork& net, const MessageSet& msgs,
                                      const BpNorm& norm, const Insertions& region_a,
                                      const Insertions& region_b, std::size_t max_weight);

}  // namespace bppeps
