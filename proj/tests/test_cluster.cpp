#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bppeps/cluster.hpp"
#include "bppeps/io.hpp"
#include "bppeps/oracle.hpp"

using namespace bppeps;

namespace {

struct Setup {
  PepsNetwork net;
  MessageSet msgs;
  BpNorm norm;
};

Setup converged(const Graph& g, double eps, std::uint64_t seed) {
  PepsNetwork net = generate_random_peps(g, 2, eps, seed);
  BpRun run = find_fixed_point(net, {1e-14, 5000});
  REQUIRE(run.converged);
  BpNorm norm = bp_normalization(net, run.messages);
  return {std::move(net), std::move(run.messages), std::move(norm)};
}

Matrix pauli_z(std::size_t d) {
  Matrix o = Matrix::identity(d);
  for (std::size_t k = d / 2; k < d; ++k) o(k, k) = -1.0;
  return o;
}

// independent Ursell oracle for a single repeated loop: the Taylor
// coefficients of log(1 + x)
double ursell_power_oracle(std::size_t k) {
  return (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k);
}

}  // namespace

TEST_CASE("ursell coefficients: frozen closed forms") {
  // two fake overlapping loops on K4
  Graph g = make_complete(4);
  auto loops = enumerate_loops(g, 4);
  REQUIRE(loops.size() >= 2);

  Cluster single{{{0, 1}}, loops[0].weight()};
  Rational phi1 = ursell(single, loops);
  CHECK(phi1.num == 1);
  CHECK(phi1.den == 1);

  for (std::size_t k = 1; k <= 5; ++k) {
    Cluster rep{{{0, k}}, k * loops[0].weight()};
    Rational phi = ursell(rep, loops);
    CHECK(phi.value() == doctest::Approx(ursell_power_oracle(k)).epsilon(1e-15));
  }

  // two distinct overlapping loops: interaction graph is a single edge
  Cluster pair{{{0, 1}, {1, 1}}, loops[0].weight() + loops[1].weight()};
  REQUIRE(loops_overlap(loops[0], loops[1]));
  Rational phi2 = ursell(pair, loops);
  CHECK(phi2.num == -1);
  CHECK(phi2.den == 1);

  CHECK(rational_to_string(phi2) == "-1/1");
}

TEST_CASE("ursell refuses oversized clusters") {
  Graph g = make_complete(3);
  auto loops = enumerate_loops(g, 3);
  Cluster huge{{{0, 13}}, 39};
  CHECK_THROWS_AS(ursell(huge, loops), std::invalid_argument);
}

TEST_CASE("cluster enumeration on K4") {
  Graph g = make_complete(4);
  auto loops = enumerate_loops(g, 4);  // 4 triangles, 3 squares
  auto clusters = enumerate_clusters(loops, 6);
  // weight <= 6: singles (7), triangle pairs (all overlap: C(4,2)=6),
  // repeated triangles (4); squares pair with nothing at weight 6 except
  // nothing (4+4 > 6), repeated squares too heavy
  std::size_t singles = 0, pairs = 0, repeats = 0;
  for (const Cluster& c : clusters) {
    if (c.items.size() == 1 && c.items[0].second == 1) ++singles;
    if (c.items.size() == 2) ++pairs;
    if (c.items.size() == 1 && c.items[0].second == 2) ++repeats;
  }
  CHECK(singles == 7);
  CHECK(pairs == 6);
  CHECK(repeats == 4);
  // ordering: nondecreasing weight
  for (std::size_t i = 1; i < clusters.size(); ++i)
    CHECK(clusters[i - 1].weight <= clusters[i].weight);
}

TEST_CASE("cluster series on K3 reproduces log(1 + Z) order by order") {
  // K3 has a single loop, so F_m - log Z_BP must be the Taylor polynomial of
  // log(1 + Z_triangle)
  Graph g = make_complete(3);
  Setup s = converged(g, 0.1, 21);
  auto loops = enumerate_loops(g, 3);
  const double z = loop_activity(s.net, s.msgs, s.norm, loops[0]).real();
  FreeEnergyReport rep = free_energy(s.net, s.msgs, s.norm, 15);
  for (std::size_t order = 1; order <= 5; ++order) {
    double taylor = 0.0;
    for (std::size_t k = 1; k <= order; ++k)
      taylor += ursell_power_oracle(k) * std::pow(z, static_cast<double>(k));
    CHECK(rep.f_by_order[3 * order - 1] - rep.log_z_bp ==
          doctest::Approx(taylor).epsilon(1e-12));
  }
  // and the full series converges to the oracle
  CHECK(rep.f_by_order.back() == doctest::Approx(exact_log_norm(s.net)).epsilon(1e-10));
}

TEST_CASE("free energy on the 2x3 torus approaches the oracle") {
  Graph g = make_grid(2, 3, true);
  Setup s = converged(g, 0.03, 7);
  const double want = exact_log_norm(s.net);
  FreeEnergyReport rep = free_energy(s.net, s.msgs, s.norm, 8);
  const double e4 = std::abs(rep.f_by_order[3] - want);
  const double e6 = std::abs(rep.f_by_order[5] - want);
  const double e8 = std::abs(rep.f_by_order[7] - want);
  CHECK(e6 <= e4 + 1e-15);
  CHECK(e8 <= e6 + 1e-15);
  // relative error of the partition function at m = 8
  CHECK(std::abs(std::expm1(rep.f_by_order[7] - want)) < 1e-4);
}

TEST_CASE("multiplicative observable matches the oracle on K3") {
  Graph g = make_complete(3);
  Setup s = converged(g, 0.05, 15);
  Insertions region{{0, pauli_z(s.net.phys_dim)}};
  OracleInsertions oregion{{0, pauli_z(s.net.phys_dim)}};
  const cplx want = exact_expectation(s.net, oregion);
  ObservableReport rep = expectation_multiplicative(s.net, s.msgs, s.norm, region, 9);
  CHECK(std::abs(rep.corrected - want) < 1e-6);
  CHECK(std::abs(rep.corrected - want) < std::abs(rep.bp_value - want) + 1e-12);
}

TEST_CASE("additive observable matches the oracle on K3") {
  Graph g = make_complete(3);
  Setup s = converged(g, 0.05, 15);
  Insertions region{{0, pauli_z(s.net.phys_dim)}};
  OracleInsertions oregion{{0, pauli_z(s.net.phys_dim)}};
  const cplx want = exact_expectation(s.net, oregion);
  ObservableReport rep = expectation_additive(s.net, s.msgs, s.norm, region, 9);
  CHECK(std::abs(rep.corrected - want) < 1e-5);
  CHECK(std::abs(rep.corrected - want) < std::abs(rep.bp_value - want) + 1e-12);
}

TEST_CASE("observables on the torus beat BP and approach the oracle") {
  Graph g = make_grid(2, 3, true);
  Setup s = converged(g, 0.03, 70);
  Insertions region{{2, pauli_z(s.net.phys_dim)}};
  OracleInsertions oregion{{2, pauli_z(s.net.phys_dim)}};
  const cplx want = exact_expectation(s.net, oregion);
  ObservableReport rep = expectation_multiplicative(s.net, s.msgs, s.norm, region, 6);
  CHECK(std::abs(rep.corrected - want) <= std::abs(rep.bp_value - want) + 1e-12);
  CHECK(std::abs(rep.corrected - want) < 1e-4);
}

TEST_CASE("correlator vanishes identically at eps=0") {
  Graph g = make_cycle(6);
  Setup s = converged(g, 0.0, 3);
  Insertions a{{0, pauli_z(s.net.phys_dim)}};
  Insertions b{{3, pauli_z(s.net.phys_dim)}};
  CorrelatorReport rep = connected_correlator(s.net, s.msgs, s.norm, a, b, 8);
  CHECK(std::abs(rep.value) < 1e-10);
  CHECK(rep.distance == 3);
}

TEST_CASE("correlator tracks the oracle on a cycle") {
  Graph g = make_cycle(4);
  Setup s = converged(g, 0.08, 19);
  Insertions a{{0, pauli_z(s.net.phys_dim)}};
  Insertions b{{2, pauli_z(s.net.phys_dim)}};
  OracleInsertions oa{{0, pauli_z(s.net.phys_dim)}};
  OracleInsertions ob{{2, pauli_z(s.net.phys_dim)}};
  const cplx want = exact_connected_correlator(s.net, oa, ob);
  CorrelatorReport rep = connected_correlator(s.net, s.msgs, s.norm, a, b, 12);
  CHECK(std::abs(rep.value - want) < 5e-3 * std::max(1.0, std::abs(want)));
  // BP alone predicts zero connected correlation; the cluster sum must get
  // the right order of magnitude
  if (std::abs(want) > 1e-8) {
    CHECK(std::abs(rep.value - want) < 0.5 * std::abs(want));
  }
}

TEST_CASE("correlator regions must not overlap") {
  Graph g = make_cycle(4);
  Setup s = converged(g, 0.05, 2);
  Insertions a{{0, pauli_z(s.net.phys_dim)}};
  CHECK_THROWS_AS(connected_correlator(s.net, s.msgs, s.norm, a, a, 4), std::invalid_argument);
}

TEST_CASE("tail bound shape") {
  CHECK(tail_bound(6.0, 4, 5.0, 3.0) == doctest::Approx(6.0 * std::exp(-10.0)).epsilon(1e-12));
  CHECK(std::isinf(tail_bound(6.0, 4, 2.0, 3.0)));
}
