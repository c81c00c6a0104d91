#pragma once

#include <map>

#include "bppeps/peps.hpp"

namespace bppeps {

// Exact contraction of the double-layer network, intentionally independent of
// the approximation modules: two algorithms with hand-rolled loops that share
// no contraction code with bp/loop/cluster engines.
//
// Values are <psi|psi> (or <psi|O|psi> with insertions), not normalized.

using OracleInsertions = std::map<std::size_t, Matrix>;  // vertex -> single-site operator

// Enumerates every bond configuration of ket and bra indices: D^(2|E|) terms.
cplx oracle_enumerate(const PepsNetwork& net, const OracleInsertions* ins = nullptr);

// Sequential vertex elimination over the doubled bonds.
cplx oracle_sequential(const PepsNetwork& net, const OracleInsertions* ins = nullptr);

// Runs both, checks 1e-10 relative agreement, returns the sequential value.
// Throws if the enumeration budget D^(2|E|) * N exceeds ~2e9.
cplx exact_contraction(const PepsNetwork& net, const OracleInsertions* ins = nullptr);

double exact_log_norm(const PepsNetwork& net);
cplx exact_expectation(const PepsNetwork& net, const OracleInsertions& region);
cplx exact_connected_correlator(const PepsNetwork& net, const OracleInsertions& region_a,
                                const OracleInsertions& region_b);

}  // namespace bppeps
