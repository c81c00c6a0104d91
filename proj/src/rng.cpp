#include "bppeps/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bppeps {

namespace {

std::uint64_t avalanche(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

std::uint64_t mix(std::uint64_t key, std::uint64_t ctr) {
  std::uint64_t x = avalanche(ctr + 0x9e3779b97f4a7c15ULL) ^ key;
  x = avalanche(x + (key << 1 | 1));
  return x;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(avalanche(seed ^ avalanche(stream + 0xa0761d6478bd642fULL))) {}

CounterRng CounterRng::split(std::uint64_t lane) const {
  CounterRng child(0, 0);
  child.key_ = avalanche(key_ + avalanche(lane ^ 0xe7037ed1a0b428dbULL));
  child.counter_ = 0;
  return child;
}

std::uint64_t CounterRng::next_u64() { return mix(key_, counter_++); }

double CounterRng::uniform() {
  // top 53 bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
  // Box-Muller, one value per call (the sine branch is discarded so the
  // stream position stays a simple function of the call count)
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

cplx CounterRng::normal_cplx() {
  const double re = normal();
  const double im = normal();
  return cplx{re, im} / std::sqrt(2.0);
}

Matrix haar_isometry(std::size_t rows, std::size_t cols, CounterRng& rng) {
  if (cols > rows) throw std::invalid_argument("haar_isometry: cols > rows");
  Matrix g(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) g(r, c) = rng.normal_cplx();
  // modified Gram-Schmidt with a reorthogonalization pass, then fix the
  // phase of the leading entry of each column so the map is Haar
  for (std::size_t c = 0; c < cols; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < c; ++j) {
        cplx ip = 0.0;
        for (std::size_t r = 0; r < rows; ++r) ip += std::conj(g(r, j)) * g(r, c);
        for (std::size_t r = 0; r < rows; ++r) g(r, c) -= ip * g(r, j);
      }
    }
    double nrm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) nrm += std::norm(g(r, c));
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) throw std::runtime_error("haar_isometry: degenerate sample");
    // R-diagonal phase fix: divide by the phase of the pre-normalization
    // projection onto the column itself (the diagonal of R is nrm * phase of
    // the first nonzero pivot); use the phase of g(c, c) when square-ish.
    cplx pivot = g(std::min(c, rows - 1), c);
    cplx phase = std::abs(pivot) > 1e-300 ? pivot / std::abs(pivot) : cplx{1.0, 0.0};
    for (std::size_t r = 0; r < rows; ++r) g(r, c) /= nrm * phase;
  }
  return g;
}

}  // namespace bppeps
