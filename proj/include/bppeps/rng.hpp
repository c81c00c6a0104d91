#pragma once

#include <cstdint>
#include <string>

#include "bppeps/tensor.hpp"

namespace bppeps {

// Counter-based splittable generator. Output t is a fixed 64-bit mix of
// (key, counter), so a stream is a pure function of (seed, split path,
// counter) and identical on every platform. The mix is the xxhash/splitmix
// style avalanche used twice with distinct round constants.
class CounterRng {
 public:
  static constexpr const char* kName = "bppeps-ctr";
  static constexpr int kVersion = 1;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  // Child generator for an independent lane; never overlaps the parent.
  CounterRng split(std::uint64_t lane) const;

  std::uint64_t next_u64();
  double uniform();    // [0, 1)
  double normal();     // standard normal, Box-Muller
  cplx normal_cplx();  // (normal + i normal) / sqrt(2)

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// QR-based Haar unitary / isometry with phase-fixed diagonal, rows x cols,
// cols <= rows. Columns are orthonormal; cols == rows gives a Haar unitary.
Matrix haar_isometry(std::size_t rows, std::size_t cols, CounterRng& rng);

}  // namespace bppeps
