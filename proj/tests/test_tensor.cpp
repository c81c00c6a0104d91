#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bppeps/rng.hpp"
#include "bppeps/tensor.hpp"

using namespace bppeps;

namespace {

// independent contraction oracle: raw nested index loops, no shared code path
cplx contract_oracle_entry(const Tensor& a, const Tensor& b,
                           const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                           const std::vector<std::size_t>& out_idx) {
  std::vector<std::size_t> a_free, b_free;
  std::vector<bool> au(a.rank(), false), bu(b.rank(), false);
  for (auto [x, y] : pairs) {
    au[x] = true;
    bu[y] = true;
  }
  for (std::size_t k = 0; k < a.rank(); ++k)
    if (!au[k]) a_free.push_back(k);
  for (std::size_t k = 0; k < b.rank(); ++k)
    if (!bu[k]) b_free.push_back(k);

  std::size_t kdim = 1;
  for (auto [x, y] : pairs) kdim *= a.shape()[x];
  cplx acc = 0.0;
  for (std::size_t kk = 0; kk < kdim; ++kk) {
    std::vector<std::size_t> ia(a.rank()), ib(b.rank());
    std::size_t rem = kk;
    for (std::size_t p = pairs.size(); p-- > 0;) {
      const std::size_t dim = a.shape()[pairs[p].first];
      ia[pairs[p].first] = ib[pairs[p].second] = rem % dim;
      rem /= dim;
    }
    for (std::size_t k = 0; k < a_free.size(); ++k) ia[a_free[k]] = out_idx[k];
    for (std::size_t k = 0; k < b_free.size(); ++k) ib[b_free[k]] = out_idx[a_free.size() + k];
    acc += a.at(ia) * b.at(ib);
  }
  return acc;
}

Matrix random_matrix(std::size_t r, std::size_t c, CounterRng& rng) {
  Matrix m(r, c);
  for (auto& x : m.data()) x = rng.normal_cplx();
  return m;
}

}  // namespace

TEST_CASE("flatten and unflatten round trip") {
  Tensor t({2, 3, 4});
  for (std::size_t f = 0; f < t.size(); ++f) CHECK(t.flatten(t.unflatten(f)) == f);
  CHECK(t.flatten({1, 2, 3}) == 23);
}

TEST_CASE("permutation moves entries correctly") {
  Tensor t({2, 3});
  for (std::size_t f = 0; f < t.size(); ++f) t[f] = cplx(static_cast<double>(f), 0.0);
  Tensor p = t.permuted({1, 0});
  REQUIRE(p.shape() == std::vector<std::size_t>{3, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(p.at({j, i}) == t.at({i, j}));
}

TEST_CASE("contract agrees with the brute-force oracle") {
  CounterRng rng(42);
  Tensor a({2, 3, 2});
  Tensor b({3, 4, 2});
  for (auto& x : a.data()) x = rng.normal_cplx();
  for (auto& x : b.data()) x = rng.normal_cplx();
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{1, 0}, {2, 2}};
  Tensor c = contract(a, b, pairs);
  REQUIRE(c.shape() == std::vector<std::size_t>{2, 4});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const cplx want = contract_oracle_entry(a, b, pairs, {i, j});
      CHECK(std::abs(c.at({i, j}) - want) < 1e-12);
    }
}

TEST_CASE("outer product via empty pair list") {
  Tensor a({2}), b({3});
  a.at({0}) = 1.0;
  a.at({1}) = 2.0;
  b.at({0}) = 5.0;
  b.at({1}) = 7.0;
  b.at({2}) = 11.0;
  Tensor c = contract(a, b, {});
  CHECK(std::abs(c.at({1, 2}) - cplx(22.0, 0.0)) < 1e-15);
}

TEST_CASE("matricize/tensorize round trip") {
  CounterRng rng(7);
  Tensor t({2, 3, 4});
  for (auto& x : t.data()) x = rng.normal_cplx();
  Matrix m = matricize(t, {1});
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 8);
  Tensor back = tensorize(m, t.shape(), {1});
  for (std::size_t f = 0; f < t.size(); ++f) CHECK(t[f] == back[f]);
  // entry check against direct indexing
  CHECK(m(2, 1 * 4 + 3) == t.at({1, 2, 3}));
}

TEST_CASE("svd of a frozen diagonal matrix") {
  Matrix a(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = -4.0;
  SvdResult r = svd_jacobi(a);
  CHECK(r.s[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.s[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("svd reconstruction and orthogonality, tall and wide") {
  CounterRng rng(123);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{6, 4}, {4, 6}, {8, 8}, {5, 1}}) {
    Matrix a = random_matrix(m, n, rng);
    SvdResult r = svd_jacobi(a);
    const std::size_t k = r.s.size();
    REQUIRE(k == std::min(m, n));
    // descending
    for (std::size_t i = 1; i < k; ++i) CHECK(r.s[i - 1] >= r.s[i]);
    // reconstruction
    Matrix rec(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) acc += r.u(i, c) * r.s[c] * std::conj(r.v(j, c));
        rec(i, j) = acc;
      }
    CHECK(max_abs(subtract(rec, a)) < 1e-10);
    // orthonormal factors
    CHECK(max_abs(subtract(multiply(r.u.adjoint(), r.u), Matrix::identity(k))) < 1e-10);
    CHECK(max_abs(subtract(multiply(r.v.adjoint(), r.v), Matrix::identity(k))) < 1e-10);
  }
}

TEST_CASE("svd handles rank deficiency with an orthonormal completion") {
  Matrix a(4, 3);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;  // third column zero
  SvdResult r = svd_jacobi(a);
  CHECK(r.s[2] == doctest::Approx(0.0));
  CHECK(max_abs(subtract(multiply(r.u.adjoint(), r.u), Matrix::identity(3))) < 1e-10);
}

TEST_CASE("svd singular values match the Gram-matrix eigenvalues") {
  CounterRng rng(99);
  Matrix a = random_matrix(7, 5, rng);
  SvdResult r = svd_jacobi(a);
  EigResult e = eig_hermitian(multiply(a.adjoint(), a));
  for (std::size_t i = 0; i < 5; ++i) {
    const double want = std::sqrt(std::max(e.values[4 - i], 0.0));
    CHECK(r.s[i] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("svd is deterministic bit for bit") {
  CounterRng rng(5);
  Matrix a = random_matrix(6, 6, rng);
  SvdResult r1 = svd_jacobi(a);
  SvdResult r2 = svd_jacobi(a);
  CHECK(r1.s == r2.s);
  CHECK(r1.u.data() == r2.u.data());
  CHECK(r1.v.data() == r2.v.data());
}

TEST_CASE("hermitian eigensolver on a frozen 2x2") {
  // [[1, i], [-i, 1]] has eigenvalues 0 and 2
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = cplx(0.0, 1.0);
  a(1, 0) = cplx(0.0, -1.0);
  a(1, 1) = 1.0;
  EigResult e = eig_hermitian(a);
  CHECK(e.values[0] == doctest::Approx(0.0));
  CHECK(e.values[1] == doctest::Approx(2.0));
  // eigenvector property
  for (std::size_t c = 0; c < 2; ++c) {
    Matrix v(2, 1);
    v(0, 0) = e.vectors(0, c);
    v(1, 0) = e.vectors(1, c);
    Matrix av = multiply(a, v);
    CHECK(std::abs(av(0, 0) - e.values[c] * v(0, 0)) < 1e-12);
    CHECK(std::abs(av(1, 0) - e.values[c] * v(1, 0)) < 1e-12);
  }
}

TEST_CASE("schatten norms on a frozen matrix") {
  Matrix a(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 4.0;
  CHECK(schatten1(a) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(schatten2(a) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(schatten_inf(a) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("multiply counter accumulates") {
  MulCounter::reset();
  CounterRng rng(1);
  Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 5, rng);
  multiply(a, b);
  CHECK(MulCounter::read() >= 60);
}
