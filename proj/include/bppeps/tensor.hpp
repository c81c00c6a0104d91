#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace bppeps {

using cplx = std::complex<double>;

// Global multiply counter used for work accounting in the incremental-update
// experiments. Counts scalar complex multiplications performed by the dense
// kernels below. Not thread safe; the engines are sequential.
struct MulCounter {
  static std::uint64_t& value();
  static void add(std::uint64_t n) { value() += n; }
  static std::uint64_t read() { return value(); }
  static void reset() { value() = 0; }
};

// Dense complex tensor, row-major, arbitrary rank. Rank 0 is a scalar.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, cplx{0.0, 0.0}) {}
  explicit Tensor(std::vector<std::size_t> shape);
  static Tensor scalar(cplx v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  cplx& operator[](std::size_t flat) { return data_[flat]; }
  const cplx& operator[](std::size_t flat) const { return data_[flat]; }
  cplx& at(const std::vector<std::size_t>& idx) { return data_[flatten(idx)]; }
  const cplx& at(const std::vector<std::size_t>& idx) const { return data_[flatten(idx)]; }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  std::size_t flatten(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  Tensor conj() const;
  Tensor permuted(const std::vector<std::size_t>& perm) const;  // new leg k = old leg perm[k]
  void scale(cplx f);

 private:
  std::vector<std::size_t> shape_;
  std::vector<cplx> data_;
};

// Contract over the given leg pairs (a_leg, b_leg). Remaining legs of a in
// order, then remaining legs of b. Paired dimensions must match.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

// Dense complex matrix, row-major.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  Matrix adjoint() const;
  Matrix transpose() const;
  cplx trace() const;
  void scale(cplx f);

 private:
  std::size_t rows_, cols_;
  std::vector<cplx> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);

// Reshape t into a matrix whose rows are the fused legs in row_legs (in the
// given order) and whose columns are the remaining legs in ascending order.
Matrix matricize(const Tensor& t, const std::vector<std::size_t>& row_legs);
Tensor tensorize(const Matrix& m, const std::vector<std::size_t>& shape,
                 const std::vector<std::size_t>& row_legs);

struct SvdResult {
  Matrix u;               // m x k, orthonormal columns
  std::vector<double> s;  // k singular values, descending
  Matrix v;               // n x k, orthonormal columns; a = u diag(s) v^dagger
  int sweeps = 0;
};

// Deterministic one-sided Jacobi SVD (thin). Fixed cyclic pivot order, fixed
// convergence threshold, no pivot-size reordering, so results are bit-stable
// across runs given identical input.
SvdResult svd_jacobi(const Matrix& a, int max_sweeps = 64);

struct EigResult {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

// Cyclic two-sided Jacobi for Hermitian matrices (input is hermitized first).
EigResult eig_hermitian(const Matrix& a, int max_sweeps = 64);

double schatten1(const Matrix& a);  // trace norm
double schatten2(const Matrix& a);  // Frobenius
double schatten_inf(const Matrix& a);  // operator norm
double max_abs(const Matrix& a);

}  // namespace bppeps
