#include "bppeps/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bppeps {

std::uint64_t& MulCounter::value() {
  static std::uint64_t v = 0;
  return v;
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (std::size_t d : shape_) {
    if (d == 0) throw std::invalid_argument("tensor: zero-sized leg");
    n *= d;
  }
  data_.assign(n, cplx{0.0, 0.0});
}

Tensor Tensor::scalar(cplx v) {
  Tensor t;
  t.data_[0] = v;
  return t;
}

std::size_t Tensor::flatten(const std::vector<std::size_t>& idx) const {
  if (idx.size() != shape_.size()) throw std::invalid_argument("tensor: index rank mismatch");
  std::size_t f = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= shape_[k]) throw std::out_of_range("tensor: index out of range");
    f = f * shape_[k] + idx[k];
  }
  return f;
}

std::vector<std::size_t> Tensor::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(shape_.size());
  for (std::size_t k = shape_.size(); k-- > 0;) {
    idx[k] = flat % shape_[k];
    flat /= shape_[k];
  }
  return idx;
}

Tensor Tensor::conj() const {
  Tensor out = *this;
  for (cplx& v : out.data_) v = std::conj(v);
  return out;
}

Tensor Tensor::permuted(const std::vector<std::size_t>& perm) const {
  if (perm.size() != shape_.size()) throw std::invalid_argument("tensor: bad permutation");
  std::vector<std::size_t> new_shape(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) new_shape[k] = shape_[perm[k]];
  Tensor out(new_shape);
  // strides of the old layout
  std::vector<std::size_t> stride(shape_.size(), 1);
  for (std::size_t k = shape_.size(); k-- > 1;) stride[k - 1] = stride[k] * shape_[k];
  std::vector<std::size_t> idx(perm.size(), 0);
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::size_t old_flat = 0;
    for (std::size_t k = 0; k < perm.size(); ++k) old_flat += idx[k] * stride[perm[k]];
    out.data_[f] = data_[old_flat];
    for (std::size_t k = perm.size(); k-- > 0;) {
      if (++idx[k] < new_shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

void Tensor::scale(cplx f) {
  MulCounter::add(data_.size());
  for (cplx& v : data_) v *= f;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  const std::size_t ra = a.rank(), rb = b.rank();
  std::vector<bool> a_used(ra, false), b_used(rb, false);
  std::size_t kdim = 1;
  for (auto [la, lb] : pairs) {
    if (la >= ra || lb >= rb) throw std::invalid_argument("contract: leg out of range");
    if (a_used[la] || b_used[lb]) throw std::invalid_argument("contract: duplicate leg");
    if (a.shape()[la] != b.shape()[lb]) throw std::invalid_argument("contract: dimension mismatch");
    a_used[la] = true;
    b_used[lb] = true;
    kdim *= a.shape()[la];
  }
  std::vector<std::size_t> a_free, b_free;
  for (std::size_t k = 0; k < ra; ++k)
    if (!a_used[k]) a_free.push_back(k);
  for (std::size_t k = 0; k < rb; ++k)
    if (!b_used[k]) b_free.push_back(k);

  // permute a to (free..., contracted...) and b to (contracted..., free...)
  std::vector<std::size_t> pa = a_free, pb;
  for (auto [la, lb] : pairs) pa.push_back(la);
  for (auto [la, lb] : pairs) pb.push_back(lb);
  pb.insert(pb.end(), b_free.begin(), b_free.end());
  Tensor ap = a.permuted(pa);
  Tensor bp = b.permuted(pb);

  std::size_t m = ap.size() / kdim;
  std::size_t n = bp.size() / kdim;
  std::vector<std::size_t> out_shape;
  for (std::size_t k : a_free) out_shape.push_back(a.shape()[k]);
  for (std::size_t k : b_free) out_shape.push_back(b.shape()[k]);
  Tensor out(out_shape);
  if (out.size() != m * n) throw std::logic_error("contract: shape bookkeeping error");

  const cplx* pa_d = ap.data().data();
  const cplx* pb_d = bp.data().data();
  cplx* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < kdim; ++k) {
      const cplx aik = pa_d[i * kdim + k];
      if (aik == cplx{0.0, 0.0}) continue;
      const cplx* brow = pb_d + k * n;
      cplx* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  MulCounter::add(static_cast<std::uint64_t>(m) * kdim * n);
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::adjoint() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

cplx Matrix::trace() const {
  if (rows_ != cols_) throw std::invalid_argument("trace: not square");
  cplx t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

void Matrix::scale(cplx f) {
  MulCounter::add(data_.size());
  for (cplx& v : data_) v *= f;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  MulCounter::add(static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add: dimension mismatch");
  Matrix out = a;
  for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] += b.data()[k];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("subtract: dimension mismatch");
  Matrix out = a;
  for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] -= b.data()[k];
  return out;
}

Matrix matricize(const Tensor& t, const std::vector<std::size_t>& row_legs) {
  std::vector<bool> used(t.rank(), false);
  std::size_t rdim = 1;
  for (std::size_t k : row_legs) {
    if (k >= t.rank() || used[k]) throw std::invalid_argument("matricize: bad row legs");
    used[k] = true;
    rdim *= t.shape()[k];
  }
  std::vector<std::size_t> perm = row_legs;
  for (std::size_t k = 0; k < t.rank(); ++k)
    if (!used[k]) perm.push_back(k);
  Tensor p = t.permuted(perm);
  Matrix m(rdim, p.size() / rdim);
  m.data() = p.data();
  return m;
}

Tensor tensorize(const Matrix& m, const std::vector<std::size_t>& shape,
                 const std::vector<std::size_t>& row_legs) {
  std::vector<bool> used(shape.size(), false);
  std::vector<std::size_t> perm = row_legs;
  for (std::size_t k : row_legs) used[k] = true;
  for (std::size_t k = 0; k < shape.size(); ++k)
    if (!used[k]) perm.push_back(k);
  std::vector<std::size_t> pshape(shape.size());
  for (std::size_t k = 0; k < shape.size(); ++k) pshape[k] = shape[perm[k]];
  Tensor p(pshape);
  if (p.size() != m.rows() * m.cols()) throw std::invalid_argument("tensorize: size mismatch");
  p.data() = m.data();
  // invert the permutation
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return p.permuted(inv);
}

namespace {

// Orthonormal completion: replace near-null columns of u (flagged in dead)
// with canonical vectors orthogonalized against all live columns.
void complete_columns(Matrix& u, const std::vector<bool>& dead) {
  const std::size_t m = u.rows(), n = u.cols();
  std::size_t next_canon = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (!dead[c]) continue;
    for (; next_canon <= m; ++next_canon) {
      if (next_canon == m) throw std::runtime_error("svd: failed to complete basis");
      std::vector<cplx> v(m, cplx{0.0, 0.0});
      v[next_canon] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j == c || dead[j]) continue;
          cplx ip = 0.0;
          for (std::size_t r = 0; r < m; ++r) ip += std::conj(u(r, j)) * v[r];
          for (std::size_t r = 0; r < m; ++r) v[r] -= ip * u(r, j);
        }
        for (std::size_t j = 0; j < c; ++j) {
          if (!dead[j]) continue;  // already replaced, lives in u
          cplx ip = 0.0;
          for (std::size_t r = 0; r < m; ++r) ip += std::conj(u(r, j)) * v[r];
          for (std::size_t r = 0; r < m; ++r) v[r] -= ip * u(r, j);
        }
      }
      double nrm = 0.0;
      for (std::size_t r = 0; r < m; ++r) nrm += std::norm(v[r]);
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t r = 0; r < m; ++r) u(r, c) = v[r] / nrm;
        ++next_canon;
        break;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& a, int max_sweeps) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix b = a;                     // working columns, rotated in place
  Matrix v = Matrix::identity(n);   // accumulates right rotations
  const double tol = 1e-14;

  int sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    bool converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0;
        cplx apq = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          app += std::norm(b(r, p));
          aqq += std::norm(b(r, q));
          apq += std::conj(b(r, p)) * b(r, q);
        }
        MulCounter::add(3 * m);
        const double off = std::abs(apq);
        if (off <= tol * std::sqrt(app * aqq) || off == 0.0) continue;
        converged = false;
        const cplx phase = apq / off;
        const double zeta = (aqq - app) / (2.0 * off);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        // rotate columns p,q of b and of v: [p q] <- [p q] * R,
        // R = [[cs, sn*phase], [-sn*conj(phase), cs]]^ish chosen to kill apq
        for (std::size_t r = 0; r < m; ++r) {
          const cplx bp = b(r, p), bq = b(r, q);
          b(r, p) = cs * bp - sn * std::conj(phase) * bq;
          b(r, q) = sn * phase * bp + cs * bq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const cplx vp = v(r, p), vq = v(r, q);
          v(r, p) = cs * vp - sn * std::conj(phase) * vq;
          v(r, q) = sn * phase * vp + cs * vq;
        }
        MulCounter::add(4 * (m + n));
      }
    }
    if (converged) break;
  }
  if (sweeps == max_sweeps) throw std::runtime_error("svd: jacobi sweep limit reached");

  std::vector<double> s(n);
  std::vector<bool> dead(n, false);
  Matrix u(m, n);
  double smax = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double nrm = 0.0;
    for (std::size_t r = 0; r < m; ++r) nrm += std::norm(b(r, c));
    s[c] = std::sqrt(nrm);
    smax = std::max(smax, s[c]);
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (s[c] <= smax * 1e-300 || s[c] == 0.0) {
      dead[c] = true;
      s[c] = 0.0;
      continue;
    }
    for (std::size_t r = 0; r < m; ++r) u(r, c) = b(r, c) / s[c];
  }

  // deterministic descending sort, stable on ties
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return s[i] > s[j]; });
  SvdResult out;
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  out.s.resize(n);
  std::vector<bool> dead_sorted(n);
  for (std::size_t c = 0; c < n; ++c) {
    out.s[c] = s[order[c]];
    dead_sorted[c] = dead[order[c]];
    for (std::size_t r = 0; r < m; ++r) out.u(r, c) = u(r, order[c]);
    for (std::size_t r = 0; r < n; ++r) out.v(r, c) = v(r, order[c]);
  }
  complete_columns(out.u, dead_sorted);
  out.sweeps = sweeps;
  return out;
}

}  // namespace

SvdResult svd_jacobi(const Matrix& a, int max_sweeps) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("svd: empty matrix");
  if (a.rows() >= a.cols()) return svd_tall(a, max_sweeps);
  SvdResult r = svd_tall(a.adjoint(), max_sweeps);
  std::swap(r.u, r.v);
  return r;
}

EigResult eig_hermitian(const Matrix& a, int max_sweeps) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eig: not square");
  const std::size_t n = a.rows();
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  Matrix q = Matrix::identity(n);
  const double tol = 1e-15;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        (i == j ? diag : off) += std::norm(h(i, j));
    if (off <= tol * tol * (diag + 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t qq = p + 1; qq < n; ++qq) {
        const cplx hpq = h(p, qq);
        const double ahpq = std::abs(hpq);
        if (ahpq < 1e-300) continue;
        const double hpp = h(p, p).real(), hqq = h(qq, qq).real();
        const cplx phase = hpq / ahpq;
        const double zeta = (hqq - hpp) / (2.0 * ahpq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        // apply R^dagger H R with the same R as the svd kernel
        for (std::size_t r = 0; r < n; ++r) {  // column update H <- H R
          const cplx hp = h(r, p), hq = h(r, qq);
          h(r, p) = cs * hp - sn * std::conj(phase) * hq;
          h(r, qq) = sn * phase * hp + cs * hq;
        }
        for (std::size_t c = 0; c < n; ++c) {  // row update H <- R^dagger H
          const cplx hp = h(p, c), hq = h(qq, c);
          h(p, c) = cs * hp - sn * phase * hq;
          h(qq, c) = sn * std::conj(phase) * hp + cs * hq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const cplx qp = q(r, p), qk = q(r, qq);
          q(r, p) = cs * qp - sn * std::conj(phase) * qk;
          q(r, qq) = sn * phase * qp + cs * qk;
        }
        MulCounter::add(12 * n);
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return h(i, i).real() < h(j, j).real(); });
  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = h(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = q(r, order[c]);
  }
  return out;
}

double schatten1(const Matrix& a) {
  SvdResult r = svd_jacobi(a);
  double s = 0.0;
  for (double x : r.s) s += x;
  return s;
}

double schatten2(const Matrix& a) {
  double s = 0.0;
  for (const cplx& v : a.data()) s += std::norm(v);
  return std::sqrt(s);
}

double schatten_inf(const Matrix& a) {
  SvdResult r = svd_jacobi(a);
  return r.s.empty() ? 0.0 : r.s.front();
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (const cplx& v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace bppeps
