#include "embedlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embedlab/errors.hpp"

namespace embedlab {

Matrix::Matrix(std::size_t r, std::size_t c, Vec entries)
    : rows(r), cols(c), a(std::move(entries)) {
  if (a.size() != rows * cols) fail("DimMismatch", "entry count does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(const Vec& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
  Matrix m(rws.size(), rws.size() ? rws.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& r : rws) {
    if (r.size() != m.cols) fail("DimMismatch", "ragged row list");
    std::size_t j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vec Matrix::row(std::size_t i) const {
  return Vec(a.begin() + static_cast<std::ptrdiff_t>(i * cols),
             a.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
}

Vec Matrix::col(std::size_t j) const {
  Vec c(rows);
  for (std::size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_row(std::size_t i, const Vec& r) {
  if (r.size() != cols) fail("DimMismatch", "row length mismatch");
  std::copy(r.begin(), r.end(), a.begin() + static_cast<std::ptrdiff_t>(i * cols));
}

void Matrix::set_col(std::size_t j, const Vec& c) {
  if (c.size() != rows) fail("DimMismatch", "column length mismatch");
  for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = c[i];
}

bool Matrix::is_finite() const {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator+(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) fail("DimMismatch", "matrix add");
  Matrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

Matrix operator-(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols) fail("DimMismatch", "matrix sub");
  Matrix r = x;
  for (std::size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) fail("DimMismatch", "matrix product");
  Matrix r(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < x.cols; ++k) {
      double xik = x(i, k);
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

Matrix operator*(double s, const Matrix& x) {
  Matrix r = x;
  for (double& e : r.a) e *= s;
  return r;
}

Vec mat_vec(const Matrix& m, const Vec& x) {
  if (m.cols != x.size()) fail("DimMismatch", "matrix-vector product");
  Vec r(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double x : m.a) r = std::max(r, std::fabs(x));
  return r;
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double x : m.a) s += x * x;
  return std::sqrt(s);
}

double trace(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows, m.cols); ++i) s += m(i, i);
  return s;
}

double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) fail("DimMismatch", "dot product");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

double norm_inf(const Vec& x) {
  double r = 0.0;
  for (double e : x) r = std::max(r, std::fabs(e));
  return r;
}

Vec operator+(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) fail("DimMismatch", "vector add");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vec operator-(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) fail("DimMismatch", "vector sub");
  Vec r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

Vec operator*(double s, const Vec& x) {
  Vec r = x;
  for (double& e : r) e *= s;
  return r;
}

namespace {

double off_diagonal_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace

SymEig sym_eig(const Matrix& m) {
  if (m.rows != m.cols) fail("NonSquare", "sym_eig requires a square matrix");
  if (!m.is_finite()) fail("NonFinite", "sym_eig input has non-finite entries");
  const std::size_t n = m.rows;

  double scale = max_abs(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(m(i, j) - m(j, i)) > 1e-9 * (1.0 + scale))
        fail("NonSquare", "sym_eig input is not symmetric");

  Matrix A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix V = Matrix::identity(n);

  const double threshold = 1e-14 * frobenius(A);
  bool converged = off_diagonal_norm(A) <= threshold;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = A(p, q);
        if (apq == 0.0) continue;
        double taueig = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t = (taueig >= 0.0)
                       ? 1.0 / (taueig + std::sqrt(1.0 + taueig * taueig))
                       : 1.0 / (taueig - std::sqrt(1.0 + taueig * taueig));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;

        double app = A(p, p), aqq = A(q, q);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = A(p, k) = c * akp - s * akq;
          A(k, q) = A(q, k) = s * akp + c * akq;
        }
        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = A(q, p) = 0.0;

        for (std::size_t k = 0; k < n; ++k) {
          double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_diagonal_norm(A) <= threshold;
  }
  if (!converged) fail("NoConvergence", "Jacobi sweeps exceeded the cap of 100");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return A(i, i) < A(j, j); });

  SymEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = A(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = V(i, order[j]);
  }
  return out;
}

Matrix kron(const Matrix& x, const Matrix& y) {
  if (!x.is_finite() || !y.is_finite()) fail("NonFinite", "kron input has non-finite entries");
  Matrix r(x.rows * y.rows, x.cols * y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      double xij = x(i, j);
      for (std::size_t k = 0; k < y.rows; ++k)
        for (std::size_t l = 0; l < y.cols; ++l)
          r(i * y.rows + k, j * y.cols + l) = xij * y(k, l);
    }
  return r;
}

Matrix null_space_complement(const Vec& v) {
  const std::size_t k = v.size();
  if (k == 0) fail("ZeroVector", "empty vector");
  double nv = norm2(v);
  if (!(nv > 0.0) || !std::isfinite(nv)) fail("ZeroVector", "vector has zero norm");

  double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (std::fabs(sum) <= 1e-12 * (1.0 + norm_inf(v)))
    fail("DegenerateStack", "v . 1 == 0, so stacking the all-ones row cannot be invertible");

  Vec u = (1.0 / nv) * v;
  std::size_t drop = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (std::fabs(u[i]) > std::fabs(u[drop])) drop = i;

  Matrix A(k - 1, k);
  std::size_t r = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (i == drop) continue;
    Vec e(k, 0.0);
    e[i] = 1.0;
    // Two Gram-Schmidt passes keep the rows orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      double cu = dot(e, u);
      for (std::size_t j = 0; j < k; ++j) e[j] -= cu * u[j];
      for (std::size_t p = 0; p < r; ++p) {
        Vec prev = A.row(p);
        double cp = dot(e, prev);
        for (std::size_t j = 0; j < k; ++j) e[j] -= cp * prev[j];
      }
    }
    double ne = norm2(e);
    if (ne < 1e-8) fail("DegenerateStack", "basis collapsed during orthogonalization");
    A.set_row(r++, (1.0 / ne) * e);
  }
  return A;
}

Matrix lu_solve(const Matrix& m, const Matrix& rhs) {
  if (m.rows != m.cols) fail("DimMismatch", "lu_solve requires a square matrix");
  if (m.rows != rhs.rows) fail("DimMismatch", "lu_solve rhs row count");
  const std::size_t n = m.rows;
  Matrix lu = m;
  Matrix x = rhs;

  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::fabs(lu(i, c)) > std::fabs(lu(piv, c))) piv = i;
    if (std::fabs(lu(piv, c)) < 1e-300) fail("SingularMatrix", "pivot vanished in LU");
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(c, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols; ++j) std::swap(x(c, j), x(piv, j));
    }
    for (std::size_t i = c + 1; i < n; ++i) {
      double f = lu(i, c) / lu(c, c);
      lu(i, c) = 0.0;
      if (f == 0.0) continue;
      for (std::size_t j = c + 1; j < n; ++j) lu(i, j) -= f * lu(c, j);
      for (std::size_t j = 0; j < x.cols; ++j) x(i, j) -= f * x(c, j);
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      double s = x(ii, j);
      for (std::size_t kk = ii + 1; kk < n; ++kk) s -= lu(ii, kk) * x(kk, j);
      x(ii, j) = s / lu(ii, ii);
    }
  }
  return x;
}

double lu_det(const Matrix& m) {
  if (m.rows != m.cols) fail("DimMismatch", "lu_det requires a square matrix");
  const std::size_t n = m.rows;
  Matrix lu = m;
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::fabs(lu(i, c)) > std::fabs(lu(piv, c))) piv = i;
    if (lu(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(c, j), lu(piv, j));
      det = -det;
    }
    det *= lu(c, c);
    for (std::size_t i = c + 1; i < n; ++i) {
      double f = lu(i, c) / lu(c, c);
      for (std::size_t j = c; j < n; ++j) lu(i, j) -= f * lu(c, j);
    }
  }
  return det;
}

bool cholesky_solve(const Matrix& spd, const Vec& b, Vec& x) {
  if (spd.rows != spd.cols || spd.rows != b.size()) fail("DimMismatch", "cholesky_solve");
  const std::size_t n = spd.rows;
  Matrix L(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = spd(i, j);
      for (std::size_t kk = 0; kk < j; ++kk) s -= L(i, kk) * L(j, kk);
      if (i == j) {
        if (!(s > 0.0)) return false;
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= L(i, j) * y[j];
    y[i] = s / L(i, i);
  }
  x.assign(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= L(j, ii) * x[j];
    x[ii] = s / L(ii, ii);
  }
  return true;
}

}  // namespace embedlab
