#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace embedlab {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats. Everything in this project is
// desk-scale (dimensions up to a few hundred), so the kernels are plain
// O(n^3) loops with no blocking or sparsity.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec a;  // rows*cols entries, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, Vec entries);

  static Matrix identity(std::size_t n);
  static Matrix diag(const Vec& d);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  std::size_t size() const { return rows * cols; }
  bool empty() const { return rows == 0 || cols == 0; }

  Matrix transpose() const;
  Vec row(std::size_t i) const;
  Vec col(std::size_t j) const;
  void set_row(std::size_t i, const Vec& r);
  void set_col(std::size_t j, const Vec& c);
  bool is_finite() const;
};

Matrix operator+(const Matrix& x, const Matrix& y);
Matrix operator-(const Matrix& x, const Matrix& y);
Matrix operator*(const Matrix& x, const Matrix& y);
Matrix operator*(double s, const Matrix& x);
Vec mat_vec(const Matrix& m, const Vec& x);

double max_abs(const Matrix& m);
double frobenius(const Matrix& m);
double trace(const Matrix& m);

// Vector helpers.
double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);
double norm_inf(const Vec& x);
Vec operator+(const Vec& x, const Vec& y);
Vec operator-(const Vec& x, const Vec& y);
Vec operator*(double s, const Vec& x);

// Symmetric eigendecomposition. eigenvalues ascending; eigenvectors' columns
// are the corresponding orthonormal basis, so m == Q diag(w) Q^T.
struct SymEig {
  Vec eigenvalues;
  Matrix eigenvectors;
};

// Cyclic Jacobi rotations. Accepts mildly asymmetric input (asymmetry up to
// 1e-9*(1+max|m|), e.g. finite-difference Hessians) and symmetrizes it first.
// Sweeps stop when the off-diagonal Frobenius norm falls below 1e-14*||m||_F;
// more than 100 sweeps raises NoConvergence.
// Errors: NonSquare, NonFinite, NoConvergence.
SymEig sym_eig(const Matrix& m);

// Kronecker product: result[(i*p+k),(j*q+l)] = x[i,j]*y[k,l] for y of shape
// p x q. Errors: NonFinite.
Matrix kron(const Matrix& x, const Matrix& y);

// Orthonormal basis of the hyperplane orthogonal to v, as the rows of a
// (k-1) x k matrix A. Built by Gram-Schmidt over the standard basis with the
// vector most aligned to v dropped, so the result is deterministic in v.
// stack(1^T, A) is invertible exactly when v . 1 != 0; the degenerate case is
// rejected rather than repaired.
// Errors: ZeroVector, DegenerateStack (v . 1 == 0).
Matrix null_space_complement(const Vec& v);

// General square solve via partially pivoted LU. rhs may carry multiple
// columns. Errors: DimMismatch, SingularMatrix.
Matrix lu_solve(const Matrix& m, const Matrix& rhs);
double lu_det(const Matrix& m);

// Cholesky solve for symmetric positive definite systems (Levenberg-Marquardt
// normal equations). Returns false if the factorization hits a non-positive
// pivot, leaving x untouched.
bool cholesky_solve(const Matrix& spd, const Vec& b, Vec& x);

}  // namespace embedlab
