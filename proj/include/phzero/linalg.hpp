#pragma once

// Dense linear-algebra kernels shared by every other module.
//
// All matrices are Eigen::MatrixXd / MatrixXcd, column-major storage.
// Every routine is a pure function of its arguments; tie-breaks (pivot rows,
// pivot columns) always go to the lowest index so runs are bit-reproducible.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phzero/errors.hpp"

namespace phzero {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Relative rank threshold used whenever the caller does not pass one.
inline constexpr double kDefaultTol = 1e-10;

inline bool all_finite(const Matrix& m) { return m.size() == 0 || m.allFinite(); }

/// Largest singular value; 0 for empty matrices.
inline double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// sigma_min / sigma_max of a square matrix (0 when singular or empty-scale).
template <typename Derived>
double reciprocal_condition(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) return 1.0;
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(m.eval());
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  if (!(smax > 0.0)) return 0.0;
  return sv(sv.size() - 1) / smax;
}

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
  const Index cols = top.rows() > 0 ? top.cols() : bottom.cols();
  Matrix out(top.rows() + bottom.rows(), cols);
  if (top.rows() > 0) out.topRows(top.rows()) = top;
  if (bottom.rows() > 0) out.bottomRows(bottom.rows()) = bottom;
  return out;
}

inline Matrix hstack(const Matrix& left, const Matrix& right) {
  const Index rows = left.cols() > 0 ? left.rows() : right.rows();
  Matrix out(rows, left.cols() + right.cols());
  if (left.cols() > 0) out.leftCols(left.cols()) = left;
  if (right.cols() > 0) out.rightCols(right.cols()) = right;
  return out;
}

// ---------------------------------------------------------------------------
// LU decomposition (echelon form, partial pivoting)
// ---------------------------------------------------------------------------

/// P·M = L·U with L unit lower triangular and U in row-echelon form.
///
/// perm[i] is the row of M that ended up in row i of P·M. pivot_cols lists the
/// columns that received a nonzero pivot, in order; rows of U below
/// pivot_cols.size() are (numerically) zero.
struct LUFactors {
  std::vector<Index> perm;
  Matrix lower;
  Matrix upper;
  std::vector<Index> pivot_cols;

  Matrix permutation_matrix() const {
    Matrix p = Matrix::Zero(static_cast<Index>(perm.size()), static_cast<Index>(perm.size()));
    for (std::size_t i = 0; i < perm.size(); ++i) p(static_cast<Index>(i), perm[i]) = 1.0;
    return p;
  }
  Index rank() const { return static_cast<Index>(pivot_cols.size()); }
};

/// Gaussian elimination with partial (row) pivoting. A column whose best pivot
/// is at most tol·max|M| is skipped, so rank deficiency shows up as trailing
/// zero rows of U instead of an error. Ties go to the lowest row index.
inline LUFactors lu_decompose(const Matrix& m, double tol = kDefaultTol) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  LUFactors f;
  f.perm.resize(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) f.perm[static_cast<std::size_t>(i)] = i;
  f.lower = Matrix::Identity(rows, rows);
  f.upper = m;
  const double scale = m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
  const double thresh = tol * scale;

  Index row = 0;
  for (Index col = 0; col < cols && row < rows; ++col) {
    Index piv = row;
    double best = std::abs(f.upper(row, col));
    for (Index i = row + 1; i < rows; ++i) {
      const double a = std::abs(f.upper(i, col));
      if (a > best) {
        best = a;
        piv = i;
      }
    }
    if (!(best > thresh) || best == 0.0) continue;
    if (piv != row) {
      f.upper.row(row).swap(f.upper.row(piv));
      std::swap(f.perm[static_cast<std::size_t>(row)], f.perm[static_cast<std::size_t>(piv)]);
      if (row > 0) f.lower.row(row).head(row).swap(f.lower.row(piv).head(row));
    }
    const double p = f.upper(row, col);
    for (Index i = row + 1; i < rows; ++i) {
      const double l = f.upper(i, col) / p;
      if (l == 0.0) continue;
      f.lower(i, row) = l;
      f.upper.row(i).tail(cols - col) -= l * f.upper.row(row).tail(cols - col);
      f.upper(i, col) = 0.0;
    }
    f.pivot_cols.push_back(col);
    ++row;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Rank and nullspace
// ---------------------------------------------------------------------------

/// Numerical rank via column-pivoted Householder QR. Diagonal entries of R at
/// or below tol·max|diag| count as zero.
inline Index rank(const Matrix& m, double tol = kDefaultTol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(tol);
  return qr.rank();
}

class Subspace;
inline Subspace nullspace_scaled(const Matrix& m, double tol, double scale);

/// A linear subspace of R^n carried as an orthonormal basis (columns).
class Subspace {
 public:
  Subspace() = default;

  /// The whole space R^n.
  static Subspace full(Index n, double tol = kDefaultTol) {
    return Subspace(n, Matrix::Identity(n, n), tol);
  }
  static Subspace zero(Index n, double tol = kDefaultTol) { return Subspace(n, Matrix(n, 0), tol); }

  /// Column span of `vectors`. Directions with singular value at or below
  /// tol·scale are dropped; scale defaults to the largest singular value.
  static Subspace span(const Matrix& vectors, double tol = kDefaultTol, double scale = -1.0) {
    const Index n = vectors.rows();
    if (vectors.cols() == 0 || n == 0) return zero(n, tol);
    Eigen::JacobiSVD<Matrix> svd(vectors, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    const double ref = scale >= 0.0 ? scale : sv(0);
    Index r = 0;
    while (r < sv.size() && sv(r) > tol * ref && sv(r) > 0.0) ++r;
    return Subspace(n, svd.matrixU().leftCols(r), tol);
  }

  Index ambient_dim() const { return ambient_; }
  Index dim() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  double tol() const { return tol_; }

  Matrix projector() const { return basis_ * basis_.transpose(); }

  /// Orthonormal basis of the orthogonal complement.
  Subspace complement() const {
    if (dim() == 0) return full(ambient_, tol_);
    return nullspace_scaled(basis_.transpose(), tol_, 1.0);
  }

  /// Distance of v from the subspace, relative to |v|.
  double relative_distance(const Vector& v) const {
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    const Vector r = v - basis_ * (basis_.transpose() * v);
    return r.norm() / nv;
  }

  bool contains(const Vector& v, double tol = 1e-9) const { return relative_distance(v) <= tol; }

  /// True when every basis vector of `other` lies in this subspace.
  bool contains(const Subspace& other, double tol = 1e-9) const {
    for (Index j = 0; j < other.dim(); ++j)
      if (!contains(Vector(other.basis().col(j)), tol)) return false;
    return true;
  }

  bool same_as(const Subspace& other, double tol = 1e-9) const {
    return ambient_ == other.ambient_ && dim() == other.dim() && contains(other, tol) &&
           other.contains(*this, tol);
  }

 private:
  Subspace(Index n, Matrix basis, double tol) : ambient_(n), basis_(std::move(basis)), tol_(tol) {
    canonicalize_signs();
  }

  // Largest-magnitude entry of each basis column made positive.
  void canonicalize_signs() {
    for (Index j = 0; j < basis_.cols(); ++j) {
      Index best = 0;
      for (Index i = 1; i < basis_.rows(); ++i)
        if (std::abs(basis_(i, j)) > std::abs(basis_(best, j)) + 1e-12) best = i;
      if (basis_.rows() > 0 && basis_(best, j) < 0.0) basis_.col(j) *= -1.0;
    }
  }

  Index ambient_ = 0;
  Matrix basis_;
  double tol_ = kDefaultTol;

  friend Subspace nullspace_scaled(const Matrix&, double, double);
};

/// Orthonormal basis of {v : |Mv| <= tol·scale·|v|}, via SVD.
inline Subspace nullspace_scaled(const Matrix& m, double tol, double scale) {
  const Index n = m.cols();
  if (n == 0) return Subspace::zero(0, tol);
  if (m.rows() == 0) return Subspace::full(n, tol);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Index r = 0;
  while (r < sv.size() && sv(r) > tol * scale && sv(r) > 0.0) ++r;
  return Subspace(n, svd.matrixV().rightCols(n - r), tol);
}

/// Orthonormal basis of {v : |Mv| <= tol·|M|·|v|}.
inline Subspace nullspace(const Matrix& m, double tol = kDefaultTol) {
  return nullspace_scaled(m, tol, norm2(m));
}

inline Subspace subspace_sum(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw ShapeError("subspace_sum: ambient dimension mismatch");
  return Subspace::span(hstack(v.basis(), w.basis()), v.tol(), 1.0);
}

/// V ∩ W as the common nullspace of the two complementary projectors.
inline Subspace subspace_intersect(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw ShapeError("subspace_intersect: ambient dimension mismatch (" +
                     std::to_string(v.ambient_dim()) + " vs " + std::to_string(w.ambient_dim()) +
                     ")");
  const Index n = v.ambient_dim();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix stacked = vstack(id - v.projector(), id - w.projector());
  return nullspace_scaled(stacked, std::max(v.tol(), w.tol()), 1.0);
}

/// Image E·V.
inline Subspace image(const Matrix& e, const Subspace& v) {
  if (e.cols() != v.ambient_dim()) throw ShapeError("image: shape mismatch");
  return Subspace::span(e * v.basis(), v.tol(), std::max(norm2(e), 1e-300));
}

/// {v : F·v ∈ W}, computed as the nullspace of (I − P_W)·F.
inline Subspace preimage(const Matrix& f, const Subspace& w) {
  if (f.rows() != w.ambient_dim())
    throw ShapeError("preimage: F has " + std::to_string(f.rows()) +
                     " rows but the target subspace lives in dimension " +
                     std::to_string(w.ambient_dim()));
  const double scale = norm2(f);
  if (scale == 0.0) return Subspace::full(f.cols(), w.tol());
  const Matrix id = Matrix::Identity(f.rows(), f.rows());
  return nullspace_scaled((id - w.projector()) * f, w.tol(), scale);
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

/// Parlett–Reinsch balancing by powers of two. Returns D⁻¹·M·D, a similarity
/// transform, so the spectrum is unchanged.
inline Matrix balance(const Matrix& m) {
  Matrix a = m;
  const Index n = a.rows();
  constexpr double radix = 2.0;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return a;
}

/// Eigenvalues of a real square matrix (balancing, Hessenberg reduction and
/// shifted QR iteration).
inline CVector eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("eigenvalues: matrix must be square");
  if (m.rows() == 0) return CVector(0);
  Eigen::EigenSolver<Matrix> es(balance(m), /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigenvalue iteration did not converge");
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& m) {
  const CVector ev = eigenvalues(m);
  double r = 0.0;
  for (Index i = 0; i < ev.size(); ++i) r = std::max(r, std::abs(ev(i)));
  return r;
}

// ---------------------------------------------------------------------------
// Block inverse through the Schur complement
// ---------------------------------------------------------------------------

struct SchurBlocks {
  Matrix x11;  ///< top-left block of T⁻¹ (split × split)
  Matrix x21;  ///< bottom-left block of T⁻¹ ((n − split) × split)
};

/// Left block column of T⁻¹ for T = [T1 T2; T3 T4] with T1 of size split:
/// X11 = T1⁻¹(I + T2·S⁻¹·T3·T1⁻¹), X21 = −S⁻¹·T3·T1⁻¹, S = T4 − T3·T1⁻¹·T2.
inline SchurBlocks schur_block_inverse(const Matrix& t, Index split, double singular_tol = 1e-14) {
  if (t.rows() != t.cols()) throw ShapeError("schur_block_inverse: T must be square");
  const Index n = t.rows();
  if (split < 0 || split > n) throw ShapeError("schur_block_inverse: split out of range");
  const Index rest = n - split;
  const Matrix t1 = t.topLeftCorner(split, split);
  const Matrix t2 = t.topRightCorner(split, rest);
  const Matrix t3 = t.bottomLeftCorner(rest, split);
  const Matrix t4 = t.bottomRightCorner(rest, rest);

  if (reciprocal_condition(t1) <= singular_tol) throw SingularMatrixError("leading block T1 is singular");
  Eigen::PartialPivLU<Matrix> t1_lu(t1);
  // X solves X·T1 = T3.
  const Matrix x = split == 0 ? Matrix(rest, 0)
                              : Matrix(Eigen::PartialPivLU<Matrix>(t1.transpose()).solve(t3.transpose()).transpose());
  const Matrix s = t4 - x * t2;
  if (reciprocal_condition(s) <= singular_tol) throw SingularMatrixError("Schur complement S is singular");
  const Matrix s_inv = rest == 0 ? Matrix(0, 0) : Matrix(s.partialPivLu().inverse());

  SchurBlocks out;
  out.x21 = -s_inv * x;
  const Matrix inner = Matrix::Identity(split, split) + t2 * s_inv * x;
  out.x11 = split == 0 ? Matrix(0, 0) : Matrix(t1_lu.solve(inner));
  return out;
}

}  // namespace phzero
