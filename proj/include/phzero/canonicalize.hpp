#pragma once

// Constant-coefficient diagonalization, reflection of rightward channels and
// commensurate-speed splitting into the uniform-speed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "phzero/linalg.hpp"
#include "phzero/model.hpp"

namespace phzero {

struct DiagonalizedConstant {
  Matrix Delta;  // diagonal, descending: positive speeds first
  Matrix S;      // z = S x
  Index k_pos = 0;
  Index l_neg = 0;
};

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

/// Continued-fraction approximation of x > 0 with den ≤ max_den; fails unless
/// |x − num/den| ≤ tol·x.
inline bool rationalize(double x, Rational& out, double tol = 1e-10, std::int64_t max_den = 1000000) {
  if (!(x > 0.0) || !std::isfinite(x)) return false;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(r);
    if (fl > 1e15) return false;
    const auto a = static_cast<std::int64_t>(fl);
    const std::int64_t h2 = a * h1 + h0;
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2;
    k0 = k1; k1 = k2;
    if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol * x) {
      out = {h1, k1};
      return h1 > 0;
    }
    const double frac = r - fl;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
  }
  if (k1 > 0 && h1 > 0 && std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= tol * x) {
    out = {h1, k1};
    return true;
  }
  return false;
}

/// Diagonalizes P1·H for constant H and rewrites the boundary rows, which act
/// on [(Hx)(1); (Hx)(0)], in characteristic coordinates z = S x. Speeds are
/// stored as rational multiples of the slowest speed magnitude.
inline std::pair<DiagonalizedConstant, MultiSpeedSystem> diagonalize_constant(const RawConstantSystem& raw,
                                                                             double tol = kDefaultTol) {
  const Index n = raw.n;
  if (n < 1) throw ShapeError("diagonalize_constant: n must be at least 1");
  auto need = [](const Matrix& a, Index r, Index c, const char* name) {
    if (a.rows() != r || a.cols() != c)
      throw ShapeError(std::string("diagonalize_constant: ") + name + " has wrong shape");
  };
  need(raw.P1, n, n, "P1");
  need(raw.H, n, n, "H");
  if (raw.WB1.cols() != 2 * n || raw.WB2.cols() != 2 * n || raw.WC.cols() != 2 * n)
    throw ShapeError("diagonalize_constant: boundary rows must have 2n columns");
  if (raw.WB1.rows() + raw.WB2.rows() != n) throw ShapeError("diagonalize_constant: [WB1; WB2] must have n rows");
  if (raw.WC.rows() != raw.WB2.rows()) throw ShapeError("diagonalize_constant: WC must have as many rows as WB2");
  if (!all_finite(raw.P1) || !all_finite(raw.H) || !all_finite(raw.WB1) || !all_finite(raw.WB2) || !all_finite(raw.WC))
    throw ShapeError("diagonalize_constant: non-finite entry");

  const double pscale = std::max(norm2(raw.P1), 1e-300);
  if ((raw.P1 - raw.P1.transpose()).norm() > tol * pscale)
    throw PreconditionError("diagonalize_constant: P1 is not symmetric (complex eigenvalues possible)");
  if ((raw.H - raw.H.transpose()).norm() > tol * std::max(norm2(raw.H), 1e-300))
    throw PreconditionError("diagonalize_constant: H is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> hsolver(raw.H);
  if (hsolver.info() != Eigen::Success || hsolver.eigenvalues().minCoeff() <= 0.0)
    throw PreconditionError("diagonalize_constant: H is not positive definite");
  const Matrix hsqrt = hsolver.operatorSqrt();
  const Matrix hinvsqrt = hsolver.operatorInverseSqrt();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(hsqrt * raw.P1 * hsqrt);
  if (solver.info() != Eigen::Success) throw NumericalError("diagonalize_constant: eigensolver failed");
  const Vector ev_asc = solver.eigenvalues();
  const double emax = ev_asc.cwiseAbs().maxCoeff();
  Vector ev(n);
  Matrix q(n, n);
  for (Index i = 0; i < n; ++i) {
    ev(i) = ev_asc(n - 1 - i);
    q.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  for (Index i = 0; i < n; ++i)
    if (std::abs(ev(i)) <= tol * std::max(emax, 1.0))
      throw PreconditionError("diagonalize_constant: zero wave speed (P1 H is singular)");

  DiagonalizedConstant dc;
  dc.Delta = ev.asDiagonal();
  dc.S = q.transpose() * hsqrt;
  const Matrix s_inv = hinvsqrt * q;
  for (Index i = 0; i < n; ++i) (ev(i) > 0 ? dc.k_pos : dc.l_neg) += 1;

  const Matrix p1h = raw.P1 * raw.H;
  const double resid = (dc.S * p1h - dc.Delta * dc.S).norm();
  if (resid > 1e-10 * std::max(norm2(p1h), 1.0))
    throw NumericalError("diagonalize_constant: reconstruction residual too large");

  MultiSpeedSystem ms;
  ms.n = n;
  ms.m = raw.WB2.rows();
  const double slowest = ev.cwiseAbs().minCoeff();
  ms.speed_scale = slowest;
  for (Index i = 0; i < n; ++i) {
    Rational r;
    if (!rationalize(std::abs(ev(i)) / slowest, r))
      throw PreconditionError("diagonalize_constant: wave speeds are not commensurate within tolerance");
    ms.speeds.emplace_back(r.num, r.den, ev(i) > 0 ? 1 : -1);
  }
  // ∂z/∂t = Δ ∂z/∂ζ with z = S x; Hx = H S⁻¹ z.
  const Matrix to_z = raw.H * s_inv;
  const Matrix wb = vstack(raw.WB1, raw.WB2);
  ms.K = wb.rightCols(n) * to_z;
  ms.L = wb.leftCols(n) * to_z;
  ms.Ky = raw.WC.rightCols(n) * to_z;
  ms.Ly = raw.WC.leftCols(n) * to_z;
  return {dc, ms};
}

/// Maps every direction +1 channel to z̃(ζ) = z(1 − ζ), swapping its K/L and
/// Ky/Ly columns.
inline MultiSpeedSystem reflect_positive(const MultiSpeedSystem& sys) {
  MultiSpeedSystem out = sys;
  for (Index j = 0; j < sys.n; ++j) {
    auto& sp = out.speeds[static_cast<std::size_t>(j)];
    if (sp.direction != 1) continue;
    sp.direction = -1;
    out.K.col(j) = sys.L.col(j);
    out.L.col(j) = sys.K.col(j);
    out.Ky.col(j) = sys.Ly.col(j);
    out.Ly.col(j) = sys.Ky.col(j);
  }
  return out;
}

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw PreconditionError("split: overflowing speed ratios");
  return r;
}

}  // namespace detail

/// Travel times t_i = den_i/num_i written as r_i·g with g the exact rational gcd.
struct CommensurateGrid {
  Rational g;                  // common travel time in units of 1/speed_scale
  std::vector<Index> r;        // segments per channel
  double p = 1.0;              // g / speed_scale
  Index total() const { return std::accumulate(r.begin(), r.end(), Index{0}); }
};

inline CommensurateGrid commensurate_grid(const MultiSpeedSystem& sys, Index max_channels = 100000) {
  // gcd(a1/b1, a2/b2, …) = gcd(a…)/lcm(b…) for reduced fractions a_i/b_i = den_i/num_i.
  std::int64_t gnum = 0, glcm = 1;
  for (const auto& sp : sys.speeds) {
    gnum = std::gcd(gnum, sp.den);
    glcm = detail::checked_mul(glcm / std::gcd(glcm, sp.num), sp.num);
  }
  CommensurateGrid grid;
  grid.g = {gnum, glcm};
  Index total = 0;
  for (const auto& sp : sys.speeds) {
    // r = (den/num)/(gnum/glcm) = den·glcm/(num·gnum)
    const std::int64_t top = detail::checked_mul(sp.den / gnum, glcm / sp.num);
    if (top > max_channels) throw PreconditionError("split: overflowing speed ratios (too many segments)");
    grid.r.push_back(static_cast<Index>(top));
    total += static_cast<Index>(top);
    if (total > max_channels) throw PreconditionError("split: overflowing speed ratios (too many segments)");
  }
  grid.p = static_cast<double>(gnum) / static_cast<double>(glcm) / sys.speed_scale;
  return grid;
}

/// Slot of segment j (1-based, source to sink) of channel i in the split
/// system. The sink segment keeps the original slot; the others follow all
/// original channels, channel by channel.
struct SegmentLayout {
  std::vector<Index> r;
  std::vector<Index> first_extra;  // slot of segment 1 when r_i > 1
  Index total = 0;

  Index slot(Index channel, Index segment) const {
    const auto c = static_cast<std::size_t>(channel);
    if (segment == r[c]) return channel;
    return first_extra[c] + segment - 1;
  }
};

inline SegmentLayout segment_layout(const std::vector<Index>& r) {
  SegmentLayout lay;
  lay.r = r;
  Index next = static_cast<Index>(r.size());
  for (Index ri : r) {
    lay.first_extra.push_back(next);
    next += ri - 1;
  }
  lay.total = next;
  return lay;
}

/// Splits every channel into r_i segments of common travel time p. Rows:
/// original constraint rows, segment-chaining rows seg_{j+1}(0) = seg_j(1),
/// then input rows.
inline PHSystem split_commensurate(const MultiSpeedSystem& sys) {
  {
    const auto f = structural_findings(sys);
    if (!f.empty()) throw ShapeError("split: " + f.front().message);
  }
  for (const auto& sp : sys.speeds)
    if (sp.direction != -1) throw PreconditionError("split: rightward channel present (apply reflect_positive first)");
  const CommensurateGrid grid = commensurate_grid(sys);
  const SegmentLayout lay = segment_layout(grid.r);
  const Index n = sys.n, m = sys.m, c = n - m, np = lay.total;

  Matrix K = Matrix::Zero(np - m, np), L = Matrix::Zero(np - m, np);
  Matrix Ku = Matrix::Zero(m, np), Lu = Matrix::Zero(m, np);
  Matrix Ky = Matrix::Zero(m, np), Ly = Matrix::Zero(m, np);
  for (Index i = 0; i < n; ++i) {
    const Index first = lay.slot(i, 1);
    const Index last = lay.slot(i, grid.r[static_cast<std::size_t>(i)]);
    for (Index row = 0; row < c; ++row) {
      K(row, first) = sys.K(row, i);
      L(row, last) = sys.L(row, i);
    }
    for (Index row = 0; row < m; ++row) {
      Ku(row, first) = sys.K(c + row, i);
      Lu(row, last) = sys.L(c + row, i);
      Ky(row, first) = sys.Ky(row, i);
      Ly(row, last) = sys.Ly(row, i);
    }
  }
  Index row = c;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 1; j < grid.r[static_cast<std::size_t>(i)]; ++j, ++row) {
      K(row, lay.slot(i, j + 1)) = 1.0;
      L(row, lay.slot(i, j)) = -1.0;
    }
  }

  PHSystem out;
  out.n = np;
  out.m = m;
  out.p = grid.p;
  out.K0 = K;
  out.L0 = L;
  out.Ku = Ku;
  out.Lu = Lu;
  out.Ky = Ky;
  out.Ly = Ly;
  return out;
}

/// Reflect then split.
inline PHSystem to_uniform(const MultiSpeedSystem& sys) { return split_commensurate(reflect_positive(sys)); }

/// Channel profiles (r_i·N cells each, ζ ascending) of a leftward system to
/// the n' × N initial profile of its split form.
inline Matrix split_profile(const MultiSpeedSystem& sys, const std::vector<Vector>& channels, Index grid_n) {
  const CommensurateGrid grid = commensurate_grid(sys);
  const SegmentLayout lay = segment_layout(grid.r);
  if (static_cast<Index>(channels.size()) != sys.n) throw ShapeError("split_profile: one profile per channel required");
  Matrix out(lay.total, grid_n);
  for (Index i = 0; i < sys.n; ++i) {
    const Index ri = grid.r[static_cast<std::size_t>(i)];
    const Vector& prof = channels[static_cast<std::size_t>(i)];
    if (prof.size() != ri * grid_n) throw ShapeError("split_profile: channel profile has wrong length");
    for (Index j = 1; j <= ri; ++j) out.row(lay.slot(i, j)) = prof.segment((j - 1) * grid_n, grid_n).transpose();
  }
  return out;
}

/// Profiles of the reflected system: rightward channels are reversed in ζ.
inline std::vector<Vector> reflect_profiles(const MultiSpeedSystem& sys, std::vector<Vector> channels) {
  for (Index i = 0; i < sys.n; ++i)
    if (sys.speeds[static_cast<std::size_t>(i)].direction == 1) {
      auto& v = channels[static_cast<std::size_t>(i)];
      v = v.reverse().eval();
    }
  return channels;
}

}  // namespace phzero
