#pragma once

// Reference computations for tests, written independently of the library
// routines they check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "phzero/phzero.hpp"

namespace oracle {

using namespace phzero;

/// Determinant by cofactor expansion (small n only).
inline double det_cofactor(const Matrix& a) {
  const Index n = a.rows();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  double d = 0.0;
  for (Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r)
      for (Index c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = a(r, c);
    d += ((j % 2) ? -1.0 : 1.0) * a(0, j) * det_cofactor(minor);
  }
  return d;
}

/// Inverse through the adjugate (small n only).
inline Matrix inverse_cofactor(const Matrix& a) {
  const Index n = a.rows();
  const double d = det_cofactor(a);
  Matrix inv(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      Matrix minor(n - 1, n - 1);
      for (Index r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (Index c = 0, cc = 0; c < n; ++c)
          if (c != i) minor(rr, cc++) = a(r, c);
        ++rr;
      }
      inv(i, j) = (((i + j) % 2) ? -1.0 : 1.0) * det_cofactor(minor) / d;
    }
  return inv;
}

/// Transfer function of the split two-speed example with z = e^{sp}, from
/// eliminating the traces by hand.
inline std::complex<double> ex52_transfer(std::complex<double> z) { return (-z * z + z + 1.0) / (z * z * (z + 1.0)); }

/// Columns of an m × N block sequence laid end to end.
inline Matrix flatten_steps(const std::vector<Matrix>& blocks, Index rows) {
  Index cols = 0;
  for (const auto& b : blocks) cols += b.cols();
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return out;
}

/// Segments per channel for travel times den_i/num_i, by brute-force search
/// over a common step 1/q.
inline std::vector<Index> segments_brute(const MultiSpeedSystem& sys) {
  for (std::int64_t q = 1; q <= 100000; ++q) {
    // t_i·q must be an integer for every channel; the common step is the
    // largest g = a/q dividing all of them.
    bool ok = true;
    std::vector<std::int64_t> ticks;
    for (const auto& sp : sys.speeds) {
      if ((sp.den * q) % sp.num != 0) {
        ok = false;
        break;
      }
      ticks.push_back(sp.den * q / sp.num);
    }
    if (!ok) continue;
    std::int64_t g = 0;
    for (auto t : ticks) g = std::gcd(g, t);
    std::vector<Index> r;
    for (auto t : ticks) r.push_back(static_cast<Index>(t / g));
    return r;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Per-channel delay lines (multi-speed reference simulator)
// ---------------------------------------------------------------------------

/// Exact transport of every channel at its own speed with substep h = g/N,
/// g the common travel time. Channel i holds r_i·N cells, given ζ ascending.
/// u has one column per substep; the result has one output column per substep.
inline Matrix simulate_delay_lines(const MultiSpeedSystem& sys, const std::vector<Vector>& channels, const Matrix& u,
                                   Index grid_n) {
  const std::vector<Index> segs = segments_brute(sys);
  const Index n = sys.n, m = sys.m;
  if (static_cast<Index>(channels.size()) != n) throw ShapeError("simulate_delay_lines: one profile per channel");
  if (u.rows() != m) throw ShapeError("simulate_delay_lines: input must have m rows");
  std::vector<std::deque<double>> line(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& prof = channels[static_cast<std::size_t>(i)];
    if (prof.size() != segs[static_cast<std::size_t>(i)] * grid_n)
      throw ShapeError("simulate_delay_lines: channel profile has wrong length");
    line[static_cast<std::size_t>(i)].assign(prof.data(), prof.data() + prof.size());
  }
  const Matrix inflow_m = sys.inflow_matrix();
  Matrix outflow_m = sys.L;
  for (Index j = 0; j < n; ++j)
    if (sys.speeds[static_cast<std::size_t>(j)].direction == 1) outflow_m.col(j) = sys.K.col(j);
  const Eigen::PartialPivLU<Matrix> solver(inflow_m);

  Matrix y(m, u.cols());
  Vector out(n), rhs(n), z0(n), z1(n);
  for (Index t = 0; t < u.cols(); ++t) {
    for (Index i = 0; i < n; ++i) {
      const auto& q = line[static_cast<std::size_t>(i)];
      out(i) = sys.speeds[static_cast<std::size_t>(i)].direction == -1 ? q.back() : q.front();
    }
    rhs.setZero();
    rhs.tail(m) = u.col(t);
    rhs -= outflow_m * out;
    const Vector in = solver.solve(rhs);
    for (Index i = 0; i < n; ++i) {
      const bool left = sys.speeds[static_cast<std::size_t>(i)].direction == -1;
      z0(i) = left ? in(i) : out(i);
      z1(i) = left ? out(i) : in(i);
      auto& q = line[static_cast<std::size_t>(i)];
      if (left) {
        q.pop_back();
        q.push_front(in(i));
      } else {
        q.pop_front();
        q.push_back(in(i));
      }
    }
    y.col(t) = sys.Ky * z0 + sys.Ly * z1;
  }
  return y;
}


/// A uniform-speed system seen as delay lines of one segment each.
inline MultiSpeedSystem as_multispeed(const PHSystem& sys) {
  MultiSpeedSystem out;
  out.n = sys.n;
  out.m = sys.m;
  out.speeds.assign(static_cast<std::size_t>(sys.n), RationalSpeed(1, 1, -1));
  out.speed_scale = 1.0 / sys.p;
  out.K = sys.K();
  out.L = sys.L();
  out.Ky = sys.Ky;
  out.Ly = sys.Ly;
  return out;
}

}  // namespace oracle
