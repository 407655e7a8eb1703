#pragma once

// Seeded random systems and profiles.

#include <cstdint>
#include <random>

#include "phzero/linalg.hpp"
#include "phzero/model.hpp"

namespace phzero {

using Rng = std::mt19937_64;

inline Matrix gaussian_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = g(rng);
  return a;
}

/// Entries drawn uniformly from {lo, …, hi}, each kept with probability `density`.
inline Matrix integer_matrix(Rng& rng, Index rows, Index cols, int lo, int hi, double density = 1.0) {
  std::uniform_int_distribution<int> pick(lo, hi);
  std::bernoulli_distribution keep(density);
  Matrix a = Matrix::Zero(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      if (keep(rng)) a(i, j) = pick(rng);
  return a;
}

/// Gaussian uniform-speed system with travel time p (not necessarily well-posed).
inline PHSystem gaussian_system(Rng& rng, Index n, Index m, double p = 1.0) {
  PHSystem s;
  s.n = n;
  s.m = m;
  s.p = p;
  s.K0 = gaussian_matrix(rng, n - m, n);
  s.L0 = gaussian_matrix(rng, n - m, n);
  s.Ku = gaussian_matrix(rng, m, n);
  s.Lu = gaussian_matrix(rng, m, n);
  s.Ky = gaussian_matrix(rng, m, n);
  s.Ly = gaussian_matrix(rng, m, n);
  return s;
}

/// Gaussian cell profile with one row per channel.
inline Matrix gaussian_profile(Rng& rng, Index n, Index grid_n) { return gaussian_matrix(rng, n, grid_n); }

/// Random profile whose every cell lies in V.
inline Matrix profile_in(Rng& rng, const Subspace& v, Index grid_n) {
  if (v.dim() == 0) return Matrix::Zero(v.ambient_dim(), grid_n);
  return v.basis() * gaussian_matrix(rng, v.dim(), grid_n);
}

}  // namespace phzero
