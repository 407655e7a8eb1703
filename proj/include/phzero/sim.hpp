#pragma once

// Method-of-characteristics simulation. The state is the traveling profile
// f_s(ζ) = z(1, (s + ζ)·p) sampled on cell midpoints ζ_c = (c + ½)/N, so one
// step is one traversal and f_{s+1} = Ad·f_s + Bd·u_s holds columnwise with no
// discretization error for piecewise-constant data.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "phzero/analysis.hpp"
#include "phzero/linalg.hpp"
#include "phzero/model.hpp"
#include "phzero/zerodyn.hpp"

namespace phzero {

struct Trajectory {
  Index grid_n = 0;
  Index steps = 0;
  double p = 1.0;
  std::vector<Matrix> states;   // steps + 1 entries, n × grid_n
  std::vector<Matrix> inputs;   // steps entries, m × grid_n
  std::vector<Matrix> outputs;  // steps entries, m × grid_n

  double max_abs_output() const {
    double out = 0.0;
    for (const auto& y : outputs)
      if (y.size() > 0) out = std::max(out, y.cwiseAbs().maxCoeff());
    return out;
  }

  /// z(ζ_c, t) at t = (step + shift/N)·p, read off the stored profiles by
  /// index shifting.
  Matrix profile(Index step, Index shift = 0) const {
    if (shift < 0 || shift >= grid_n) throw ShapeError("Trajectory::profile: shift must lie in [0, grid_n)");
    const Index n = states.front().rows();
    Matrix out(n, grid_n);
    for (Index c = 0; c < grid_n; ++c) {
      const Index q = step * grid_n + (grid_n - 1 - c) + shift;
      const Index block = q / grid_n;
      if (block > steps) throw ShapeError("Trajectory::profile: time beyond the simulated horizon");
      out.col(c) = states[static_cast<std::size_t>(block)].col(q % grid_n);
    }
    return out;
  }
};

/// u_s as a function of the step index and the current profile f_s.
using InputProvider = std::function<Matrix(Index step, const Matrix& state)>;

inline InputProvider zero_input(Index m) {
  return [m](Index, const Matrix& f) { return Matrix::Zero(m, f.cols()); };
}

/// f_0(ζ) = z0(1 − ζ): the cell order is reversed.
inline Matrix initial_traveling_profile(const Matrix& z0) { return z0.rowwise().reverse(); }

inline Trajectory simulate(const DiscreteSystem& d, const Matrix& z0, const InputProvider& u, Index steps) {
  if (z0.rows() != d.n()) throw ShapeError("simulate: initial profile must have one row per channel");
  if (steps < 0) throw ShapeError("simulate: steps must be non-negative");
  Trajectory tr;
  tr.grid_n = z0.cols();
  tr.steps = steps;
  tr.p = d.p;
  tr.states.reserve(static_cast<std::size_t>(steps + 1));
  tr.states.push_back(initial_traveling_profile(z0));
  for (Index s = 0; s < steps; ++s) {
    const Matrix& f = tr.states.back();
    Matrix us = u(s, f);
    if (us.rows() != d.m() || us.cols() != tr.grid_n)
      throw ShapeError("simulate: input provider returned " + std::to_string(us.rows()) + "x" +
                       std::to_string(us.cols()) + ", expected " + std::to_string(d.m()) + "x" +
                       std::to_string(tr.grid_n));
    tr.outputs.push_back(d.Cd * f + d.Dd * us);
    Matrix next = d.Ad * f + d.Bd * us;
    tr.inputs.push_back(std::move(us));
    tr.states.push_back(std::move(next));
  }
  return tr;
}

inline Trajectory simulate(const PHSystem& sys, const Matrix& z0, const InputProvider& u, Index steps) {
  return simulate(discrete_reduce(sys), z0, u, steps);
}

enum class Feedback { Friend, Reduction };

/// u = (Lu~ − Ku~·Kw⁻¹·Lw)·W applied to the outflow trace: on the zero
/// dynamics w(0) = −Kw⁻¹Lw·w(1), so u = Ku~ w(0) + Lu~ w(1) becomes a
/// function of f alone.
inline Matrix reduction_feedback(const ZeroDynamicsResult& r) {
  if (r.k == 0) return Matrix::Zero(r.m, r.n);
  const Matrix w0_from_w1 = -r.Kw.partialPivLu().solve(r.Lw);
  return (r.Lu_tilde + r.Ku_tilde * w0_from_w1) * r.coordinates;
}

/// Closed loop on V*: z0 must lie in V* (columnwise, relative distance
/// ≤ 1e-10).
inline Trajectory simulate_zeroing(const PHSystem& sys, const ZeroDynamicsResult& zd, const Matrix& z0, Index steps,
                                   Feedback fb = Feedback::Reduction) {
  const DiscreteSystem d = discrete_reduce(sys);
  const Subspace v = vstar_discrete(sys);
  if (z0.rows() != sys.n) throw ShapeError("simulate_zeroing: initial profile must have one row per channel");
  const double scale = std::max(z0.size() == 0 ? 0.0 : z0.cwiseAbs().maxCoeff(), 1e-300);
  const Matrix outside = z0 - v.projector() * z0;
  const double dist = outside.size() == 0 ? 0.0 : outside.cwiseAbs().maxCoeff();
  if (dist > 1e-10 * scale)
    throw PreconditionError("simulate_zeroing: initial profile is not in V* (projection distance " +
                            std::to_string(dist) + ")");
  // Both gains are only meaningful on V*; the reduction gain is extended by
  // zero on V*⊥ like the friend, so rounding outside V* is not amplified.
  const Matrix gain = fb == Feedback::Friend ? nulling_friend(d, v).Fd : Matrix(reduction_feedback(zd) * v.projector());
  return simulate(d, z0, [&gain](Index, const Matrix& f) { return Matrix(gain * f); }, steps);
}

/// L² norm sqrt(h·Σ z²) of a cell-sampled profile with h = 1/N.
inline double profile_norm(const Matrix& z) {
  if (z.cols() == 0) return 0.0;
  return std::sqrt(z.squaredNorm() / static_cast<double>(z.cols()));
}

}  // namespace phzero
