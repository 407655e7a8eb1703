#pragma once

// Largest output-nulling subspace (two routes), nulling friend, and the
// iterative SISO reduction to the zero-dynamics boundary system.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "phzero/analysis.hpp"
#include "phzero/linalg.hpp"
#include "phzero/model.hpp"

namespace phzero {

// ---------------------------------------------------------------------------
// Output-nulling subspace
// ---------------------------------------------------------------------------

/// Fixed point of V⁰ = Rⁿ, V^{k+1} = V^k ∩ F⁻¹(E·V^k).
inline Subspace vstar_discrete(const Matrix& e, const Matrix& f, double tol = kDefaultTol) {
  if (e.rows() != f.rows() || e.cols() != f.cols()) throw ShapeError("vstar_discrete: E and F must have the same shape");
  const Index n = e.cols();
  Subspace v = Subspace::full(n, tol);
  for (Index it = 0; it <= n + 1; ++it) {
    Subspace next = subspace_intersect(v, preimage(f, image(e, v)));
    if (next.dim() == v.dim()) return next;
    v = std::move(next);
  }
  throw NumericalError("vstar_discrete: iteration did not reach a fixed point");
}

/// E = −[K0; Ky], F = [L0; Ly].
inline Subspace vstar_discrete(const PHSystem& sys, double tol = kDefaultTol) {
  return vstar_discrete(-sys.K_stacked(), sys.L_stacked(), tol);
}

/// Classical controlled-invariant iteration on the quadruple:
/// V^{k+1} = {v ∈ V^k : ∃u, Ad v + Bd u ∈ V^k, Cd v + Dd u = 0}.
inline Subspace vstar_from_quadruple(const DiscreteSystem& d, double tol = kDefaultTol) {
  const Index n = d.n();
  const double scale = std::max(norm2(vstack(hstack(d.Ad, d.Bd), hstack(d.Cd, d.Dd))), 1e-300);
  Subspace v = Subspace::full(n, tol);
  for (Index it = 0; it <= n + 1; ++it) {
    const Matrix q = Matrix::Identity(n, n) - v.projector();
    const Matrix stacked = vstack(hstack(q * d.Ad, q * d.Bd), hstack(d.Cd, d.Dd));
    const Subspace ker = nullspace_scaled(stacked, tol, scale);
    const Subspace proj = Subspace::span(ker.basis().topRows(n), tol, 1.0);
    Subspace next = subspace_intersect(v, proj);
    if (next.dim() == v.dim()) return next;
    v = std::move(next);
  }
  throw NumericalError("vstar_from_quadruple: iteration did not reach a fixed point");
}

struct NullingFriend {
  Matrix Fd;  // m × n
  Subspace V;
  double invariance_residual = 0.0;
  double output_residual = 0.0;
};

/// Residuals of (Ad + Bd·F)V ⊆ V and (Cd + Dd·F)V = 0, relative to the
/// quadruple's scale.
inline std::pair<double, double> friend_residuals(const DiscreteSystem& d, const Matrix& f, const Subspace& v) {
  if (v.dim() == 0) return {0.0, 0.0};
  const Index n = d.n();
  const Matrix closed = (d.Ad + d.Bd * f) * v.basis();
  const Matrix leak = (Matrix::Identity(n, n) - v.projector()) * closed;
  const Matrix out = (d.Cd + d.Dd * f) * v.basis();
  return {leak.cwiseAbs().maxCoeff(), out.size() == 0 ? 0.0 : out.cwiseAbs().maxCoeff()};
}

/// Solves [Bd, −V; Dd, 0]·[u; x] = [−Ad v; −Cd v] for every basis vector v and
/// sets Fd = U·Vᵀ, which vanishes on V⊥.
inline NullingFriend nulling_friend(const DiscreteSystem& d, const Subspace& v, double resid_tol = 1e-10) {
  const Index n = d.n();
  const Index m = d.m();
  if (v.ambient_dim() != n) throw ShapeError("nulling_friend: subspace dimension does not match the quadruple");
  NullingFriend nf;
  nf.V = v;
  nf.Fd = Matrix::Zero(m, n);
  if (v.dim() == 0) return nf;
  const Index r = v.dim();
  const Index q = d.Cd.rows();
  Matrix sys_m = Matrix::Zero(n + q, m + r);
  sys_m.topLeftCorner(n, m) = d.Bd;
  sys_m.topRightCorner(n, r) = -v.basis();
  sys_m.bottomLeftCorner(q, m) = d.Dd;
  Matrix rhs(n + q, r);
  rhs.topRows(n) = -d.Ad * v.basis();
  rhs.bottomRows(q) = -d.Cd * v.basis();
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sys_m);
  const Matrix sol = cod.solve(rhs);
  const double scale = std::max(1.0, norm2(vstack(d.Ad, d.Cd)));
  const double resid = (sys_m * sol - rhs).cwiseAbs().maxCoeff();
  if (resid > resid_tol * scale)
    throw ConsistencyError("nulling_friend: subspace is not output-nulling (residual " + std::to_string(resid) + ")");
  nf.Fd = sol.topRows(m) * v.basis().transpose();
  std::tie(nf.invariance_residual, nf.output_residual) = friend_residuals(d, nf.Fd, v);
  return nf;
}

// ---------------------------------------------------------------------------
// Reduction
// ---------------------------------------------------------------------------

struct ReduceOptions {
  double tol = kDefaultTol;
  double s0_step = 0.5;
  std::optional<double> s0_max;  // default 50/p
  double cond_max = 1e8;
  double identity_tol = 1e-9;
};

/// The zero-dynamics system w = W·z with [0; 0] = Kw·w(0,t) + Lw·w(1,t), and
/// the input that keeps y ≡ 0: u = Ku~·w(0,t) + Lu~·w(1,t).
struct ZeroDynamicsResult {
  Index n = 0;
  Index m = 0;
  Index k = 0;
  double p = 1.0;
  bool full_state = false;
  Matrix Kw, Lw;                        // k × k
  Matrix constraints;                   // (n − k) × n, unit rows, first nonzero entry positive
  Matrix coordinates;                   // W, k × n
  std::vector<Matrix> transform_chain;  // T·Pᵀ per iteration
  std::vector<Index> swapped_column;    // column moved to the trailing slot per iteration
  Matrix Ku_tilde, Lu_tilde;            // m × k
  std::vector<double> s0_used;
  std::vector<double> identity_residuals;

  /// The zeroing input written on the original traces.
  Matrix zeroing_K() const { return Ku_tilde * coordinates; }
  Matrix zeroing_L() const { return Lu_tilde * coordinates; }
};

inline bool operator==(const ZeroDynamicsResult& a, const ZeroDynamicsResult& b) {
  if (a.transform_chain.size() != b.transform_chain.size()) return false;
  for (std::size_t i = 0; i < a.transform_chain.size(); ++i)
    if (!same_matrix(a.transform_chain[i], b.transform_chain[i])) return false;
  return a.n == b.n && a.m == b.m && a.k == b.k && a.p == b.p && a.full_state == b.full_state &&
         same_matrix(a.Kw, b.Kw) && same_matrix(a.Lw, b.Lw) && same_matrix(a.constraints, b.constraints) &&
         same_matrix(a.coordinates, b.coordinates) && a.swapped_column == b.swapped_column &&
         same_matrix(a.Ku_tilde, b.Ku_tilde) && same_matrix(a.Lu_tilde, b.Lu_tilde) && a.s0_used == b.s0_used &&
         a.identity_residuals == b.identity_residuals;
}

namespace detail {

inline RowVector normalize_row(RowVector r) {
  const double nr = r.norm();
  if (nr == 0.0) return r;
  r /= nr;
  for (Index j = 0; j < r.size(); ++j) {
    if (std::abs(r(j)) > 1e-12) {
      if (r(j) < 0.0) r = -r;
      break;
    }
  }
  return r;
}

inline Matrix transposition(Index k, Index a, Index b) {
  Matrix p = Matrix::Identity(k, k);
  if (a != b) {
    p(a, a) = p(b, b) = 0.0;
    p(a, b) = p(b, a) = 1.0;
  }
  return p;
}

struct StepResult {
  Matrix transform;  // T·Pᵀ
  Matrix perm;       // P
  SchurBlocks blocks;
  Matrix Kw, Lw;
  double s0 = 0.0;
  double residual = 0.0;
  Index column = 0;
};

}  // namespace detail

/// Iterative reduction. [K0; Ky] invertible gives the whole state space
/// (any m); otherwise one coordinate is eliminated per iteration (SISO only).
inline ZeroDynamicsResult reduce(const PHSystem& sys, const ReduceOptions& opt = {}) {
  detail::require_well_posed(sys, "reduce");
  ZeroDynamicsResult res;
  res.n = sys.n;
  res.m = sys.m;
  res.p = sys.p;
  const Index n = sys.n;
  Matrix kc = sys.K_stacked();
  Matrix lc = sys.L_stacked();

  if (rank(kc, opt.tol) == n) {
    res.full_state = true;
    res.k = n;
    res.Kw = kc;
    res.Lw = lc;
    res.coordinates = Matrix::Identity(n, n);
    res.constraints = Matrix(0, n);
    res.Ku_tilde = sys.Ku;
    res.Lu_tilde = sys.Lu;
    return res;
  }
  if (sys.m != 1)
    throw PreconditionError("reduce: multi-input reduction with singular [K0; Ky] is unsupported");

  const double s0_max = opt.s0_max.value_or(50.0 / sys.p);
  const double min_rcond = 1.0 / opt.cond_max;
  Matrix w_map = Matrix::Identity(n, n);
  Matrix ku = sys.Ku;
  Matrix lu = sys.Lu;
  std::vector<RowVector> constraints;
  Index k = n;

  while (k > 0 && rank(kc, opt.tol) < k) {
    if (rank(kc, opt.tol) < k - 1)
      throw ConsistencyError("reduce: stacked matrix lost more than one rank in a single iteration");
    const LUFactors f = lu_decompose(kc, opt.tol);
    if (f.rank() != k - 1) throw ConsistencyError("reduce: LU rank disagrees with QR rank");
    // Row transform R = L⁻¹P: K' = U (last row zero), L' = R·L.
    Matrix kp = f.upper;
    kp.row(k - 1).setZero();
    const Matrix lp = f.lower.triangularView<Eigen::UnitLower>().solve(f.permutation_matrix() * lc);

    // Candidate trailing columns: no swap first when the leading block is
    // invertible, then the others by leading-block conditioning.
    std::vector<std::pair<double, Index>> ranked;
    std::vector<Index> order;
    for (Index j = 0; j < k; ++j) {
      const Matrix kj = kp * detail::transposition(k, j, k - 1);
      const double rc = k == 1 ? 1.0 : reciprocal_condition(kj.topLeftCorner(k - 1, k - 1));
      if (rc <= min_rcond) continue;
      if (j == k - 1)
        order.push_back(j);
      else
        ranked.emplace_back(rc, j);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [rc, j] : ranked) order.push_back(j);

    std::optional<detail::StepResult> step;
    for (Index j : order) {
      const Matrix perm = detail::transposition(k, j, k - 1);
      const Matrix kpp = kp * perm;
      const Matrix lpp = lp * perm;
      const Index h = k - 1;
      for (Index i = 0;; ++i) {
        const double s0 = static_cast<double>(i) * opt.s0_step;
        if (s0 > s0_max + 1e-12) break;
        const double w = std::exp(-s0 * sys.p);
        Matrix t(k, k);
        t.topRows(h) = kpp.topRows(h) + w * lpp.topRows(h);
        t.row(h) = w * lpp.row(h);
        if (h > 0 && reciprocal_condition(t.topLeftCorner(h, h)) <= min_rcond) continue;
        if (reciprocal_condition(t) <= min_rcond) continue;
        SchurBlocks blocks;
        try {
          blocks = schur_block_inverse(t, h);
        } catch (const SingularMatrixError&) {
          continue;
        }
        const Matrix xl = vstack(blocks.x11, blocks.x21);  // left k × h block of T⁻¹
        const Matrix kw = kpp.topRows(h) * xl;
        const Matrix lw = lpp.topRows(h) * xl;
        const double resid = h == 0 ? 0.0 : norm2(kw + w * lw - Matrix::Identity(h, h));
        if (resid > opt.identity_tol) continue;
        step = detail::StepResult{t * perm.transpose(), perm, blocks, kw, lw, s0, resid, j};
        break;
      }
      if (step) break;
    }
    if (!step)
      throw PreconditionError("reduce: s0 scan exhausted without an invertible transformation; "
                              "the transfer function may be identically zero");

    const Matrix xl = vstack(step->blocks.x11, step->blocks.x21);
    constraints.push_back(step->transform.row(k - 1) * w_map);
    w_map = (step->transform.topRows(k - 1) * w_map).eval();
    ku = (ku * step->perm * xl).eval();
    lu = (lu * step->perm * xl).eval();
    res.transform_chain.push_back(step->transform);
    res.swapped_column.push_back(step->column);
    res.s0_used.push_back(step->s0);
    res.identity_residuals.push_back(step->residual);
    kc = step->Kw;
    lc = step->Lw;
    --k;
  }

  res.k = k;
  res.Kw = kc;
  res.Lw = lc;
  if (k == 0) {
    res.Kw = Matrix(0, 0);
    res.Lw = Matrix(0, 0);
  }
  res.coordinates = k == 0 ? Matrix(0, n) : w_map;
  res.Ku_tilde = k == 0 ? Matrix(sys.m, 0) : ku;
  res.Lu_tilde = k == 0 ? Matrix(sys.m, 0) : lu;
  res.constraints = Matrix(static_cast<Index>(constraints.size()), n);
  for (std::size_t i = 0; i < constraints.size(); ++i)
    res.constraints.row(static_cast<Index>(i)) = detail::normalize_row(constraints[i]);
  if (k > 0 && rank(res.Kw, opt.tol) != k) throw ConsistencyError("reduce: reduced Kw is singular");
  return res;
}

// ---------------------------------------------------------------------------
// Functionals modulo constraints
// ---------------------------------------------------------------------------

/// Largest distance of the rows of `a` from the row span of `constraints`.
inline double residual_mod_rowspan(const Matrix& a, const Matrix& constraints) {
  if (a.size() == 0) return 0.0;
  if (constraints.rows() == 0) return a.cwiseAbs().maxCoeff();
  const Subspace span = Subspace::span(constraints.transpose(), kDefaultTol);
  const Matrix r = a - a * span.projector();
  return r.cwiseAbs().maxCoeff();
}

/// How far the zeroing input (a0 on z(0), a1 on z(1)) is from the one found by
/// the reduction, with both traces constrained only by the constraint rows.
inline double zeroing_residual_mod_constraints(const ZeroDynamicsResult& r, const Matrix& a0, const Matrix& a1) {
  return std::max(residual_mod_rowspan(r.zeroing_K() - a0, r.constraints),
                  residual_mod_rowspan(r.zeroing_L() - a1, r.constraints));
}

/// Same comparison over the trace pairs the zero dynamics can produce:
/// both traces satisfy the constraints and Kw·W z(0) + Lw·W z(1) = 0.
inline double zeroing_residual_on_zero_dynamics(const ZeroDynamicsResult& r, const Matrix& a0, const Matrix& a1) {
  const Index n = r.n;
  const Index c = r.constraints.rows();
  Matrix eqs = Matrix::Zero(2 * c + r.k, 2 * n);
  if (c > 0) {
    eqs.block(0, 0, c, n) = r.constraints;
    eqs.block(c, n, c, n) = r.constraints;
  }
  if (r.k > 0) {
    eqs.block(2 * c, 0, r.k, n) = r.Kw * r.coordinates;
    eqs.block(2 * c, n, r.k, n) = r.Lw * r.coordinates;
  }
  const Subspace pairs = nullspace(eqs);
  if (pairs.dim() == 0) return 0.0;
  const Matrix delta = hstack(r.zeroing_K() - a0, r.zeroing_L() - a1);
  return (delta * pairs.basis()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Cross-check of the two routes
// ---------------------------------------------------------------------------

struct CrossCheckReport {
  Index vstar_dim = 0;
  Index k = 0;
  double constraint_residual = 0.0;
  double idempotence_gap = 0.0;
  std::vector<Complex> reduced_roots;
  std::vector<Complex> stacked_roots;
  bool roots_match = true;
  bool zero_tests_pass = true;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

inline bool same_root_sets(const std::vector<Complex>& a, const std::vector<Complex>& b, double tol) {
  if (a.size() != b.size()) return false;
  auto covered = [tol](const std::vector<Complex>& x, const std::vector<Complex>& y) {
    return std::all_of(x.begin(), x.end(), [&](Complex r) {
      return std::any_of(y.begin(), y.end(), [&](Complex q) { return std::abs(r - q) <= tol * (1.0 + std::abs(r)); });
    });
  };
  return covered(a, b) && covered(b, a);
}

inline CrossCheckReport cross_check(const PHSystem& sys, const ReduceOptions& opt = {},
                                    const ZeroScanOptions& zopt = {}) {
  CrossCheckReport rep;
  const Subspace v = vstar_discrete(sys, opt.tol);
  const ZeroDynamicsResult r = reduce(sys, opt);
  rep.vstar_dim = v.dim();
  rep.k = r.k;
  if (rep.vstar_dim != rep.k)
    rep.failures.push_back("dim V* = " + std::to_string(rep.vstar_dim) + " but reduction gives k = " +
                           std::to_string(rep.k));
  if (r.constraints.rows() > 0 && v.dim() > 0)
    rep.constraint_residual = (r.constraints * v.basis()).cwiseAbs().maxCoeff();
  if (rep.constraint_residual > 1e-10) rep.failures.push_back("constraint rows do not annihilate V*");

  const Subspace again = subspace_intersect(v, preimage(sys.L_stacked(), image(-sys.K_stacked(), v)));
  rep.idempotence_gap = again.same_as(v) ? 0.0 : 1.0;
  if (rep.idempotence_gap != 0.0) rep.failures.push_back("V* is not a fixed point of the iteration");

  const PencilRoots reduced = pencil_roots(r.Kw, r.Lw, zopt);
  const ZeroScan scan = scan_zeros(sys, zopt);
  rep.reduced_roots = reduced.roots;
  for (const auto& z : scan.zeros) rep.stacked_roots.push_back(z.w);
  rep.roots_match = !scan.identically_zero && !reduced.identically_zero &&
                    same_root_sets(rep.reduced_roots, rep.stacked_roots, 1e-7);
  if (!rep.roots_match) rep.failures.push_back("roots of det(Kw + Lw w) differ from the transmission zeros");

  for (const auto& z : scan.zeros) {
    if (z.boundary_singular) continue;
    if (!is_transmission_zero(sys, z.s, 1e-7)) {
      rep.zero_tests_pass = false;
      rep.failures.push_back("root w = " + std::to_string(z.w.real()) + "+" + std::to_string(z.w.imag()) +
                             "i fails the singularity test");
    }
  }
  return rep;
}

}  // namespace phzero
