#pragma once

// Well-posedness, feedthrough, the one-traversal discrete quadruple, stability,
// transfer-function evaluation and transmission zeros of uniform-speed systems.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "phzero/linalg.hpp"
#include "phzero/model.hpp"

namespace phzero {

/// One traversal of the channels: f_{k+1} = Ad f_k + Bd u_k, y_k = Cd f_k + Dd u_k,
/// where f_k is the outflow trace z(1,·) over the k-th traversal window.
struct DiscreteSystem {
  Matrix Ad, Bd, Cd, Dd;
  double p = 1.0;

  Index n() const { return Ad.rows(); }
  Index m() const { return Bd.cols(); }
};

struct TransferSample {
  Complex s;
  CMatrix value;
};

struct StabilityReport {
  double spectral_radius = 0.0;
  double sigma_max = 0.0;
  bool stable = false;
  /// Whether σ_max(Ad) < 1 gives the same verdict as the spectral radius.
  bool sigma_agrees = true;
};

inline constexpr double kStabilityMargin = 1e-9;

inline bool check_well_posed(const PHSystem& sys, double tol = kDefaultTol) {
  if (!shapes_consistent(sys)) return false;
  return rank(sys.K(), tol) == sys.n;
}

inline std::vector<Finding> validate(const PHSystem& sys) {
  std::vector<Finding> out = structural_findings(sys);
  if (!out.empty()) return out;
  if (!check_well_posed(sys))
    out.push_back({FindingKind::IllPosed, "K singular: [K0; Ku] has rank " +
                                              std::to_string(rank(sys.K())) + " < n = " +
                                              std::to_string(sys.n) + " (system is not well-posed)"});
  return out;
}

inline std::vector<Finding> validate(const MultiSpeedSystem& sys) {
  std::vector<Finding> out = structural_findings(sys);
  if (!out.empty()) return out;
  const Matrix inflow = sys.inflow_matrix();
  if (rank(inflow) != sys.n)
    out.push_back({FindingKind::IllPosed, "K singular: inflow boundary matrix has rank " +
                                              std::to_string(rank(inflow)) + " < n = " +
                                              std::to_string(sys.n) + " (system is not well-posed)"});
  return out;
}

namespace detail {

inline void require_well_posed(const PHSystem& sys, const char* op) {
  if (!shapes_consistent(sys)) throw ShapeError(std::string(op) + ": inconsistent system shapes");
  if (!check_well_posed(sys)) throw PreconditionError(std::string(op) + ": K singular (system is not well-posed)");
}

/// K⁻¹·[0; I_m], the inflow response to a unit input.
inline Matrix input_response(const PHSystem& sys) {
  Matrix rhs = Matrix::Zero(sys.n, sys.m);
  rhs.bottomRows(sys.m) = Matrix::Identity(sys.m, sys.m);
  return sys.K().partialPivLu().solve(rhs);
}

}  // namespace detail

/// High-frequency limit of the transfer function: E = Ky·K⁻¹·[0; I].
inline Matrix feedthrough(const PHSystem& sys) {
  detail::require_well_posed(sys, "feedthrough");
  return sys.Ky * detail::input_response(sys);
}

/// σ_min(E) measured against ‖Ky‖·‖K⁻¹‖, the scale of E = Ky·K⁻¹·[0; I].
/// A plain condition number cannot flag a tiny 1×1 E.
inline double feedthrough_singularity_measure(const PHSystem& sys) {
  const Matrix e = feedthrough(sys);
  const double scale = norm2(sys.Ky) * norm2(sys.K().inverse());
  if (e.rows() == 0) return 1.0;
  if (!(scale > 0.0)) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(e);
  return svd.singularValues()(e.rows() - 1) / scale;
}

inline bool feedthrough_invertible(const PHSystem& sys, double tol = kDefaultTol) {
  return feedthrough_singularity_measure(sys) > tol;
}

inline DiscreteSystem discrete_reduce(const PHSystem& sys) {
  detail::require_well_posed(sys, "discrete_reduce");
  DiscreteSystem d;
  d.p = sys.p;
  d.Ad = -sys.K().partialPivLu().solve(sys.L());
  d.Bd = detail::input_response(sys);
  d.Cd = sys.Ky * d.Ad + sys.Ly;
  d.Dd = sys.Ky * d.Bd;
  return d;
}

/// Spectral radius of Ad decides; σ_max(Ad) is reported alongside because it
/// only bounds r from above and can disagree.
inline StabilityReport is_exponentially_stable(const PHSystem& sys) {
  const DiscreteSystem d = discrete_reduce(sys);
  StabilityReport rep;
  rep.spectral_radius = spectral_radius(d.Ad);
  rep.sigma_max = norm2(d.Ad);
  rep.stable = rep.spectral_radius < 1.0 - kStabilityMargin;
  rep.sigma_agrees = (rep.sigma_max < 1.0 - kStabilityMargin) == rep.stable;
  return rep;
}

// ---------------------------------------------------------------------------
// Transfer function
// ---------------------------------------------------------------------------

inline Complex delay_factor(const PHSystem& sys, Complex s) { return std::exp(-s * sys.p); }

/// G(s) from the boundary equations: (K + L·e^{−sp})·v = [0; u] and
/// G(s)·u = (Ky + Ly·e^{−sp})·v.
inline TransferSample transfer_eval(const PHSystem& sys, Complex s) {
  detail::require_well_posed(sys, "transfer_eval");
  const Complex w = delay_factor(sys, s);
  const CMatrix boundary = sys.K().cast<Complex>() + w * sys.L().cast<Complex>();
  if (reciprocal_condition(boundary) <= 1e-13)
    throw PreconditionError("transfer_eval: boundary matrix K + L e^{-sp} is singular at s (pole candidate)");
  CMatrix rhs = CMatrix::Zero(sys.n, sys.m);
  rhs.bottomRows(sys.m) = CMatrix::Identity(sys.m, sys.m);
  const CMatrix v = boundary.partialPivLu().solve(rhs);
  return {s, (sys.Ky.cast<Complex>() + w * sys.Ly.cast<Complex>()) * v};
}

/// G(s) = Dd + Cd·(e^{sp}·I − Ad)⁻¹·Bd.
inline CMatrix transfer_eval_resolvent(const DiscreteSystem& d, Complex s) {
  const Complex z = std::exp(s * d.p);
  const CMatrix shifted = z * CMatrix::Identity(d.n(), d.n()) - d.Ad.cast<Complex>();
  const CMatrix x = shifted.partialPivLu().solve(d.Bd.cast<Complex>());
  return d.Dd.cast<Complex>() + d.Cd.cast<Complex>() * x;
}

// ---------------------------------------------------------------------------
// Transmission zeros
// ---------------------------------------------------------------------------

namespace detail {

inline CMatrix pencil(const Matrix& a0, const Matrix& a1, Complex w) {
  return a0.cast<Complex>() + w * a1.cast<Complex>();
}

inline Complex pencil_det(const Matrix& a0, const Matrix& a1, Complex w) {
  if (a0.rows() == 0) return 1.0;
  return pencil(a0, a1, w).fullPivLu().determinant();
}

}  // namespace detail

/// Lemma-type singularity test: s is a transmission zero iff
/// [K0 + L0·e^{−sp}; Ky + Ly·e^{−sp}] is singular. Valid where K + L·e^{−sp}
/// is invertible.
inline bool is_transmission_zero(const PHSystem& sys, Complex s, double tol = 1e-9) {
  detail::require_well_posed(sys, "is_transmission_zero");
  const Complex w = delay_factor(sys, s);
  if (reciprocal_condition(detail::pencil(sys.K(), sys.L(), w)) <= 1e-12)
    throw PreconditionError("is_transmission_zero: K + L e^{-sp} is singular at s");
  const CMatrix stacked = detail::pencil(sys.K_stacked(), sys.L_stacked(), w);
  Eigen::JacobiSVD<CMatrix> svd(stacked);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1) <= tol * sv(0);
}

/// Real coefficients c_0..c_n of det(A0 + A1·w), by interpolation on the
/// (n+1)-th roots of unity.
inline std::vector<double> det_polynomial(const Matrix& a0, const Matrix& a1) {
  const Index n = a0.rows();
  const Index pts = n + 1;
  std::vector<Complex> vals(static_cast<std::size_t>(pts));
  for (Index j = 0; j < pts; ++j) {
    const Complex w = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(pts));
    vals[static_cast<std::size_t>(j)] = detail::pencil_det(a0, a1, w);
  }
  std::vector<double> c(static_cast<std::size_t>(pts));
  for (Index k = 0; k < pts; ++k) {
    Complex acc = 0.0;
    for (Index j = 0; j < pts; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(j * k % pts) / static_cast<double>(pts);
      acc += vals[static_cast<std::size_t>(j)] * std::polar(1.0, ang);
    }
    c[static_cast<std::size_t>(k)] = acc.real() / static_cast<double>(pts);
  }
  return c;
}

struct TransmissionZero {
  Complex w;  ///< root of the determinant in w = e^{−sp}
  Complex s;  ///< principal value −log(w)/p; all of s + 2πik/p are zeros too
  /// K + L·w is singular here too, so this root may be a cancelled pole
  /// rather than a zero of G.
  bool boundary_singular = false;
};

struct ZeroScanOptions {
  Index wgrid = 64;
  double coeff_tol = 1e-10;
};

struct ZeroScan {
  bool identically_zero = false;
  /// Degree of det in w after removing the factor w^j (roots at w = 0, i.e. s = +∞).
  Index degree = 0;
  std::vector<double> coefficients;
  std::vector<TransmissionZero> zeros;
  double period = 0.0;  ///< imaginary period 2π/p of the zero set
};

namespace detail {

inline Complex poly_eval(const std::vector<double>& c, Complex w) {
  Complex acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * w + *it;
  return acc;
}

inline Complex poly_deriv(const std::vector<double>& c, Complex w) {
  Complex acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * w + static_cast<double>(k) * c[k];
  return acc;
}

/// Newton on the true determinant, derivative taken from the interpolant.
inline Complex newton_polish(const Matrix& a0, const Matrix& a1, const std::vector<double>& c, Complex w) {
  for (int it = 0; it < 50; ++it) {
    const Complex f = pencil_det(a0, a1, w);
    const Complex df = poly_deriv(c, w);
    if (f == 0.0 || std::abs(df) == 0.0) break;
    const Complex step = f / df;
    w -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) break;
  }
  return w;
}

inline std::vector<Complex> companion_roots(const std::vector<double>& mono) {
  // mono: coefficients low → high, leading entry nonzero.
  const Index d = static_cast<Index>(mono.size()) - 1;
  if (d <= 0) return {};
  Matrix comp = Matrix::Zero(d, d);
  for (Index i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (Index i = 0; i < d; ++i) comp(i, d - 1) = -mono[static_cast<std::size_t>(i)] / mono[static_cast<std::size_t>(d)];
  const CVector ev = eigenvalues(comp);
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace detail

struct PencilRoots {
  bool identically_zero = false;
  Index degree = 0;
  std::vector<double> coefficients;
  std::vector<Complex> roots;  ///< nonzero roots, sorted by modulus then argument
};

/// Nonzero roots of det(A0 + A1·w). The determinant is a polynomial of degree
/// ≤ n in w; a polar grid over the root disc seeds Newton and the
/// companion-matrix eigenvalues make sure no root is missed.
inline PencilRoots pencil_roots(const Matrix& a0, const Matrix& a1, const ZeroScanOptions& opt = {}) {
  PencilRoots out;
  const Index n = a0.rows();
  out.coefficients = det_polynomial(a0, a1);
  const auto& c = out.coefficients;
  if (n == 0) return out;

  double cmax = 0.0;
  for (double v : c) cmax = std::max(cmax, std::abs(v));
  const double scale = std::pow(norm2(a0) + norm2(a1), static_cast<double>(n));
  if (!(cmax > opt.coeff_tol * scale)) {
    out.identically_zero = true;
    return out;
  }
  std::size_t lo = 0, hi = c.size() - 1;
  while (std::abs(c[lo]) <= opt.coeff_tol * cmax) ++lo;
  while (std::abs(c[hi]) <= opt.coeff_tol * cmax) --hi;
  out.degree = static_cast<Index>(hi - lo);
  if (out.degree == 0) return out;

  const std::vector<double> reduced(c.begin() + static_cast<std::ptrdiff_t>(lo), c.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  std::vector<Complex> candidates;

  // Grid seeds: local minima of |det| on a polar grid inside the Cauchy bound.
  double bound = 0.0;
  for (std::size_t k = 0; k + 1 < reduced.size(); ++k) bound = std::max(bound, std::abs(reduced[k] / reduced.back()));
  const double radius = 1.0 + bound;
  const Index g = std::max<Index>(opt.wgrid, 8);
  Matrix mag(g, g);
  auto grid_point = [&](Index a, Index b) {
    return std::polar(radius * (static_cast<double>(a) + 0.5) / static_cast<double>(g),
                      2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(g));
  };
  for (Index a = 0; a < g; ++a)
    for (Index b = 0; b < g; ++b) mag(a, b) = std::abs(detail::poly_eval(reduced, grid_point(a, b)));
  for (Index a = 0; a < g; ++a) {
    for (Index b = 0; b < g; ++b) {
      const double v = mag(a, b);
      const bool min_r = (a == 0 || v <= mag(a - 1, b)) && (a == g - 1 || v <= mag(a + 1, b));
      const bool min_t = v <= mag(a, (b + 1) % g) && v <= mag(a, (b + g - 1) % g);
      if (min_r && min_t) candidates.push_back(grid_point(a, b));
    }
  }
  for (Complex r : detail::companion_roots(reduced)) candidates.push_back(r);

  std::vector<Complex> roots;
  for (Complex seed : candidates) {
    Complex w = detail::newton_polish(a0, a1, c, seed);
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) continue;
    if (std::abs(w.imag()) <= 1e-12 * (1.0 + std::abs(w))) w = Complex(w.real(), 0.0);
    if (std::abs(w) <= 1e-12) continue;
    const double resid = std::abs(detail::pencil_det(a0, a1, w));
    const double wpow = std::pow(std::max(1.0, std::abs(w)), static_cast<double>(n));
    if (resid > 1e-8 * cmax * wpow) continue;
    const bool dup = std::any_of(roots.begin(), roots.end(), [&](Complex r) {
      return std::abs(r - w) <= 1e-6 * (1.0 + std::abs(w));
    });
    if (!dup) roots.push_back(w);
  }
  std::sort(roots.begin(), roots.end(), [](Complex x, Complex y) {
    if (std::abs(std::abs(x) - std::abs(y)) > 1e-9) return std::abs(x) < std::abs(y);
    return std::arg(x) < std::arg(y);
  });
  out.roots = std::move(roots);
  return out;
}

/// Transmission zeros: roots of det[K0 + L0·w; Ky + Ly·w] in w = e^{−sp}.
inline ZeroScan scan_zeros(const PHSystem& sys, const ZeroScanOptions& opt = {}) {
  detail::require_well_posed(sys, "scan_zeros");
  ZeroScan out;
  out.period = 2.0 * std::numbers::pi / sys.p;
  PencilRoots pr = pencil_roots(sys.K_stacked(), sys.L_stacked(), opt);
  out.identically_zero = pr.identically_zero;
  out.degree = pr.degree;
  out.coefficients = std::move(pr.coefficients);
  const Matrix k = sys.K();
  const Matrix l = sys.L();
  for (Complex w : pr.roots) {
    TransmissionZero z;
    z.w = w;
    z.s = -std::log(w) / sys.p;
    z.boundary_singular = reciprocal_condition(detail::pencil(k, l, w)) <= 1e-12;
    out.zeros.push_back(z);
  }
  return out;
}

}  // namespace phzero
