#pragma once

// Port-Hamiltonian transport systems in boundary form.
//
// Boundary convention (unweighted): with z(0,t) and z(1,t) the channel traces,
//
//     [0; u(t)] = K·z(0,t) + L·z(1,t),   K = [K0; Ku],  L = [L0; Lu]
//          y(t) = Ky·z(0,t) + Ly·z(1,t)
//
// For the uniform-speed form every channel obeys ∂z/∂t = −(1/p)·∂z/∂ζ, so z(0,t)
// is the inflow trace and z(1,t) the outflow trace. A system written with
// speed-weighted traces −λ0·K, −λ0·L is brought to this form by absorbing the
// constant −λ0 into K and L.

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "phzero/linalg.hpp"

namespace phzero {

/// |speed| = num/den; direction is the sign of the diagonal entry of Δ in
/// ∂z/∂t = Δ·∂z/∂ζ. direction −1 transports toward ζ = 1, +1 toward ζ = 0.
struct RationalSpeed {
  std::int64_t num = 1;
  std::int64_t den = 1;
  int direction = -1;

  RationalSpeed() = default;
  RationalSpeed(std::int64_t n, std::int64_t d, int dir = -1) : num(n), den(d), direction(dir) {
    if (num < 1 || den < 1) throw SchemaError("speeds", "numerator and denominator must be >= 1");
    if (dir != 1 && dir != -1) throw SchemaError("speeds", "direction must be +1 or -1");
    const std::int64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
  }

  /// Time needed to cross the unit interval, as the reduced fraction den/num.
  double travel_time() const { return static_cast<double>(den) / static_cast<double>(num); }

  friend bool operator==(const RationalSpeed&, const RationalSpeed&) = default;
};

/// Channels with individual (commensurate) speeds. Rows of K and L are ordered
/// [constraint rows (n − m); input rows (m)]. The physical speed of channel i is
/// speed_scale·num_i/den_i.
struct MultiSpeedSystem {
  Index n = 0;
  Index m = 0;
  std::vector<RationalSpeed> speeds;
  double speed_scale = 1.0;
  Matrix K, L;
  Matrix Ky, Ly;

  Index constraint_rows() const { return n - m; }

  /// Boundary matrix acting on the inflow traces (z(0) for direction −1
  /// channels, z(1) for direction +1 channels).
  Matrix inflow_matrix() const {
    Matrix out = K;
    for (Index j = 0; j < n; ++j)
      if (speeds[static_cast<std::size_t>(j)].direction == 1) out.col(j) = L.col(j);
    return out;
  }
};

/// Uniform-speed system with travel time p.
struct PHSystem {
  Index n = 0;
  Index m = 0;
  double p = 1.0;
  Matrix K0, L0;  // (n − m) × n
  Matrix Ku, Lu;  // m × n
  Matrix Ky, Ly;  // m × n

  Matrix K() const { return vstack(K0, Ku); }
  Matrix L() const { return vstack(L0, Lu); }
  /// Boundary matrices of the zero dynamics: the input rows replaced by y = 0.
  Matrix K_stacked() const { return vstack(K0, Ky); }
  Matrix L_stacked() const { return vstack(L0, Ly); }
};

inline bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

inline bool operator==(const PHSystem& a, const PHSystem& b) {
  return a.n == b.n && a.m == b.m && a.p == b.p && same_matrix(a.K0, b.K0) &&
         same_matrix(a.L0, b.L0) && same_matrix(a.Ku, b.Ku) && same_matrix(a.Lu, b.Lu) &&
         same_matrix(a.Ky, b.Ky) && same_matrix(a.Ly, b.Ly);
}

/// ∂x/∂t = P1·∂(H x)/∂ζ with constant H and boundary rows acting on
/// [(Hx)(1); (Hx)(0)].
struct RawConstantSystem {
  Index n = 0;
  Matrix P1, H;
  Matrix WB1, WB2, WC;
};

inline bool operator==(const MultiSpeedSystem& a, const MultiSpeedSystem& b) {
  return a.n == b.n && a.m == b.m && a.speeds == b.speeds && a.speed_scale == b.speed_scale &&
         same_matrix(a.K, b.K) &&
         same_matrix(a.L, b.L) && same_matrix(a.Ky, b.Ky) && same_matrix(a.Ly, b.Ly);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class FindingKind { ShapeMismatch, NonFinite, Dimension, IllPosed };

struct Finding {
  FindingKind kind;
  std::string message;
};

inline const char* to_string(FindingKind k) {
  switch (k) {
    case FindingKind::ShapeMismatch: return "shape mismatch";
    case FindingKind::NonFinite: return "non-finite entry";
    case FindingKind::Dimension: return "dimension";
    case FindingKind::IllPosed: return "K singular";
  }
  return "?";
}

namespace detail {

inline void check_shape(std::vector<Finding>& out, const char* name, const Matrix& a, Index rows,
                        Index cols) {
  // An empty row block carries no column information.
  if (a.rows() == 0 && rows == 0) return;
  if (a.rows() != rows || a.cols() != cols) {
    out.push_back({FindingKind::ShapeMismatch,
                   std::string("shape mismatch: ") + name + " is " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols)});
  }
}

inline void check_finite(std::vector<Finding>& out, const char* name, const Matrix& a) {
  if (!all_finite(a)) out.push_back({FindingKind::NonFinite, std::string("non-finite entry in ") + name});
}

}  // namespace detail

inline bool shapes_consistent(const PHSystem& s) {
  const Index c = s.n - s.m;
  auto ok = [](const Matrix& a, Index r, Index k) { return (a.rows() == 0 && r == 0) || (a.rows() == r && a.cols() == k); };
  return s.m >= 1 && s.n >= s.m && ok(s.K0, c, s.n) && ok(s.L0, c, s.n) && ok(s.Ku, s.m, s.n) &&
         ok(s.Lu, s.m, s.n) && ok(s.Ky, s.m, s.n) && ok(s.Ly, s.m, s.n);
}

/// Structural findings only (shapes, finiteness); well-posedness is added by
/// validate() in analysis.hpp.
inline std::vector<Finding> structural_findings(const PHSystem& s) {
  std::vector<Finding> out;
  if (s.m < 1) out.push_back({FindingKind::Dimension, "m must be at least 1"});
  if (s.n < s.m) out.push_back({FindingKind::Dimension, "n must be at least m"});
  if (!(s.p > 0.0) || !std::isfinite(s.p)) out.push_back({FindingKind::Dimension, "travel time must be positive"});
  if (!out.empty()) return out;
  const Index c = s.n - s.m;
  detail::check_shape(out, "K0", s.K0, c, s.n);
  detail::check_shape(out, "L0", s.L0, c, s.n);
  detail::check_shape(out, "Ku", s.Ku, s.m, s.n);
  detail::check_shape(out, "Lu", s.Lu, s.m, s.n);
  detail::check_shape(out, "Ky", s.Ky, s.m, s.n);
  detail::check_shape(out, "Ly", s.Ly, s.m, s.n);
  detail::check_finite(out, "K0", s.K0);
  detail::check_finite(out, "L0", s.L0);
  detail::check_finite(out, "Ku", s.Ku);
  detail::check_finite(out, "Lu", s.Lu);
  detail::check_finite(out, "Ky", s.Ky);
  detail::check_finite(out, "Ly", s.Ly);
  return out;
}

inline std::vector<Finding> structural_findings(const MultiSpeedSystem& s) {
  std::vector<Finding> out;
  if (s.m < 1) out.push_back({FindingKind::Dimension, "m must be at least 1"});
  if (s.n < s.m) out.push_back({FindingKind::Dimension, "n must be at least m"});
  if (static_cast<Index>(s.speeds.size()) != s.n)
    out.push_back({FindingKind::ShapeMismatch, "shape mismatch: speeds has " + std::to_string(s.speeds.size()) +
                                                    " entries, expected " + std::to_string(s.n)});
  if (!(s.speed_scale > 0.0) || !std::isfinite(s.speed_scale))
    out.push_back({FindingKind::Dimension, "speed_scale must be positive"});
  if (!out.empty()) return out;
  detail::check_shape(out, "K", s.K, s.n, s.n);
  detail::check_shape(out, "L", s.L, s.n, s.n);
  detail::check_shape(out, "Ky", s.Ky, s.m, s.n);
  detail::check_shape(out, "Ly", s.Ly, s.m, s.n);
  detail::check_finite(out, "K", s.K);
  detail::check_finite(out, "L", s.L);
  detail::check_finite(out, "Ky", s.Ky);
  detail::check_finite(out, "Ly", s.Ly);
  return out;
}

}  // namespace phzero
