#pragma once

// JSON documents for systems and zero-dynamics results.
//
// Uniform-speed system:
//   {"n", "m", "travel_time", "K0", "L0", "Ku", "Lu", "Ky", "Ly"}
// Multi-speed system (rows of K, L ordered [constraint rows; input rows]):
//   {"n", "m", "speeds": [{"num", "den", "direction"}], "speed_scale"?, "K", "L", "Ky", "Ly"}
// Matrices are arrays of rows; a matrix without rows is written [].
// A speed-weighted system (−λ0·K, −λ0·L) is stored after dividing both by −λ0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "phzero/errors.hpp"
#include "phzero/linalg.hpp"
#include "phzero/model.hpp"
#include "phzero/zerodyn.hpp"

namespace phzero {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "phzero-system/1";

using SystemDocument = std::variant<PHSystem, MultiSpeedSystem>;

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

/// Integral values are written as integers so that hand-written documents
/// survive a load/save cycle unchanged.
inline Json number_to_json(double x) {
  if (std::isfinite(x) && x == std::trunc(x) && std::abs(x) < 1e15) return Json(static_cast<std::int64_t>(x));
  return Json(x);
}

inline Json matrix_to_json(const Matrix& a) {
  Json rows = Json::array();
  for (Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < a.cols(); ++j) row.push_back(number_to_json(a(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json complex_to_json(Complex z) { return Json{{"re", number_to_json(z.real())}, {"im", number_to_json(z.imag())}}; }

inline Json to_json(const PHSystem& s) {
  Json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["travel_time"] = number_to_json(s.p);
  j["K0"] = matrix_to_json(s.K0);
  j["L0"] = matrix_to_json(s.L0);
  j["Ku"] = matrix_to_json(s.Ku);
  j["Lu"] = matrix_to_json(s.Lu);
  j["Ky"] = matrix_to_json(s.Ky);
  j["Ly"] = matrix_to_json(s.Ly);
  return j;
}

inline Json to_json(const MultiSpeedSystem& s) {
  Json j;
  j["n"] = s.n;
  j["m"] = s.m;
  Json speeds = Json::array();
  for (const auto& sp : s.speeds) speeds.push_back({{"num", sp.num}, {"den", sp.den}, {"direction", sp.direction}});
  j["speeds"] = std::move(speeds);
  if (s.speed_scale != 1.0) j["speed_scale"] = number_to_json(s.speed_scale);
  j["K"] = matrix_to_json(s.K);
  j["L"] = matrix_to_json(s.L);
  j["Ky"] = matrix_to_json(s.Ky);
  j["Ly"] = matrix_to_json(s.Ly);
  return j;
}

inline Json to_json(const ZeroDynamicsResult& r) {
  Json j;
  j["kind"] = "zero_dynamics";
  j["n"] = r.n;
  j["m"] = r.m;
  j["k"] = r.k;
  j["travel_time"] = number_to_json(r.p);
  j["full_state"] = r.full_state;
  j["Kw"] = matrix_to_json(r.Kw);
  j["Lw"] = matrix_to_json(r.Lw);
  j["constraints"] = matrix_to_json(r.constraints);
  j["coordinates"] = matrix_to_json(r.coordinates);
  Json chain = Json::array();
  for (const auto& t : r.transform_chain) chain.push_back(matrix_to_json(t));
  j["transform_chain"] = std::move(chain);
  j["swapped_column"] = r.swapped_column;
  j["Ku_tilde"] = matrix_to_json(r.Ku_tilde);
  j["Lu_tilde"] = matrix_to_json(r.Lu_tilde);
  Json s0 = Json::array();
  for (double v : r.s0_used) s0.push_back(number_to_json(v));
  j["s0_used"] = std::move(s0);
  j["identity_residuals"] = r.identity_residuals;
  // Derived: the zeroing input on the original traces, u = K·z(0) + L·z(1).
  j["zeroing_input"] = {{"K", matrix_to_json(r.zeroing_K())}, {"L", matrix_to_json(r.zeroing_L())}};
  return j;
}

namespace detail {

inline bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

/// Scalar, or an object holding only scalars (e.g. a speed entry).
inline bool is_flat(const Json& j) {
  if (is_scalar(j)) return true;
  return j.is_object() && std::all_of(j.begin(), j.end(), is_scalar);
}

inline void write_inline(std::string& out, const Json& j) {
  if (!j.is_object()) {
    out += j.dump();
    return;
  }
  out += "{";
  bool first = true;
  for (auto it = j.begin(); it != j.end(); ++it) {
    out += (first ? "" : ", ") + Json(it.key()).dump() + ": " + it.value().dump();
    first = false;
  }
  out += "}";
}

inline void write_canonical(std::string& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += inner + Json(it.key()).dump() + ": ";
      write_canonical(out, it.value(), indent + 2);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (std::all_of(j.begin(), j.end(), is_flat)) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        write_inline(out, j[i]);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",\n";
      out += inner;
      write_canonical(out, j[i], indent + 2);
    }
    out += "\n" + pad + "]";
  } else {
    out += j.dump();
  }
}

}  // namespace detail

/// Two-space indentation with arrays of scalars or flat objects (matrix rows,
/// speed lists) kept on one line.
inline std::string dump(const Json& j) {
  std::string out;
  detail::write_canonical(out, j, 0);
  return out + "\n";
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IOError("failed writing '" + path + "'");
}

template <typename T>
void save(const std::string& path, const T& value) {
  write_text_file(path, dump(to_json(value)));
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

namespace detail {

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based and points at the offending character.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    const auto cut = msg.find("parse error");
    if (cut != std::string::npos) msg = msg.substr(cut);
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg, line, col);
  }
}

inline const Json& field(const Json& j, const char* name) {
  if (!j.contains(name)) throw SchemaError(name, "missing");
  return j.at(name);
}

inline std::int64_t int_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_number_integer()) throw SchemaError(name, "expected an integer");
  return v.get<std::int64_t>();
}

inline double number_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_number()) throw SchemaError(name, "expected a number");
  return v.get<double>();
}

inline bool bool_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_boolean()) throw SchemaError(name, "expected true or false");
  return v.get<bool>();
}

/// Array of equal-length numeric rows. An empty array gives a 0 × empty_cols
/// matrix. Shapes beyond rectangularity are left to validation.
inline Matrix matrix_value(const Json& v, const std::string& name, Index empty_cols) {
  if (!v.is_array()) throw SchemaError(name, "expected an array of rows");
  if (v.empty()) return Matrix(0, empty_cols);
  Index cols = -1;
  Matrix out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Json& row = v[i];
    if (!row.is_array()) throw SchemaError(name, "row " + std::to_string(i) + " is not an array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      out.resize(static_cast<Index>(v.size()), cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw SchemaError(name, "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                                  " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number())
        throw SchemaError(name, "entry (" + std::to_string(i) + "," + std::to_string(c) + ") is not a number");
      out(static_cast<Index>(i), static_cast<Index>(c)) = row[c].get<double>();
    }
  }
  return out;
}

inline Matrix matrix_field(const Json& j, const char* name, Index empty_cols) {
  return matrix_value(field(j, name), name, empty_cols);
}

inline Matrix exact_matrix_field(const Json& j, const char* name, Index rows, Index cols) {
  Matrix a = matrix_field(j, name, cols);
  if (rows > 0 && cols == 0 && a.rows() == rows) return a;
  if (a.rows() != rows || (rows > 0 && a.cols() != cols))
    throw SchemaError(name, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  return a;
}

inline void reject_unknown(const Json& j, const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw SchemaError(it.key(), "unknown field");
}

inline Index dimension_field(const Json& j, const char* name) {
  const std::int64_t v = int_field(j, name);
  if (v < 0) throw SchemaError(name, "must be non-negative");
  return static_cast<Index>(v);
}

inline PHSystem uniform_from_json(const Json& j) {
  reject_unknown(j, {"n", "m", "travel_time", "K0", "L0", "Ku", "Lu", "Ky", "Ly"});
  PHSystem s;
  s.n = dimension_field(j, "n");
  s.m = dimension_field(j, "m");
  s.p = number_field(j, "travel_time");
  if (!(s.p > 0.0)) throw SchemaError("travel_time", "must be positive");
  s.K0 = matrix_field(j, "K0", s.n);
  s.L0 = matrix_field(j, "L0", s.n);
  s.Ku = matrix_field(j, "Ku", s.n);
  s.Lu = matrix_field(j, "Lu", s.n);
  s.Ky = matrix_field(j, "Ky", s.n);
  s.Ly = matrix_field(j, "Ly", s.n);
  return s;
}

inline MultiSpeedSystem multispeed_from_json(const Json& j) {
  reject_unknown(j, {"n", "m", "speeds", "speed_scale", "K", "L", "Ky", "Ly"});
  MultiSpeedSystem s;
  s.n = dimension_field(j, "n");
  s.m = dimension_field(j, "m");
  const Json& sp = field(j, "speeds");
  if (!sp.is_array()) throw SchemaError("speeds", "expected an array");
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const Json& e = sp[i];
    if (!e.is_object()) throw SchemaError("speeds", "entry " + std::to_string(i) + " is not an object");
    reject_unknown(e, {"num", "den", "direction"});
    const std::int64_t num = int_field(e, "num");
    const std::int64_t den = int_field(e, "den");
    const std::int64_t dir = int_field(e, "direction");
    if (num < 1 || den < 1) throw SchemaError("speeds", "entry " + std::to_string(i) + ": num and den must be >= 1");
    if (dir != 1 && dir != -1) throw SchemaError("speeds", "entry " + std::to_string(i) + ": direction must be +1 or -1");
    s.speeds.emplace_back(num, den, static_cast<int>(dir));
  }
  if (j.contains("speed_scale")) {
    s.speed_scale = number_field(j, "speed_scale");
    if (!(s.speed_scale > 0.0)) throw SchemaError("speed_scale", "must be positive");
  }
  s.K = matrix_field(j, "K", s.n);
  s.L = matrix_field(j, "L", s.n);
  s.Ky = matrix_field(j, "Ky", s.n);
  s.Ly = matrix_field(j, "Ly", s.n);
  return s;
}

}  // namespace detail

inline SystemDocument system_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("<root>", "expected a JSON object");
  const bool uniform = j.contains("travel_time");
  const bool multi = j.contains("speeds");
  if (uniform == multi) throw SchemaError("travel_time", "exactly one of 'travel_time' or 'speeds' must be present");
  if (uniform) return detail::uniform_from_json(j);
  return detail::multispeed_from_json(j);
}

inline ZeroDynamicsResult result_from_json(const Json& j) {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("<root>", "expected a JSON object");
  reject_unknown(j, {"kind", "n", "m", "k", "travel_time", "full_state", "Kw", "Lw", "constraints", "coordinates",
                     "transform_chain", "swapped_column", "Ku_tilde", "Lu_tilde", "s0_used", "identity_residuals",
                     "zeroing_input"});
  if (!j.contains("kind") || j.at("kind") != "zero_dynamics") throw SchemaError("kind", "expected \"zero_dynamics\"");
  ZeroDynamicsResult r;
  r.n = dimension_field(j, "n");
  r.m = dimension_field(j, "m");
  r.k = dimension_field(j, "k");
  if (r.k > r.n) throw SchemaError("k", "must not exceed n");
  r.p = number_field(j, "travel_time");
  r.full_state = bool_field(j, "full_state");
  r.Kw = exact_matrix_field(j, "Kw", r.k, r.k);
  r.Lw = exact_matrix_field(j, "Lw", r.k, r.k);
  r.constraints = exact_matrix_field(j, "constraints", r.n - r.k, r.n);
  r.coordinates = exact_matrix_field(j, "coordinates", r.k, r.n);
  const Json& chain = field(j, "transform_chain");
  if (!chain.is_array()) throw SchemaError("transform_chain", "expected an array of matrices");
  for (const Json& t : chain) r.transform_chain.push_back(matrix_value(t, "transform_chain", 0));
  const Json& sw = field(j, "swapped_column");
  if (!sw.is_array()) throw SchemaError("swapped_column", "expected an array");
  for (const Json& v : sw) {
    if (!v.is_number_integer()) throw SchemaError("swapped_column", "expected integers");
    r.swapped_column.push_back(v.get<Index>());
  }
  r.Ku_tilde = exact_matrix_field(j, "Ku_tilde", r.m, r.k);
  r.Lu_tilde = exact_matrix_field(j, "Lu_tilde", r.m, r.k);
  for (const char* name : {"s0_used", "identity_residuals"}) {
    const Json& v = field(j, name);
    if (!v.is_array()) throw SchemaError(name, "expected an array of numbers");
    auto& dst = std::string(name) == "s0_used" ? r.s0_used : r.identity_residuals;
    for (const Json& x : v) {
      if (!x.is_number()) throw SchemaError(name, "expected numbers");
      dst.push_back(x.get<double>());
    }
  }
  return r;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SystemDocument parse_system(const std::string& text) { return system_from_json(detail::parse_json(text)); }
inline SystemDocument load_system(const std::string& path) { return parse_system(read_text_file(path)); }

inline ZeroDynamicsResult parse_result(const std::string& text) { return result_from_json(detail::parse_json(text)); }
inline ZeroDynamicsResult load_result(const std::string& path) { return parse_result(read_text_file(path)); }

inline Json parse_json_text(const std::string& text) { return detail::parse_json(text); }

}  // namespace phzero
