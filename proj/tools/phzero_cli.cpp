// phzero command-line front end.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "phzero/phzero.hpp"

namespace {

using namespace phzero;

enum ExitCode { kOk = 0, kUsage = 1, kSchema = 2, kPrecondition = 3, kInternal = 4 };

struct Options {
  std::string file;
  std::string format = "text";
  std::string output;
  double tol = kDefaultTol;
  std::uint64_t seed = 1;
  std::optional<double> s0_max;
  Index wgrid = 64;
  std::string initial = "random";
  Index steps = 20;
  Index grid = 64;
  std::string mode = "open";
  std::string feedback = "reduction";
};

struct Loaded {
  PHSystem sys;
  bool from_multispeed = false;
  std::string digest;
};

std::string fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string num(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of −0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string num(Complex z) {
  if (z.imag() == 0.0) return num(z.real());
  return num(z.real()) + (z.imag() < 0 ? " - " : " + ") + num(std::abs(z.imag())) + "i";
}

std::string row_text(const Matrix& a, Index i) {
  std::string out = "[";
  for (Index j = 0; j < a.cols(); ++j) out += (j ? ", " : "") + num(a(i, j));
  return out + "]";
}

std::string matrix_text(const Matrix& a, const std::string& indent) {
  if (a.rows() == 0) return indent + "[]\n";
  std::string out;
  for (Index i = 0; i < a.rows(); ++i) out += indent + row_text(a, i) + "\n";
  return out;
}

/// "−2.5 z5(0,t) + 0.5 z8(0,t)"; zero functionals read "0".
std::string functional_text(const RowVector& at0, const RowVector& at1, double eps = 1e-12) {
  std::string out;
  auto term = [&](double c, Index j, const char* where) {
    if (std::abs(c) <= eps) return;
    const bool neg = c < 0;
    const double a = std::abs(c);
    if (out.empty())
      out += neg ? "-" : "";
    else
      out += neg ? " - " : " + ";
    if (std::abs(a - 1.0) > eps) out += num(a) + " ";
    out += "z" + std::to_string(j + 1) + "(" + where + ",t)";
  };
  for (Index j = 0; j < at0.size(); ++j) term(at0(j), j, "0");
  for (Index j = 0; j < at1.size(); ++j) term(at1(j), j, "1");
  return out.empty() ? "0" : out;
}

/// Minimum-norm representative of each row modulo the row span of `c`.
Matrix reduce_mod_rows(const Matrix& a, const Matrix& c) {
  if (c.rows() == 0 || a.size() == 0) return a;
  const Subspace span = Subspace::span(c.transpose());
  Matrix out = a - a * span.projector();
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j)
      if (std::abs(out(i, j)) <= 1e-12) out(i, j) = 0.0;
  return out;
}

Loaded load(const Options& opt) {
  Loaded l;
  const std::string text = read_text_file(opt.file);
  l.digest = fnv1a64(text);
  const SystemDocument doc = parse_system(text);
  if (const auto* ms = std::get_if<MultiSpeedSystem>(&doc)) {
    const auto f = validate(*ms);
    for (const auto& x : f)
      if (x.kind != FindingKind::IllPosed) throw ShapeError(x.message);
    l.sys = to_uniform(*ms);
    l.from_multispeed = true;
  } else {
    l.sys = std::get<PHSystem>(doc);
  }
  return l;
}

Json header(const std::string& command, const Options& opt, const std::string& digest) {
  Json j;
  j["command"] = command;
  j["inputs"] = Json::array({Json{{"path", opt.file}, {"fnv1a64", digest}}});
  j["versions"] = {{"tool", PHZERO_VERSION}, {"schema", kSchemaVersion}};
  return j;
}

void emit(const Options& opt, const Json& report, const std::string& text) {
  if (opt.format == "json")
    std::cout << dump(report);
  else
    std::cout << text;
}

void require_loadable(const PHSystem& sys) {
  for (const auto& f : structural_findings(sys)) throw ShapeError(f.message);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_validate(const Options& opt) {
  const std::string text = read_text_file(opt.file);
  const SystemDocument doc = parse_system(text);
  std::vector<Finding> findings;
  std::string kind;
  if (const auto* ms = std::get_if<MultiSpeedSystem>(&doc)) {
    kind = "multispeed";
    findings = validate(*ms);
  } else {
    kind = "uniform";
    findings = validate(std::get<PHSystem>(doc));
  }
  const bool ill_posed = std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.kind == FindingKind::IllPosed; });
  Json rep = header("validate", opt, fnv1a64(text));
  Json list = Json::array();
  std::string body;
  for (const auto& f : findings) {
    list.push_back({{"kind", to_string(f.kind)}, {"message", f.message}});
    body += "  - " + f.message + "\n";
  }
  rep["findings"] = {{"system_kind", kind}, {"well_posed", findings.empty()}, {"issues", list}};
  std::string text_out = "system: " + kind + "\nwell-posed: " + (findings.empty() ? "yes" : "no") + "\n";
  if (!findings.empty()) text_out += "findings:\n" + body;
  emit(opt, rep, text_out);
  if (findings.empty()) return kOk;
  return ill_posed && findings.size() == 1 ? kPrecondition : kSchema;
}

int cmd_split(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  const std::string doc = dump(to_json(l.sys));
  if (opt.output.empty()) {
    std::cout << doc;
    return kOk;
  }
  write_text_file(opt.output, doc);
  Json rep = header("split", opt, l.digest);
  rep["findings"] = {{"split", l.from_multispeed}, {"n", l.sys.n}, {"travel_time", number_to_json(l.sys.p)},
                     {"output", opt.output}};
  emit(opt, rep,
       "wrote " + opt.output + ": n = " + std::to_string(l.sys.n) + ", travel time p = " + num(l.sys.p) + "\n");
  return kOk;
}

int cmd_analyze(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  Json rep = header("analyze", opt, l.digest);
  const bool wp = check_well_posed(l.sys, opt.tol);
  if (!wp) {
    rep["findings"] = {{"well_posed", false}};
    emit(opt, rep, "well-posed: no (K singular)\n");
    return kPrecondition;
  }
  const DiscreteSystem d = discrete_reduce(l.sys);
  const Matrix e = feedthrough(l.sys);
  const StabilityReport st = is_exponentially_stable(l.sys);
  Json f;
  f["well_posed"] = true;
  f["split_from_multispeed"] = l.from_multispeed;
  f["n"] = l.sys.n;
  f["m"] = l.sys.m;
  f["travel_time"] = number_to_json(l.sys.p);
  f["E"] = matrix_to_json(e);
  f["E_invertible"] = feedthrough_invertible(l.sys, opt.tol);
  f["discrete"] = {{"Ad", matrix_to_json(d.Ad)}, {"Bd", matrix_to_json(d.Bd)}, {"Cd", matrix_to_json(d.Cd)},
                   {"Dd", matrix_to_json(d.Dd)}};
  f["spectral_radius"] = st.spectral_radius;
  f["sigma_max"] = st.sigma_max;
  f["exponentially_stable"] = st.stable;
  f["sigma_max_agrees"] = st.sigma_agrees;
  rep["findings"] = f;
  std::string t = "well-posed: yes\n";
  if (l.from_multispeed) t += "split from multi-speed form: n = " + std::to_string(l.sys.n) + "\n";
  t += "travel time p = " + num(l.sys.p) + "\nfeedthrough E:\n" + matrix_text(e, "  ");
  t += "Ad:\n" + matrix_text(d.Ad, "  ") + "Bd:\n" + matrix_text(d.Bd, "  ") + "Cd:\n" + matrix_text(d.Cd, "  ") +
       "Dd:\n" + matrix_text(d.Dd, "  ");
  t += "spectral radius r(Ad) = " + num(st.spectral_radius) + "\n";
  t += "sigma_max(Ad) = " + num(st.sigma_max) + (st.sigma_agrees ? "" : " (disagrees with the spectral-radius verdict)") + "\n";
  t += std::string("exponentially stable: ") + (st.stable ? "yes" : "no") + "\n";
  emit(opt, rep, t);
  return kOk;
}

int cmd_zerodyn(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  ReduceOptions ro;
  ro.tol = opt.tol;
  ro.s0_max = opt.s0_max;
  const ZeroDynamicsResult r = reduce(l.sys, ro);
  if (!opt.output.empty()) save(opt.output, r);
  const Subspace v = vstar_discrete(l.sys, opt.tol);
  const Matrix zk = reduce_mod_rows(r.zeroing_K(), r.constraints);
  const Matrix zl = reduce_mod_rows(r.zeroing_L(), r.constraints);

  Json rep = header("zerodyn", opt, l.digest);
  Json f;
  f["split_from_multispeed"] = l.from_multispeed;
  f["k"] = r.k;
  f["vstar_dim"] = v.dim();
  f["full_state"] = r.full_state;
  f["iterations"] = r.transform_chain.size();
  f["result"] = to_json(r);
  Json zi = Json::array();
  for (Index i = 0; i < r.m; ++i) zi.push_back(functional_text(zk.row(i), zl.row(i)));
  f["zeroing_input_modulo_constraints"] = {{"K", matrix_to_json(zk)}, {"L", matrix_to_json(zl)}, {"text", zi}};
  rep["findings"] = f;

  std::string t = "zero dynamics: k = " + std::to_string(r.k) + " of n = " + std::to_string(r.n) +
                  (r.full_state ? " (whole state space, [K0; Ky] invertible)" : "") + "\n";
  t += "dim V*_d = " + std::to_string(v.dim()) + "\n";
  t += "iterations: " + std::to_string(r.transform_chain.size()) + "\n";
  for (std::size_t i = 0; i < r.transform_chain.size(); ++i)
    t += "  step " + std::to_string(i + 1) + ": s0 = " + num(r.s0_used[i]) + ", T P =\n" +
         matrix_text(r.transform_chain[i], "    ");
  t += "Kw:\n" + matrix_text(r.Kw, "  ") + "Lw:\n" + matrix_text(r.Lw, "  ");
  t += "constraints (rows vanish on the zero dynamics):\n" + matrix_text(r.constraints, "  ");
  t += "zeroing input on reduced traces: Ku~ = " + (r.k ? row_text(r.Ku_tilde, 0) : std::string("[]")) +
       ", Lu~ = " + (r.k ? row_text(r.Lu_tilde, 0) : std::string("[]")) + "\n";
  for (Index i = 0; i < r.m; ++i)
    t += "zeroing input: u" + (r.m > 1 ? std::to_string(i + 1) : std::string()) + "(t) = " +
         zi[static_cast<std::size_t>(i)].get<std::string>() + "  (modulo constraints)\n";
  if (!opt.output.empty()) t += "wrote " + opt.output + "\n";
  emit(opt, rep, t);
  return kOk;
}

int cmd_vstar(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  const Subspace v = vstar_discrete(l.sys, opt.tol);
  const Subspace q = vstar_from_quadruple(discrete_reduce(l.sys), opt.tol);
  const bool agree = v.same_as(q);
  Json rep = header("vstar", opt, l.digest);
  rep["findings"] = {{"dim", v.dim()}, {"basis", matrix_to_json(v.basis().transpose())}, {"routes_agree", agree}};
  std::string t = "dim V*_d = " + std::to_string(v.dim()) + "\nbasis vectors:\n" + matrix_text(v.basis().transpose(), "  ");
  t += std::string("quadruple route agrees: ") + (agree ? "yes" : "no") + "\n";
  emit(opt, rep, t);
  return agree ? kOk : kInternal;
}

int cmd_zeros(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  ZeroScanOptions zo;
  zo.wgrid = opt.wgrid;
  const ZeroScan z = scan_zeros(l.sys, zo);
  Json rep = header("zeros", opt, l.digest);
  Json list = Json::array();
  std::string t;
  if (z.identically_zero) {
    t = "transfer function is identically zero\n";
  } else {
    t = "determinant degree in w = e^{-sp}: " + std::to_string(z.degree) + "\n";
    t += "zeros (s repeats with period " + num(z.period) + "i):\n";
    if (z.zeros.empty()) t += "  none\n";
  }
  for (const auto& q : z.zeros) {
    list.push_back({{"w", complex_to_json(q.w)}, {"s", complex_to_json(q.s)}, {"boundary_singular", q.boundary_singular}});
    t += "  w = " + num(q.w) + ", s = " + num(q.s) + (q.boundary_singular ? "  (K + L w singular)" : "") + "\n";
  }
  rep["findings"] = {{"identically_zero", z.identically_zero},
                     {"degree", z.degree},
                     {"period", z.period},
                     {"zeros", list}};
  emit(opt, rep, t);
  return kOk;
}

Matrix read_initial(const Options& opt, const PHSystem& sys, const Subspace* in_space) {
  if (opt.initial == "random") {
    Rng rng(opt.seed);
    return in_space ? profile_in(rng, *in_space, opt.grid) : gaussian_profile(rng, sys.n, opt.grid);
  }
  const Json j = parse_json_text(read_text_file(opt.initial));
  const Json& prof = j.is_object() && j.contains("profile") ? j.at("profile") : j;
  Matrix z0 = detail::matrix_value(prof, "profile", 0);
  if (z0.rows() != sys.n) throw SchemaError("profile", "expected one row per channel (" + std::to_string(sys.n) + ")");
  return z0;
}

void write_csv(std::ostream& os, const Trajectory& tr) {
  char buf[64];
  os << "step,cell,channel,value\n";
  auto block = [&](const std::vector<Matrix>& v, const char* prefix) {
    for (std::size_t s = 0; s < v.size(); ++s)
      for (Index c = 0; c < v[s].cols(); ++c)
        for (Index i = 0; i < v[s].rows(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", v[s](i, c) == 0.0 ? 0.0 : v[s](i, c));
          os << s << ',' << c << ',' << prefix << (i + 1) << ',' << buf << '\n';
        }
  };
  block(tr.states, "z");
  block(tr.inputs, "u");
  block(tr.outputs, "y");
}

int cmd_simulate(const Options& opt) {
  const Loaded l = load(opt);
  require_loadable(l.sys);
  if (opt.steps < 0 || opt.grid < 1) throw std::invalid_argument("--steps must be >= 0 and --grid >= 1");
  Trajectory tr;
  Matrix z0;
  if (opt.mode == "zeroing") {
    ReduceOptions ro;
    ro.tol = opt.tol;
    ro.s0_max = opt.s0_max;
    const ZeroDynamicsResult r = reduce(l.sys, ro);
    const Subspace v = vstar_discrete(l.sys, opt.tol);
    z0 = read_initial(opt, l.sys, &v);
    tr = simulate_zeroing(l.sys, r, z0, opt.steps, opt.feedback == "friend" ? Feedback::Friend : Feedback::Reduction);
  } else {
    z0 = read_initial(opt, l.sys, nullptr);
    tr = simulate(l.sys, z0, zero_input(l.sys.m), opt.steps);
  }
  const double ymax = tr.max_abs_output();
  const double z0n = profile_norm(z0);

  if (opt.format == "csv") {
    if (opt.output.empty()) {
      write_csv(std::cout, tr);
    } else {
      std::ostringstream ss;
      write_csv(ss, tr);
      write_text_file(opt.output, ss.str());
    }
    std::cerr << "max|y| = " << num(ymax) << ", |z0| = " << num(z0n) << "\n";
    return kOk;
  }
  Json rep = header("simulate", opt, l.digest);
  Json f;
  f["mode"] = opt.mode;
  if (opt.mode == "zeroing") f["feedback"] = opt.feedback;
  f["grid_n"] = tr.grid_n;
  f["steps"] = tr.steps;
  f["travel_time"] = number_to_json(tr.p);
  f["max_abs_output"] = ymax;
  f["z0_norm"] = z0n;
  Json traj;
  auto blocks = [](const std::vector<Matrix>& v) {
    Json a = Json::array();
    for (const auto& m : v) a.push_back(matrix_to_json(m));
    return a;
  };
  traj["states"] = blocks(tr.states);
  traj["inputs"] = blocks(tr.inputs);
  traj["outputs"] = blocks(tr.outputs);
  if (opt.output.empty()) {
    f["trajectory"] = traj;
  } else {
    write_text_file(opt.output, dump(traj));
    f["trajectory_file"] = opt.output;
  }
  rep["findings"] = f;
  std::string t = "mode: " + opt.mode + (opt.mode == "zeroing" ? " (" + opt.feedback + " feedback)" : "") + "\n";
  t += "steps: " + std::to_string(tr.steps) + ", grid: " + std::to_string(tr.grid_n) + "\n";
  t += "|z0| = " + num(z0n) + "\nmax|y| = " + num(ymax) + "\n";
  if (!opt.output.empty()) t += "wrote " + opt.output + "\n";
  emit(opt, rep, t);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero dynamics of boundary-controlled port-Hamiltonian transport systems"};
  app.set_version_flag("--version", std::string("phzero ") + PHZERO_VERSION);
  app.require_subcommand(1);
  Options opt;

  auto common = [&opt](CLI::App* sub) {
    sub->add_option("file", opt.file, "System document (JSON)")->required();
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
    sub->add_option("--tol", opt.tol, "Relative rank tolerance")->envname("PHZERO_TOL")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "Random seed")->envname("PHZERO_SEED");
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check shapes and well-posedness");
  common(validate_cmd);
  auto* split_cmd = app.add_subcommand("split", "Rewrite a multi-speed system in uniform-speed form");
  common(split_cmd);
  split_cmd->add_option("-o,--output", opt.output, "Output system file");
  auto* analyze_cmd = app.add_subcommand("analyze", "Feedthrough, discrete quadruple and stability");
  common(analyze_cmd);
  auto* zerodyn_cmd = app.add_subcommand("zerodyn", "Zero-dynamics reduction");
  common(zerodyn_cmd);
  zerodyn_cmd->add_option("-o,--output", opt.output, "Result document");
  zerodyn_cmd->add_option("--s0-max", opt.s0_max, "Upper end of the s0 scan (default 50/p)");
  auto* vstar_cmd = app.add_subcommand("vstar", "Largest output-nulling subspace");
  common(vstar_cmd);
  auto* zeros_cmd = app.add_subcommand("zeros", "Transmission zeros");
  common(zeros_cmd);
  zeros_cmd->add_option("--wgrid", opt.wgrid, "Polar grid resolution")->check(CLI::Range(8, 4096));
  auto* sim_cmd = app.add_subcommand("simulate", "Characteristics simulation");
  common(sim_cmd);
  sim_cmd->add_option("--initial", opt.initial, "Initial profile file, or 'random'");
  sim_cmd->add_option("--steps", opt.steps, "Traversal steps")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--grid", opt.grid, "Cells per unit interval")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--mode", opt.mode)->check(CLI::IsMember({"open", "zeroing"}));
  sim_cmd->add_option("--feedback", opt.feedback)->check(CLI::IsMember({"friend", "reduction"}));
  sim_cmd->add_option("-o,--output", opt.output, "Trajectory file");
  sim_cmd->add_option("--s0-max", opt.s0_max, "Upper end of the s0 scan (default 50/p)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(opt);
    if (*split_cmd) return cmd_split(opt);
    if (*analyze_cmd) return cmd_analyze(opt);
    if (*zerodyn_cmd) return cmd_zerodyn(opt);
    if (*vstar_cmd) return cmd_vstar(opt);
    if (*zeros_cmd) return cmd_zeros(opt);
    if (*sim_cmd) return cmd_simulate(opt);
  } catch (const ParseError& e) {
    std::cerr << "error: " << opt.file << ": " << e.what() << "\n";
    return kSchema;
  } catch (const SchemaError& e) {
    std::cerr << "error: schema violation: " << e.what() << "\n";
    return kSchema;
  } catch (const IOError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchema;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchema;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
