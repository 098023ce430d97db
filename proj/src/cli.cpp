#include "hq/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <boost/version.hpp>
#include <fftw3.h>
#include <gsl/gsl_version.h>

#include "hq/averaging.hpp"
#include "hq/dynamics.hpp"
#include "hq/oracle.hpp"

#ifndef HQ_VERSION
#define HQ_VERSION "0.0.0"
#endif

namespace hq {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigInvalid, path + ": " + msg);
}

// recursive descent over + - * / ^ ( ) with numbers, variables and sqrt(const)
class PolyParser {
 public:
  PolyParser(const std::string& s, int d) : s_(s), d_(d) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  const std::string& s_;
  int d_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& m) const {
    throw Error(ErrorKind::ConfigInvalid, "at column " + std::to_string(pos_ + 1) + " of \"" + s_ + "\": " + m);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  Polynomial constant(double v) const { return Polynomial::constant(2 * d_, v); }
  std::optional<cplx> as_constant(const Polynomial& p) const {
    if (p.is_zero()) return cplx(0.0);
    if (p.degree() > 0) return std::nullopt;
    return p.terms().begin()->second;
  }

  Polynomial expr() {
    Polynomial p = term();
    while (true) {
      if (eat('+'))
        p = p + term();
      else if (eat('-'))
        p = p - term();
      else
        return p;
    }
  }
  Polynomial term() {
    Polynomial p = unary();
    while (true) {
      if (eat('*')) {
        p = p * unary();
      } else if (eat('/')) {
        const auto c = as_constant(unary());
        if (!c) fail("division by a non-constant");
        if (*c == 0.0) fail("division by zero");
        p = p * (1.0 / *c);
      } else {
        return p;
      }
    }
  }
  Polynomial unary() {
    if (eat('-')) return unary() * cplx(-1.0);
    if (eat('+')) return unary();
    return power();
  }
  Polynomial power() {
    Polynomial b = primary();
    if (!eat('^')) return b;
    skip();
    std::size_t used = 0;
    int k = -1;
    try {
      k = std::stoi(s_.substr(pos_), &used);
    } catch (const std::exception&) {
      fail("exponent must be a nonnegative integer");
    }
    if (k < 0) fail("exponent must be a nonnegative integer");
    pos_ += used;
    return b.pow(k);
  }
  Polynomial primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!eat(')')) fail("missing ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t e = pos_;
      while (e < s_.size() && std::isalnum(static_cast<unsigned char>(s_[e]))) ++e;
      const std::string id = s_.substr(pos_, e - pos_);
      pos_ = e;
      if (id == "sqrt") {
        if (!eat('(')) fail("sqrt needs '('");
        const auto v = as_constant(expr());
        if (!eat(')')) fail("missing ')'");
        if (!v || v->imag() != 0.0 || v->real() < 0) fail("sqrt of a non-constant or negative argument");
        return constant(std::sqrt(v->real()));
      }
      if (id == "pi") return constant(std::numbers::pi);
      int var = -1;
      if (id == "x" && d_ == 1) var = 0;
      if (id == "xi" && d_ == 1) var = 1;
      if (var < 0) {
        const bool xi = id.rfind("xi", 0) == 0;
        const std::string num = id.substr(xi ? 2 : 1);
        if ((xi || id[0] == 'x') && !num.empty() && std::all_of(num.begin(), num.end(), ::isdigit)) {
          const int j = std::stoi(num);
          if (j >= 1 && j <= d_) var = (xi ? d_ : 0) + j - 1;
        }
      }
      if (var < 0) fail("unknown name '" + id + "' for dimension " + std::to_string(d_));
      return Polynomial::variable(2 * d_, var);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

const std::set<std::string> top_keys{"name",        "scenario", "sweep",   "output", "seed",  "threads",
                                     "tolerances", "acceptance", "observables", "slices"};
const std::set<std::string> scenario_keys{"mode", "dim", "V", "A", "z0", "N", "K", "omega",
                                          "time_nodes", "torus_nodes", "control_window", "control_scale"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) invalid(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) invalid(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) invalid(path, "expected an integer");
  const int v = j.get<int>();
  if (v < lo) invalid(path, "must be >= " + std::to_string(lo));
  return v;
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// {"x": [...], "xi": [...]} -> internal (p, q)
Vec get_point(const json& j, int d, const std::string& path) {
  check_keys(j, {"x", "xi"}, path);
  if (!j.contains("x") || !j.contains("xi")) invalid(path, "needs both x and xi");
  const std::vector<double> x = get_numbers(j["x"], path + ".x"), xi = get_numbers(j["xi"], path + ".xi");
  if (static_cast<int>(x.size()) != d) invalid(path + ".x", "expected " + std::to_string(d) + " entries");
  if (static_cast<int>(xi.size()) != d) invalid(path + ".xi", "expected " + std::to_string(d) + " entries");
  Vec pub(2 * d);
  for (int i = 0; i < d; ++i) {
    pub(i) = x[i];
    pub(d + i) = xi[i];
  }
  return to_internal(pub);
}

json point_json(const Vec& z) {
  const Vec p = to_public(z);
  const int d = static_cast<int>(z.size()) / 2;
  std::vector<double> x(d), xi(d);
  for (int i = 0; i < d; ++i) {
    x[i] = p(i);
    xi[i] = p(d + i);
  }
  return json{{"x", x}, {"xi", xi}};
}

json parse_scenario(const json& j, QuasimodeScenario& s) {
  check_keys(j, scenario_keys, "scenario");
  for (const char* k : {"mode", "V", "A", "z0"})
    if (!j.contains(k)) invalid(std::string("scenario.") + k, "required");
  if (!j["mode"].is_string()) invalid("scenario.mode", "expected a string");
  const std::string mode = j["mode"].get<std::string>();
  if (mode == "T1")
    s.mode = QuasimodeMode::T1;
  else if (mode == "T2")
    s.mode = QuasimodeMode::T2;
  else if (mode == "control")
    s.mode = QuasimodeMode::Control;
  else
    invalid("scenario.mode", "expected T1, T2 or control");
  const int d = j.contains("dim") ? get_int(j["dim"], "scenario.dim", 1) : 1;
  Polynomial V, A;
  for (const char* k : {"V", "A"}) {
    const std::string path = std::string("scenario.") + k;
    if (!j[k].is_string()) invalid(path, "expected a polynomial string");
    try {
      (k[0] == 'V' ? V : A) = parse_polynomial(j[k].get<std::string>(), d);
    } catch (const Error& e) {
      invalid(path, e.what());
    }
  }
  s.P = PolySymbol::from_public(V, A);
  s.z0 = get_point(j["z0"], d, "scenario.z0");
  if (j.contains("N")) s.N = get_int(j["N"], "scenario.N", 2);
  if (j.contains("K")) s.K = get_int(j["K"], "scenario.K", 0);
  if (j.contains("time_nodes")) s.time_nodes = get_int(j["time_nodes"], "scenario.time_nodes", 4);
  if (j.contains("torus_nodes")) s.torus_nodes = get_int(j["torus_nodes"], "scenario.torus_nodes", 4);
  if (s.mode == QuasimodeMode::Control && !j.contains("time_nodes")) s.time_nodes = 384;
  if (j.contains("omega")) {
    const std::vector<double> w = get_numbers(j["omega"], "scenario.omega");
    if (static_cast<int>(w.size()) != d) invalid("scenario.omega", "expected " + std::to_string(d) + " entries");
    s.omega = Eigen::Map<const Vec>(w.data(), d);
  } else if (s.mode == QuasimodeMode::T2) {
    invalid("scenario.omega", "required for T2");
  }
  if (j.contains("control_window")) {
    const std::string w = j["control_window"].is_string() ? j["control_window"].get<std::string>() : "";
    if (w == "gaussian")
      s.control_window = QuasimodeScenario::Window::Gaussian;
    else if (w == "bump")
      s.control_window = QuasimodeScenario::Window::Bump;
    else
      invalid("scenario.control_window", "expected gaussian or bump");
  }
  if (j.contains("control_scale")) {
    s.control_scale = get_number(j["control_scale"], "scenario.control_scale");
    if (!(s.control_scale > 0)) invalid("scenario.control_scale", "must be > 0");
  }
  json r{{"mode", mode},
         {"dim", d},
         {"V", j["V"]},
         {"A", j["A"]},
         {"z0", point_json(s.z0)},
         {"N", s.N},
         {"K", s.K},
         {"time_nodes", s.time_nodes},
         {"torus_nodes", s.torus_nodes}};
  if (s.omega.size()) r["omega"] = std::vector<double>(s.omega.data(), s.omega.data() + s.omega.size());
  if (s.mode == QuasimodeMode::Control) {
    r["control_window"] = s.control_window == QuasimodeScenario::Window::Gaussian ? "gaussian" : "bump";
    r["control_scale"] = s.control_scale;
  }
  return r;
}

double tquantile(int df) {
  boost::math::students_t t(df);
  return boost::math::quantile(t, 0.975);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Polynomial parse_polynomial(const std::string& text, int d) {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  return PolyParser(text, d).parse();
}

double RunConfig::width_target() const {
  if (tol.width_slope) return *tol.width_slope;
  return scenario.mode == QuasimodeMode::Control ? 1.0 : 2.0 / 3.0;
}

double RunConfig::width_band() const {
  if (tol.width_slope_tol) return *tol.width_slope_tol;
  return scenario.mode == QuasimodeMode::T1 ? 0.1 : 0.15;
}

RunConfig parse_config(const json& j) {
  check_keys(j, top_keys, "");
  RunConfig c;
  if (j.contains("name")) {
    if (!j["name"].is_string()) invalid("name", "expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (!j.contains("scenario")) invalid("scenario", "required");
  c.scenario_json = parse_scenario(j["scenario"], c.scenario);
  const int d = c.scenario.P->dim();
  if (!j.contains("sweep")) invalid("sweep", "required");
  check_keys(j["sweep"], {"hbar", "beta_frac"}, "sweep");
  if (!j["sweep"].contains("hbar")) invalid("sweep.hbar", "required");
  c.hbars = get_numbers(j["sweep"]["hbar"], "sweep.hbar");
  if (c.hbars.empty()) invalid("sweep.hbar", "empty");
  if (j["sweep"].contains("beta_frac")) c.beta_fracs = get_numbers(j["sweep"]["beta_frac"], "sweep.beta_frac");
  if (c.beta_fracs.empty()) invalid("sweep.beta_frac", "empty");
  if (j.contains("output")) {
    check_keys(j["output"], {"dir"}, "output");
    if (j["output"].contains("dir")) {
      if (!j["output"]["dir"].is_string()) invalid("output.dir", "expected a string");
      c.out_dir = j["output"]["dir"].get<std::string>();
    }
  }
  if (j.contains("seed")) c.seed = static_cast<unsigned>(get_int(j["seed"], "seed", 0));
  if (j.contains("threads")) c.threads = get_int(j["threads"], "threads", 1);
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, {"width_slope", "width_slope_tol", "beta_cv"}, "tolerances");
    if (t.contains("width_slope")) c.tol.width_slope = get_number(t["width_slope"], "tolerances.width_slope");
    if (t.contains("width_slope_tol"))
      c.tol.width_slope_tol = get_number(t["width_slope_tol"], "tolerances.width_slope_tol");
    if (t.contains("beta_cv")) c.tol.beta_cv = get_number(t["beta_cv"], "tolerances.beta_cv");
  }
  if (j.contains("acceptance")) {
    if (!j["acceptance"].is_array()) invalid("acceptance", "expected an array of suite names");
    for (std::size_t i = 0; i < j["acceptance"].size(); ++i) {
      const json& e = j["acceptance"][i];
      const std::string path = "acceptance[" + std::to_string(i) + "]";
      if (!e.is_string()) invalid(path, "expected a string");
      const std::string n = e.get<std::string>();
      if (n != "width" && n != "beta" && n != "coefficient") invalid(path, "expected width, beta or coefficient");
      c.suites.push_back(n);
    }
  } else {
    c.suites = {"width", "beta"};
  }
  if (j.contains("observables")) {
    if (!j["observables"].is_array()) invalid("observables", "expected an array");
    for (std::size_t i = 0; i < j["observables"].size(); ++i) {
      const std::string path = "observables[" + std::to_string(i) + "]";
      const json& o = j["observables"][i];
      check_keys(o, {"name", "type", "center", "s"}, path);
      if (!o.contains("type") || o["type"] != "gaussian") invalid(path + ".type", "only gaussian is supported");
      GaussianRequest g;
      g.name = o.contains("name") && o["name"].is_string() ? o["name"].get<std::string>() : "obs" + std::to_string(i);
      if (!o.contains("center")) invalid(path + ".center", "required");
      g.center = get_point(o["center"], d, path + ".center");
      if (o.contains("s")) g.s = get_number(o["s"], path + ".s");
      if (!(g.s > 0)) invalid(path + ".s", "must be > 0");
      c.observables.push_back(g);
    }
  }
  if (j.contains("slices")) {
    if (!j["slices"].is_array()) invalid("slices", "expected an array");
    if (d != 1 && !j["slices"].empty()) invalid("slices", "Wigner slices need dim = 1");
    for (std::size_t i = 0; i < j["slices"].size(); ++i) {
      const std::string path = "slices[" + std::to_string(i) + "]";
      const json& o = j["slices"][i];
      check_keys(o, {"name", "x_range", "xi"}, path);
      SliceRequest r;
      r.name = o.contains("name") && o["name"].is_string() ? o["name"].get<std::string>() : "slice" + std::to_string(i);
      if (o.contains("x_range")) {
        const std::vector<double> xr = get_numbers(o["x_range"], path + ".x_range");
        if (xr.size() != 2 || !(xr[0] < xr[1])) invalid(path + ".x_range", "expected [lo, hi] with lo < hi");
        r.x_lo = xr[0];
        r.x_hi = xr[1];
      }
      if (!o.contains("xi")) invalid(path + ".xi", "required");
      r.xi = get_numbers(o["xi"], path + ".xi");
      c.slices.push_back(r);
    }
  }
  for (std::size_t i = 0; i < c.hbars.size(); ++i)
    if (!(c.hbars[i] > 0 && c.hbars[i] < 1))
      invalid("sweep.hbar[" + std::to_string(i) + "]", "must lie in (0, 1)");
  for (std::size_t i = 0; i < c.beta_fracs.size(); ++i)
    if (!(c.beta_fracs[i] >= 0 && c.beta_fracs[i] <= 1))
      invalid("sweep.beta_frac[" + std::to_string(i) + "]", "must lie in [0, 1]");
  if (c.scenario.mode == QuasimodeMode::Control && (c.beta_fracs.size() != 1 || c.beta_fracs[0] != 0.0))
    invalid("sweep.beta_frac", "the control has no beta; use [0]");
  return c;
}

RunConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::ConfigInvalid, p.string() + ": cannot read");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigInvalid, p.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j{{"name", c.name},
         {"scenario", c.scenario_json},
         {"sweep", {{"hbar", c.hbars}, {"beta_frac", c.beta_fracs}}},
         {"output", {{"dir", c.out_dir.string()}}},
         {"seed", c.seed},
         {"threads", c.threads},
         {"acceptance", c.suites}};
  json t{{"beta_cv", c.tol.beta_cv}, {"width_slope", c.width_target()}, {"width_slope_tol", c.width_band()}};
  j["tolerances"] = t;
  json obs = json::array();
  for (const GaussianRequest& g : c.observables)
    obs.push_back({{"name", g.name}, {"type", "gaussian"}, {"center", point_json(g.center)}, {"s", g.s}});
  j["observables"] = obs;
  json sl = json::array();
  for (const SliceRequest& s : c.slices) sl.push_back({{"name", s.name}, {"x_range", {s.x_lo, s.x_hi}}, {"xi", s.xi}});
  j["slices"] = sl;
  return j;
}

void apply_tol_override(RunConfig& c, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) invalid("--tol-override", "expected key=val, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(kv.substr(eq + 1), &used);
    if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    invalid("tolerances." + key, "not a number: '" + kv.substr(eq + 1) + "'");
  }
  if (key == "width_slope")
    c.tol.width_slope = v;
  else if (key == "width_slope_tol")
    c.tol.width_slope_tol = v;
  else if (key == "beta_cv")
    c.tol.beta_cv = v;
  else
    invalid("tolerances." + key, "unknown tolerance");
}

void validate_hypotheses(const RunConfig& c) {
  const QuasimodeScenario& s = c.scenario;
  const SymbolModel& P = *s.P;
  const int d = P.dim();
  const double tol = 1e-9;
  if (s.mode == QuasimodeMode::Control) {
    const auto poly = P.polynomial();
    if (!poly || poly->imag_part().chop(0.0).terms().size() > 0 || poly->degree() > 2)
      invalid("scenario.A", "hypothesis of the control violated: the symbol must be real (A = 0) and quadratic");
    return;
  }
  const double a = P.A(s.z0);
  if (std::abs(a) > tol) invalid("scenario.A", "hypothesis A(z0) = 0 violated (A(z0) = " + format_number(a) + ")");
  const CVec g = P.gradient(s.z0);
  if (g.imag().norm() > tol)
    invalid("scenario.A", "hypothesis dA(z0) = 0 violated (|dA(z0)| = " + format_number(g.imag().norm()) + ")");
  if (g.real().norm() <= tol) invalid("scenario.V", "hypothesis dV(z0) != 0 violated");
  Eigen::SelfAdjointEigenSolver<Mat> es(P.hessian(s.z0).imag());
  if (es.eigenvalues().minCoeff() < -tol)
    invalid("scenario.A", "hypothesis A >= 0 violated near z0 (Hessian of A has eigenvalue " +
                              format_number(es.eigenvalues().minCoeff()) + ")");
  const double g0 = finite_type_constant(P, s.z0).gamma0;
  if (g0 <= 1e-12) invalid("scenario.A", "hypothesis of finite type violated (gamma0 = " + format_number(g0) + ")");
  if (s.mode == QuasimodeMode::T2) {
    const FrequencyVector fv = make_frequency(s.omega);
    if (!fv.periodic() || fv.resonances.empty())
      invalid("scenario.omega", "T2 needs integer frequencies with a resonance");
  }
  (void)d;
}

RunRecord run_single(const RunConfig& c, double hbar, double beta_frac) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord r;
  r.hbar = hbar;
  r.beta_frac = beta_frac;
  r.beta = beta_frac * beta_ceiling(hbar);
  auto stage = [&](const char* name, auto&& f) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigInvalid || e.kind() == ErrorKind::ScenarioInvalid) throw;
      throw Error(ErrorKind::ComputeFailed, std::string(name) + " at hbar " + format_number(hbar) + ": " + e.what(),
                  e.value());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ComputeFailed, std::string(name) + " at hbar " + format_number(hbar) + ": " + e.what());
    }
  };
  const Quasimode q = stage("quasimode", [&] { return assemble_quasimode(c.scenario, hbar, r.beta); });
  const ResidualReport rep = stage("residual", [&] { return residual_and_width(q, c.scenario); });
  r.lambda = q.lambda;
  r.residual = rep.r;
  r.r_boundary = rep.r_boundary;
  r.norm_err = std::abs(rep.norm_grid - 1.0);
  r.L_h = q.cutoff.L;
  r.C_hN = q.C;
  r.raw_norm = q.raw_norm;
  r.quad_err = q.quadrature_error;
  r.leakage = q.leakage;
  r.ground_defect = q.ground_defect;
  r.eigen_residual = rep.eigen_residual;
  for (const GaussianRequest& g : c.observables) {
    const GaussianObservable a{g.center, g.s};
    const cplx v = stage("wigner", [&] { return wigner_observable(q, a); });
    r.observables.push_back({g.name, v, a(c.scenario.z0)});
  }
  if (!c.slices.empty()) {
    stage("wigner", [&] {
      const GridFunction psi = q.sample(rep.grid);
      for (const SliceRequest& s : c.slices) {
        const CMat W = wigner_grid(psi, psi, s.xi);
        for (std::size_t i = 0; i < rep.grid.size(); ++i) {
          const double x = rep.grid.point(i)(0);
          if (x < s.x_lo || x > s.x_hi) continue;
          for (std::size_t k = 0; k < s.xi.size(); ++k)
            r.slice.push_back({s.name, x, s.xi[k], W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)).real()});
        }
      }
      return 0;
    });
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<RunRecord> run_grid(const RunConfig& c) {
  std::vector<std::pair<double, double>> jobs;
  for (double h : c.hbars)
    for (double f : c.beta_fracs) jobs.emplace_back(h, f);
  std::vector<RunRecord> out(jobs.size());
  std::vector<std::exception_ptr> err(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = run_single(c, jobs[i].first, jobs[i].second);
      } catch (...) {
        err[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(c.threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : err)
    if (e) std::rethrow_exception(e);
  return out;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::FitUnavailable, "x and y differ in length");
  const int n = static_cast<int>(x.size());
  if (n < 3) throw Error(ErrorKind::FitUnavailable, "need at least 3 points, have " + std::to_string(n), n);
  Vec lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw Error(ErrorKind::FitUnavailable, "nonpositive value on a log scale");
    lx(i) = std::log(x[i]);
    ly(i) = std::log(y[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double sxx = (lx.array() - mx).square().sum();
  if (sxx <= 0) throw Error(ErrorKind::FitUnavailable, "all x equal");
  LogLogFit f;
  f.n = n;
  f.slope = ((lx.array() - mx) * (ly.array() - my)).sum() / sxx;
  f.intercept = my - f.slope * mx;
  const double rss = (ly.array() - f.intercept - f.slope * lx.array()).square().sum();
  f.stderr_slope = std::sqrt(rss / (n - 2) / sxx);
  const double half = tquantile(n - 2) * f.stderr_slope;
  f.ci_lo = f.slope - half;
  f.ci_hi = f.slope + half;
  return f;
}

BetaFit fit_beta_law(const std::vector<double>& beta, const std::vector<double>& r, double hbar) {
  const int n = static_cast<int>(beta.size());
  if (n < 3 || static_cast<int>(sorted_unique(beta).size()) < 3)
    throw Error(ErrorKind::FitUnavailable, "need at least 3 distinct beta values at hbar " + format_number(hbar));
  BetaFit b;
  b.hbar = hbar;
  b.n = n;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int c) { return beta[a] < beta[c]; });
  b.nonincreasing = true;
  for (int i = 1; i < n; ++i)
    if (r[order[i]] > r[order[i - 1]]) b.nonincreasing = false;
  Vec u(n), ly(n);
  for (int i = 0; i < n; ++i) {
    u(i) = std::pow(beta[i], 1.5) / hbar;
    ly(i) = std::log(r[i]);
  }
  const double mu = u.mean(), my = ly.mean();
  const double slope = ((u.array() - mu) * (ly.array() - my)).sum() / (u.array() - mu).square().sum();
  if (!(slope < 0)) throw Error(ErrorKind::FitUnavailable, "r does not decay in beta^{3/2}/hbar", slope);
  b.C0 = -1.0 / slope;
  const Vec v = (ly.array() + u.array() / b.C0).exp();
  const double m = v.mean();
  b.cv = std::sqrt((v.array() - m).square().sum() / (n - 1)) / m;
  return b;
}

SweepSummary summarize(const RunConfig& c, const std::vector<RunRecord>& recs) {
  SweepSummary s;
  auto wants = [&](const char* suite) { return std::find(c.suites.begin(), c.suites.end(), suite) != c.suites.end(); };
  for (double f : c.beta_fracs) {
    SweepSummary::Width w;
    w.beta_frac = f;
    std::vector<double> h, r;
    for (const RunRecord& x : recs)
      if (x.beta_frac == f) {
        h.push_back(x.hbar);
        r.push_back(x.residual);
      }
    try {
      w.fit = fit_loglog(h, r);
      w.pass = std::abs(w.fit->slope - c.width_target()) <= c.width_band();
    } catch (const Error& e) {
      w.unavailable = e.what();
    }
    // the width law is stated at beta = 0
    if (f == 0.0 && wants("width") && !w.pass) s.pass = false;
    s.width.push_back(w);
  }
  {
    std::vector<double> h, g;
    bool exact = true;
    for (const RunRecord& x : recs)
      if (x.beta_frac == c.beta_fracs.front()) {
        h.push_back(x.hbar);
        g.push_back(x.ground_defect);
        exact = exact && x.ground_defect == 0.0;
      }
    if (exact) {
      s.coefficient_unavailable = "FitUnavailable: Gaussian ansatz is exact, c~_0 = 1 identically";
    } else {
      try {
        s.coefficient = fit_loglog(h, g);
      } catch (const Error& e) {
        s.coefficient_unavailable = e.what();
      }
    }
    if (wants("coefficient") && (!s.coefficient || std::abs(s.coefficient->slope - 0.5) > 0.15)) s.pass = false;
  }
  for (double h : c.hbars) {
    std::vector<double> b, r;
    for (const RunRecord& x : recs)
      if (x.hbar == h) {
        b.push_back(x.beta);
        r.push_back(x.residual);
      }
    try {
      const BetaFit f = fit_beta_law(b, r, h);
      if (wants("beta") && !(f.nonincreasing && f.cv < c.tol.beta_cv)) s.pass = false;
      s.beta.push_back(f);
    } catch (const Error& e) {
      if (b.size() > 1) s.beta_unavailable.push_back(e.what());
    }
  }
  return s;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream o(p, std::ios::binary);
  if (!o) throw Error(ErrorKind::ComputeFailed, "cannot write " + p.string());
  return o;
}

}  // namespace

void write_runs_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs) {
  std::ofstream o = open_out(p);
  o << "hbar,beta,residual,norm_err,L_h,C_hN,beta_frac,lambda_re,lambda_im,r_boundary,raw_norm,quad_err,leakage,"
       "ground_defect,eigen_residual\n";
  for (const RunRecord& r : recs) {
    const double v[] = {r.hbar,          r.beta,     r.residual,       r.norm_err,      r.L_h,
                        r.C_hN,          r.beta_frac, r.lambda.real(), r.lambda.imag(), r.r_boundary,
                        r.raw_norm,      r.quad_err, r.leakage,        r.ground_defect, r.eigen_residual};
    for (std::size_t i = 0; i < std::size(v); ++i) o << (i ? "," : "") << format_number(v[i]);
    o << "\n";
  }
}

void write_observables_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs) {
  std::ofstream o = open_out(p);
  o << "hbar,beta,name,value_re,value_im,a_z0,deviation,quad_err\n";
  for (const RunRecord& r : recs)
    for (const ObservableValue& v : r.observables)
      o << format_number(r.hbar) << "," << format_number(r.beta) << "," << v.name << "," << format_number(v.value.real())
        << "," << format_number(v.value.imag()) << "," << format_number(v.a_z0) << ","
        << format_number(std::abs(v.value - v.a_z0)) << "," << format_number(r.quad_err) << "\n";
}

void write_slices_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs) {
  std::ofstream o = open_out(p);
  o << "hbar,beta,name,x,xi,wigner,quad_err\n";
  for (const RunRecord& r : recs)
    for (const RunRecord::SliceRow& s : r.slice)
      o << format_number(r.hbar) << "," << format_number(r.beta) << "," << s.name << "," << format_number(s.x) << ","
        << format_number(s.xi) << "," << format_number(s.w) << "," << format_number(r.quad_err) << "\n";
}

json summary_json(const SweepSummary& s) {
  auto fit = [](const LogLogFit& f) {
    return json{{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope},
                {"ci95", {f.ci_lo, f.ci_hi}}, {"n", f.n}};
  };
  json j;
  json w = json::array();
  for (const SweepSummary::Width& x : s.width) {
    json e{{"beta_frac", x.beta_frac}};
    if (x.fit) {
      e["fit"] = fit(*x.fit);
      e["status"] = x.pass ? "PASS" : "FAIL";
    } else {
      e["status"] = x.unavailable;
    }
    w.push_back(e);
  }
  j["width_exponent"] = w;
  if (s.coefficient)
    j["coefficient_exponent"] = fit(*s.coefficient);
  else
    j["coefficient_exponent"] = s.coefficient_unavailable;
  json b = json::array();
  for (const BetaFit& f : s.beta)
    b.push_back({{"hbar", f.hbar}, {"C0", f.C0}, {"cv", f.cv}, {"nonincreasing", f.nonincreasing}, {"n", f.n}});
  for (const std::string& m : s.beta_unavailable) b.push_back(m);
  j["beta_law"] = b;
  j["status"] = s.pass ? "PASS" : "FAIL";
  return j;
}

json run_manifest(const RunConfig& c, const std::vector<RunRecord>& recs, double total_seconds,
                  const std::string& verb) {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  json runs = json::array();
  for (const RunRecord& r : recs)
    runs.push_back({{"hbar", r.hbar}, {"beta_frac", r.beta_frac}, {"seconds", r.seconds}});
  return json{{"tool", "hq"},
              {"verb", verb},
              {"config", to_json(c)},
              {"versions",
               {{"hq", HQ_VERSION},
                {"eigen", eigen},
                {"gsl", GSL_VERSION},
                {"boost", BOOST_LIB_VERSION},
                {"fftw", std::string(fftw_version)},
                {"compiler", __VERSION__}}},
              {"timings", {{"total_seconds", total_seconds}, {"runs", runs}}}};
}

}  // namespace hq
