#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hq/cli.hpp"

using namespace hq;
using nlohmann::json;

namespace {

json t1_json() {
  return json::parse(R"({
    "scenario": {"mode": "T1", "V": "xi", "A": "x^2", "z0": {"x": [0.0], "xi": [0.0]}},
    "sweep": {"hbar": [0.04, 0.02]}
  })");
}

std::string config_error(const json& j) {
  try {
    RunConfig c = parse_config(j);
    validate_hypotheses(c);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("polynomial parser") {
  const Polynomial p = parse_polynomial("xi + x^2", 1);
  const Polynomial x = Polynomial::variable(2, 0), xi = Polynomial::variable(2, 1);
  Vec z(2);
  z << 0.7, -1.3;
  CHECK(std::abs(p(z) - (xi + x * x)(z)) < 1e-15);
  const Polynomial q = parse_polynomial("(x1*xi2 - x2*xi1)/sqrt(2) - 3*(x1 - x2)^2/2 + .5", 2);
  Vec w(4);
  w << 0.3, -0.4, 1.1, 0.9;
  const double expect = (0.3 * 0.9 - (-0.4) * 1.1) / std::sqrt(2.0) - 1.5 * 0.7 * 0.7 + 0.5;
  CHECK(std::abs(q(w) - expect) < 1e-14);
  CHECK(parse_polynomial("-x^0", 1)(z) == cplx(-1.0));
  for (const char* bad : {"x^-1", "x/x", "y", "(x", "x2", "xi + ", "sqrt(x)", "1/0"})
    CHECK_THROWS_AS(parse_polynomial(bad, 1), Error);
  CHECK_THROWS_AS(parse_polynomial("x3", 2), Error);
}

TEST_CASE("config errors name the field") {
  json j = t1_json();
  CHECK(config_error(j).empty());
  j.erase("scenario");
  CHECK(config_error(j).find("scenario: required") != std::string::npos);
  j = t1_json();
  j["scenario"]["z0"]["x"] = {0.0, 1.0};
  CHECK(config_error(j).find("scenario.z0.x: expected 1 entries") != std::string::npos);
  j = t1_json();
  j["sweep"]["hbar"] = {0.02, 1.5};
  CHECK(config_error(j).find("sweep.hbar[1]") != std::string::npos);
  j = t1_json();
  j["scenario"]["colour"] = "red";
  CHECK(config_error(j).find("scenario.colour: unknown field") != std::string::npos);
  j = t1_json();
  j["scenario"]["A"] = "x^2 + ";
  CHECK(config_error(j).rfind("ConfigInvalid: scenario.A: ", 0) == 0);
}

TEST_CASE("hypotheses are checked before any computation") {
  json j = t1_json();
  j["scenario"]["A"] = "x^2 + 0.1";
  CHECK(config_error(j).find("hypothesis A(z0) = 0 violated") != std::string::npos);
  j["scenario"]["A"] = "x^2 + x";
  CHECK(config_error(j).find("hypothesis dA(z0) = 0 violated") != std::string::npos);
  j["scenario"]["A"] = "-x^2";
  CHECK(config_error(j).find("hypothesis A >= 0") != std::string::npos);
  j["scenario"]["A"] = "xi^2";
  CHECK(config_error(j).find("finite type") != std::string::npos);
  j["scenario"]["A"] = "x^2";
  j["scenario"]["V"] = "x^2";
  CHECK(config_error(j).find("dV(z0) != 0") != std::string::npos);
  json c = t1_json();
  c["scenario"]["mode"] = "control";
  CHECK(config_error(c).find("hypothesis of the control") != std::string::npos);
}

TEST_CASE("resolved config round-trips") {
  json j = t1_json();
  j["observables"] = json::parse(R"([{"type": "gaussian", "center": {"x": [0.1], "xi": [0.2]}, "s": 0.3}])");
  j["slices"] = json::parse(R"([{"xi": [0.0, 0.5]}])");
  const RunConfig c = parse_config(j);
  CHECK(c.width_target() == doctest::Approx(2.0 / 3.0));
  CHECK(c.width_band() == 0.1);
  const json r = to_json(c);
  CHECK(to_json(parse_config(r)) == r);
  RunConfig d = c;
  apply_tol_override(d, "beta_cv=0.25");
  CHECK(d.tol.beta_cv == 0.25);
  CHECK_THROWS_AS(apply_tol_override(d, "nonsense=1"), Error);
  CHECK_THROWS_AS(apply_tol_override(d, "beta_cv=abc"), Error);
  const RunConfig b = load_config(std::filesystem::path(HQ_TEST_DATA) / "a_nonzero.cfg");
  CHECK_THROWS_AS(validate_hypotheses(b), Error);
}

TEST_CASE("log-log fit") {
  const std::vector<double> x{0.04, 0.02, 0.01, 0.005};
  std::vector<double> y;
  for (double h : x) y.push_back(3.0 * std::pow(h, 0.75));
  const LogLogFit f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.ci_hi - f.ci_lo < 1e-10);
  // hand computation: log x = (0, log 2, log 4), log y = (0, 1, 1) -> slope 1/(2 log 2),
  // residuals (-1/6, 1/3, -1/6), stderr = sqrt((1/6) / (2 log^2 2)), t(0.975, 1) = 12.7062047362
  const LogLogFit g = fit_loglog({1.0, 2.0, 4.0}, {1.0, std::exp(1.0), std::exp(1.0)});
  const double l2 = std::log(2.0);
  CHECK(g.slope == doctest::Approx(1.0 / (2.0 * l2)).epsilon(1e-12));
  const double se = std::sqrt((1.0 / 6.0) / (2.0 * l2 * l2));
  CHECK(g.stderr_slope == doctest::Approx(se).epsilon(1e-12));
  CHECK(g.ci_hi - g.slope == doctest::Approx(12.7062047362 * se).epsilon(1e-9));
  try {
    fit_loglog({0.01}, {0.1});
    FAIL("expected FitUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FitUnavailable);
  }
}

TEST_CASE("beta law fit") {
  const double h = 0.01;
  std::vector<double> beta, r;
  for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    beta.push_back(f * beta_ceiling(h));
    r.push_back(0.04 * std::exp(-std::pow(beta.back(), 1.5) / (0.3 * h)));
  }
  const BetaFit b = fit_beta_law(beta, r, h);
  CHECK(b.C0 == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(b.cv < 1e-10);
  CHECK(b.nonincreasing);
  CHECK_THROWS_AS(fit_beta_law({0.0, 0.1}, {1.0, 0.5}, h), Error);
  r[2] = 1.0;
  CHECK_FALSE(fit_beta_law(beta, r, h).nonincreasing);
}

TEST_CASE("runs are deterministic across thread counts and reruns") {
  RunConfig c = parse_config(t1_json());
  c.observables.push_back({"g", Vec::Zero(2), 0.5});
  const std::vector<RunRecord> a = run_grid(c);
  c.threads = 2;
  const std::vector<RunRecord> b = run_grid(c);
  const auto dir = std::filesystem::temp_directory_path() / "hq_cli_test";
  write_runs_csv(dir / "a.csv", a);
  write_runs_csv(dir / "b.csv", b);
  const std::string sa = slurp(dir / "a.csv");
  CHECK(sa == slurp(dir / "b.csv"));
  CHECK(sa.rfind("hbar,beta,residual,norm_err,L_h,C_hN,", 0) == 0);
  CHECK(a.size() == 2);
  CHECK(a[0].hbar == 0.04);
  CHECK(a[0].norm_err < 1e-10);
  CHECK(a[0].observables[0].value.real() > 0.8);
  // single hbar: the fit is unavailable but the rows are kept
  const SweepSummary s = summarize(c, {a[0]});
  CHECK(!s.width[0].fit);
  CHECK(s.width[0].unavailable.find("FitUnavailable") != std::string::npos);
  CHECK(!s.pass);
  std::filesystem::remove_all(dir);
}
