// hq: quasimode scenarios, sweeps and the invariant self-test.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hq/acceptance.hpp"
#include "hq/cli.hpp"

namespace {

enum Exit { Ok = 0, ConfigError = 2, ComputeError = 3, AcceptanceFailure = 4 };

struct Common {
  std::string out;
  int threads = 0;
  std::vector<std::string> tol;
};

hq::RunConfig prepare(const std::string& path, const Common& o) {
  hq::RunConfig c = hq::load_config(path);
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.threads > 0) c.threads = o.threads;
  for (const std::string& kv : o.tol) hq::apply_tol_override(c, kv);
  hq::validate_hypotheses(c);
  return c;
}

void print_runs(const std::vector<hq::RunRecord>& recs) {
  std::printf("%-10s %-10s %-12s %-10s %-8s %-10s %-10s\n", "hbar", "beta", "residual", "norm_err", "L_h", "C_hN",
              "quad_err");
  for (const hq::RunRecord& r : recs)
    std::printf("%-10.4g %-10.4g %-12.5e %-10.2e %-8.4f %-10.4g %-10.2e\n", r.hbar, r.beta, r.residual, r.norm_err,
                r.L_h, r.C_hN, r.quad_err);
}

void write_outputs(const hq::RunConfig& c, const std::vector<hq::RunRecord>& recs, double secs, const std::string& verb,
                   const hq::SweepSummary* summary) {
  std::filesystem::create_directories(c.out_dir);
  hq::write_runs_csv(c.out_dir / "runs.csv", recs);
  std::vector<std::string> files{"runs.csv"};
  if (!c.observables.empty()) {
    hq::write_observables_csv(c.out_dir / "observables.csv", recs);
    files.push_back("observables.csv");
  }
  if (!c.slices.empty()) {
    hq::write_slices_csv(c.out_dir / "wigner_slices.csv", recs);
    files.push_back("wigner_slices.csv");
  }
  nlohmann::json m = hq::run_manifest(c, recs, secs, verb);
  if (summary) {
    std::ofstream(c.out_dir / "summary.json") << hq::summary_json(*summary).dump(2) << "\n";
    files.push_back("summary.json");
  }
  files.push_back("manifest.json");
  m["outputs"] = files;
  std::ofstream(c.out_dir / "manifest.json") << m.dump(2) << "\n";
}

void print_summary(const hq::RunConfig& c, const hq::SweepSummary& s) {
  for (const auto& w : s.width) {
    if (w.fit)
      std::printf("width exponent (beta/ceiling %.3g): %.4f, 95%% CI [%.4f, %.4f], target %.4f +- %.3f: %s\n",
                  w.beta_frac, w.fit->slope, w.fit->ci_lo, w.fit->ci_hi, c.width_target(), c.width_band(),
                  w.pass ? "PASS" : "FAIL");
    else
      std::printf("width exponent (beta/ceiling %.3g): %s\n", w.beta_frac, w.unavailable.c_str());
  }
  if (s.coefficient)
    std::printf("sqrt(hbar) coefficient exponent: %.4f, 95%% CI [%.4f, %.4f]\n", s.coefficient->slope,
                s.coefficient->ci_lo, s.coefficient->ci_hi);
  else
    std::printf("sqrt(hbar) coefficient exponent: %s\n", s.coefficient_unavailable.c_str());
  for (const hq::BetaFit& b : s.beta)
    std::printf("beta law at hbar %.4g: C0 = %.5f, CV of r exp(beta^1.5/(C0 hbar)) = %.4f (< %.3g), nonincreasing: %s\n",
                b.hbar, b.C0, b.cv, c.tol.beta_cv, b.nonincreasing ? "yes" : "no");
  for (const std::string& m : s.beta_unavailable) std::printf("beta law: %s\n", m.c_str());
  std::printf("sweep: %s\n", s.pass ? "PASS" : "FAIL");
}

int run_verb(const std::string& cfg, const Common& o, bool sweep, const std::vector<double>& hbars,
             const std::vector<double>& fracs) {
  hq::RunConfig c = prepare(cfg, o);
  if (!hbars.empty()) c.hbars = hbars;
  if (!fracs.empty()) c.beta_fracs = fracs;
  // the overridden grid goes through the same schema checks
  c = hq::parse_config(hq::to_json(c));
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<hq::RunRecord> recs = hq::run_grid(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_runs(recs);
  if (sweep) {
    const hq::SweepSummary s = hq::summarize(c, recs);
    write_outputs(c, recs, secs, "sweep", &s);
    print_summary(c, s);
  } else {
    write_outputs(c, recs, secs, "run", nullptr);
  }
  std::printf("wrote %s\n", c.out_dir.string().c_str());
  return Ok;
}

int selftest(bool full, unsigned seed) {
  bool ok = true;
  for (int id : full ? hq::all_criteria() : hq::invariant_criteria()) {
    const hq::CriterionResult r = hq::run_criterion(id, seed);
    std::cout << hq::format_result(r) << std::endl;
    ok = ok && r.pass;
  }
  std::cout << "selftest: " << (ok ? "PASS" : "FAIL") << std::endl;
  return ok ? Ok : AcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-selfadjoint quasimodes from Hagedorn wave packets"};
  app.require_subcommand(1);
  Common o;
  app.add_option("--out", o.out, "output directory (overrides the config)");
  app.add_option("--threads", o.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--tol-override", o.tol, "tolerance override key=val (repeatable)");

  std::string cfg;
  auto* run = app.add_subcommand("run", "run every (hbar, beta) point of a config");
  run->add_option("config", cfg, "config file")->required();
  run->fallthrough();

  std::vector<double> hbars, fracs;
  auto* sweep = app.add_subcommand("sweep", "run a sweep and fit the scaling laws");
  sweep->add_option("config", cfg, "config file")->required();
  sweep->add_option("--hbars", hbars, "hbar values (replace the config list)");
  sweep->add_option("--beta-frac", fracs, "beta as fractions of (hbar log 1/hbar)^{2/3}");
  sweep->fallthrough();

  bool full = false;
  unsigned seed = 7;
  auto* st = app.add_subcommand("selftest", "run the invariant suites");
  st->add_flag("--full", full, "all acceptance criteria, including the scaling sweeps");
  st->add_option("--seed", seed, "seed of the random frames and bands");
  st->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : ConfigError;
  }
  try {
    if (*run) return run_verb(cfg, o, false, {}, {});
    if (*sweep) return run_verb(cfg, o, true, hbars, fracs);
    return selftest(full, seed);
  } catch (const hq::Error& e) {
    std::cerr << "hq: " << e.what() << std::endl;
    const bool config = e.kind() == hq::ErrorKind::ConfigInvalid || e.kind() == hq::ErrorKind::ScenarioInvalid;
    return config ? ConfigError : ComputeError;
  } catch (const std::exception& e) {
    std::cerr << "hq: " << e.what() << std::endl;
    return ComputeError;
  }
}
