#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include "hq/quasimode.hpp"

namespace hq {

// Polynomial in public variables from text such as "xi + x^2" or "(x1*xi2 - x2*xi1)/sqrt(2)".
// d = 1 accepts x, xi; any d accepts x1..xd, xi1..xid. Variable j < d is x_j, d + j is xi_j.
Polynomial parse_polynomial(const std::string& text, int d);

struct GaussianRequest {
  std::string name;
  Vec center;  // internal order
  double s = 0.5;
};

// W_psi(x, xi) at the grid points with x in [x_lo, x_hi] for each listed xi (d = 1)
struct SliceRequest {
  std::string name;
  double x_lo = -1.0, x_hi = 1.0;
  std::vector<double> xi;
};

// unset entries take the mode default: slope 2/3 (T1, T2) or 1 (control), band 0.1 (T1) or 0.15
struct Tolerances {
  std::optional<double> width_slope, width_slope_tol;
  double beta_cv = 0.5;
};

struct RunConfig {
  std::string name = "run";
  QuasimodeScenario scenario;
  // resolved scenario block, kept for the manifest
  nlohmann::json scenario_json;
  std::vector<double> hbars;
  // beta = frac * (hbar log(1/hbar))^{2/3}
  std::vector<double> beta_fracs{0.0};
  std::filesystem::path out_dir = "out";
  unsigned seed = 1;
  int threads = 1;
  Tolerances tol;
  std::vector<std::string> suites;
  std::vector<GaussianRequest> observables;
  std::vector<SliceRequest> slices;

  double width_target() const;
  double width_band() const;
};

// Throws ConfigInvalid whose message starts with the field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& p);
nlohmann::json to_json(const RunConfig& c);
// key=val against the tolerance block
void apply_tol_override(RunConfig& c, const std::string& kv);
// hypotheses of the construction at z0, checked before any computation
void validate_hypotheses(const RunConfig& c);

struct ObservableValue {
  std::string name;
  cplx value;
  double a_z0 = 0.0;
};

struct RunRecord {
  double hbar = 0.0, beta = 0.0, beta_frac = 0.0;
  cplx lambda;
  double residual = 0.0, r_boundary = 0.0, norm_err = 0.0;
  double L_h = 0.0, C_hN = 0.0, raw_norm = 0.0;
  double quad_err = 0.0, leakage = 0.0, ground_defect = 0.0, eigen_residual = 0.0;
  std::vector<ObservableValue> observables;
  // (slice name, x, xi, W) rows
  struct SliceRow {
    std::string name;
    double x, xi, w;
  };
  std::vector<SliceRow> slice;
  double seconds = 0.0;
};

RunRecord run_single(const RunConfig& c, double hbar, double beta_frac);
// every (hbar, beta_frac) pair, fanned out over c.threads workers; records come back in grid order
std::vector<RunRecord> run_grid(const RunConfig& c);

struct LogLogFit {
  double slope = 0.0, intercept = 0.0, stderr_slope = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  int n = 0;
};
// least squares of log y on log x with a 95% Student-t interval; FitUnavailable below 3 points
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// r ~ c exp(-beta^{3/2} / (C0 hbar)) at fixed hbar: C0 from the regression of log r on beta^{3/2}/hbar,
// cv is the coefficient of variation of r exp(beta^{3/2} / (C0 hbar)) over the points
struct BetaFit {
  double hbar = 0.0;
  double C0 = 0.0, cv = 0.0;
  bool nonincreasing = false;
  int n = 0;
};
BetaFit fit_beta_law(const std::vector<double>& beta, const std::vector<double>& r, double hbar);

struct SweepSummary {
  struct Width {
    double beta_frac = 0.0;
    std::optional<LogLogFit> fit;
    std::string unavailable;
    bool pass = false;
  };
  std::vector<Width> width;
  std::optional<LogLogFit> coefficient;
  std::string coefficient_unavailable;
  std::vector<BetaFit> beta;
  std::vector<std::string> beta_unavailable;
  bool pass = true;
};
SweepSummary summarize(const RunConfig& c, const std::vector<RunRecord>& recs);

void write_runs_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs);
void write_observables_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs);
void write_slices_csv(const std::filesystem::path& p, const std::vector<RunRecord>& recs);
nlohmann::json summary_json(const SweepSummary& s);
nlohmann::json run_manifest(const RunConfig& c, const std::vector<RunRecord>& recs, double total_seconds,
                            const std::string& verb);
std::string format_number(double v);

}  // namespace hq
