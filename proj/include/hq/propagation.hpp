#pragma once

#include <functional>

#include "hq/core.hpp"
#include "hq/dynamics.hpp"
#include "hq/quantization.hpp"

namespace hq {

// sum |c_alpha| e^{rho |alpha|}
double lrho_norm(const CoefficientVector& c, double rho);
double lrho_norm(const CVec& c, const IndexSet& idx, double rho);
// columnwise maximum of the above
double lrho_norm(const CMat& C, const IndexSet& idx, double rho);

// Norm of A as a map l_rho -> l_{rho - sigma} (max over columns of the weighted column sums).
double weighted_operator_norm(const CMat& A, const IndexSet& idx, double rho, double sigma);
// Smallest C with ||A c||_{rho-s} <= C/(e s) ||c||_rho for s on a grid of (0, rho).
double drho_seminorm(const CMat& A, const IndexSet& idx, double rho);
// Same ratio restricted to the given probe columns.
double probe_seminorm(const CMat& A, const CMat& probes, const IndexSet& idx, double rho);

// Time-dependent generator on a fixed index set.
struct BandOperator {
  IndexSetPtr index;
  std::function<CMat(double)> at;
  // optional rows for the shell just above K: images that the truncation drops
  std::function<CMat(double)> spill;

  static BandOperator constant(IndexSetPtr idx, const CMat& A);
  static BandOperator zero(IndexSetPtr idx);
  BandOperator operator+(const BandOperator& o) const;
  BandOperator operator*(cplx s) const;
  // leakage receives the l1 mass of the dropped shell
  CoefficientVector apply(double t, const CoefficientVector& c) const;
};

// Generator kappa - mu along a trajectory (the gauged coefficient equation). spill is filled when
// the index set can be extended by 2N.
BandOperator coefficient_generator(SymbolPtr P, std::shared_ptr<const Trajectory> traj, int N, double hbar,
                                   IndexSetPtr index);

struct PicardOptions {
  int nodes = 16;
  double tol = 1e-12;
  int max_iterations = 200;
  // segment length target: h max ||A(tau)||_inf <= theta
  double theta = 0.5;
};

struct PicardStats {
  int segments = 0;
  int iterations = 0;
  int max_iterations = 0;
  // max over segments of |h| C_rho / sigma with C_rho the exact D_rho seminorm at the nodes
  double max_contraction = 0.0;
  double max_seminorm = 0.0;
  // final l_{rho-sigma} increment relative to the iterate, worst segment
  double max_increment = 0.0;
};

// U(t, t0) C0 on [t0, t1] (either orientation) by Picard iteration of the integral equation
// U = C0 + int A U, with the time integral by Gauss-Legendre collocation on each segment.
class PicardSolution {
 public:
  IndexSetPtr index;
  double t0 = 0.0, t1 = 0.0;
  PicardStats stats;

  CMat operator()(double t) const;
  CoefficientVector vector(double t, int column = 0) const;

  struct Segment {
    double s = 0.0, h = 0.0;
    std::vector<double> tau;
    CMat start;
    // A(tau_j) U(tau_j)
    std::vector<CMat> AU;
  };
  std::vector<Segment> segments;
};

// Single contraction interval: requires |t1| C_rho / sigma < 1 with C_rho the D_rho seminorm sampled on
// the interval (NoContraction otherwise); NotConverged after max_iterations.
PicardSolution picard_propagator(const BandOperator& A, double rho, double sigma, double t1, const CMat& C0,
                                 const PicardOptions& opt = {});
PicardSolution picard_propagator(const BandOperator& A, double rho, double sigma, double t1,
                                 const CoefficientVector& c0, const PicardOptions& opt = {});

// Same iteration chained over automatically sized segments from t0 to t1.
PicardSolution propagate(const BandOperator& A, double rho, double sigma, double t0, double t1, const CMat& C0,
                         const PicardOptions& opt = {});

// int_0^t V(t, r) B(r) U(r, 0) u dr with V the propagator of A + B and U that of A, evaluated by
// Gauss-Legendre in r with each V(t, r) obtained by a separate propagation.
CVec duhamel_integral(const BandOperator& A, const BandOperator& B, const CVec& u, double t, double rho,
                      double sigma, int nodes = 24, const PicardOptions& opt = {});

// i Lambda_t / hbar + rho_t and its time derivative along the flow.
cplx gauge_exponent(const FlowState& s, double hbar);
cplx gauge_rate(const SymbolModel& P, const FlowState& s, const LagrangianFrame& Z0, double hbar);

struct EvolutionOptions {
  double rho = 6.0, sigma = 1.0;
  // fold i Lambda'/hbar + rho' into the generator instead of factoring the scalar gauge
  bool fold_gauge = false;
  PicardOptions picard;
};

struct CoefficientSample {
  double t = 0.0;
  CoefficientVector gauged, physical;
  // sup_{alpha != 0} |c~_alpha| e^{(rho - 3 sigma)|alpha|} / sqrt(hbar)
  double decay = 0.0;
  // |c~_0 - 1| / sqrt(hbar)
  double ground = 0.0;
  // time-integrated l1 mass dropped above K
  double leakage = 0.0;
};

struct CoefficientEvolution {
  std::vector<CoefficientSample> samples;
  PicardStats stats;
};

CoefficientEvolution evolve_coefficients(SymbolPtr P, std::shared_ptr<const Trajectory> traj, int N, double hbar,
                                         IndexSetPtr index, const CoefficientVector& c0,
                                         const std::vector<double>& times, const EvolutionOptions& opt = {});

}  // namespace hq
