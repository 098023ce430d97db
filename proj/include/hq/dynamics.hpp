#pragma once

#include <string>

#include "hq/frames.hpp"
#include "hq/symbol.hpp"

namespace hq {

// One node of the classical flow; all vectors and matrices use (p, q) order.
struct FlowState {
  double t = 0.0;
  Vec z;
  Mat G;
  CMat S;
  CMat N;
  LagrangianFrame Z;
  cplx Lambda = 0.0;
  // rho = (1/2) log det N
  cplx rho = 0.0;
  // continuous branch of log det Q for the normalized frame Z
  cplx log_det_Q = 0.0;
  // same for the unnormalized frame S Z0 (integrated quantity)
  cplx log_det_QW = 0.0;
};

struct FlowStats {
  long steps = 0;
  long rhs_calls = 0;
  int halvings = 0;
  double max_symmetry_defect = 0.0;
  double max_symplectic_defect = 0.0;
  double max_metric_mismatch = 0.0;
  double min_eigenvalue = 0.0;
};

struct FlowOptions {
  double tol = 1e-10;
  // PositivityLost when min eig(G) / max eig(G) drops below this
  double positivity_floor = 1e-10;
  long max_steps = 200000;
};

class Trajectory {
 public:
  std::vector<FlowState> nodes;
  FlowStats stats;
  SymbolPtr symbol;
  LagrangianFrame Z0;
  FlowOptions options;

  // re-integrates from the nearest node
  FlowState at(double t) const;
  const FlowState& node_at(double t) const;
};

// Forward flow for i hbar d/dt = Op(P). States at the requested times (any sign, any order).
Trajectory integrate_flow(SymbolPtr P, const Vec& z0, const LagrangianFrame& Z0, const std::vector<double>& times,
                          const FlowOptions& opt = {});

// Uniform grid of n nodes on [-tmax, tmax], halving tmax on PositivityLost.
Trajectory integrate_flow(SymbolPtr P, const Vec& z0, const LagrangianFrame& Z0, double tmax, int n = 101,
                          const FlowOptions& opt = {});

// Right-hand sides at a state, for tests and diagnostics.
struct FlowDerivative {
  Vec zdot;
  Mat Gdot;
};
FlowDerivative flow_derivative(const SymbolModel& P, const Vec& z, const Mat& G);

// Rotation by tau_j in each (q_j, p_j) plane: the flow of H = sum (p_j^2 + q_j^2)/2.
Vec oscillator_flow(const Vec& z, const Vec& tau);
// Linear part of oscillator_flow as a 2d x 2d real symplectic matrix.
Mat oscillator_matrix(const Vec& tau);

// Checks that integrate_flow on H agrees with oscillator_flow; returns the deviation.
double flow_convention_selftest();

struct FiniteType {
  double gamma0 = 0.0;
  std::vector<std::string> warnings;
};
FiniteType finite_type_constant(const SymbolModel& P, const Vec& z0);

struct TaylorSplit {
  Vec center;
  int N = 2;
  // polynomials in the displacement w = z - center
  Polynomial P2;
  Polynomial PN;
  SymbolPtr symbol;
  // integral remainder of order N + 1 at z
  cplx RN(const Vec& z) const;
};
TaylorSplit taylor_split(SymbolPtr P, const Vec& zt, int N);

}  // namespace hq
