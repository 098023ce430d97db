#pragma once

#include "hq/dynamics.hpp"
#include "hq/frames.hpp"
#include "hq/symbol.hpp"

namespace hq {

// Gaussian moments of the ground-state Wigner function of Z (hbar = 1) over 2d-dimensional
// phase-space indices in (p, q) order, and the inverse coefficients mu.
struct MomentTable {
  LagrangianFrame Z;
  int N = 0;
  std::map<MultiIndex, double> lambda, mu;
  // max over even |gamma| <= 2N of the triangular identity defect
  double triangular_residual = 0.0;

  double lam(const MultiIndex& a) const;
  double mu_of(const MultiIndex& a) const;
};

MomentTable moment_table(const LagrangianFrame& Z, int N);

// sum_k chi^(k)(|w|^2) P_k(w) with chi the bump; w has 2d components.
struct CutoffPolynomial {
  int nvars = 0;
  std::map<int, Polynomial> terms;
  // bound on sum_j |a_j - b_j| over zeta^a conj(zeta)^b; the Laplacian, |w|^2 and
  // the Euler operator keep every angular frequency, so it is fixed by the seed
  int angular = -1;

  CutoffPolynomial() = default;
  explicit CutoffPolynomial(const Polynomial& p, bool with_cutoff = true);
  cplx operator()(const Vec& w) const;
  CutoffPolynomial laplacian() const;
  CutoffPolynomial operator+(const CutoffPolynomial& o) const;
  CutoffPolynomial operator*(cplx s) const;
  int degree() const;
  int angular_degree() const { return angular >= 0 ? angular : degree(); }
  bool has_cutoff() const;
};

// Order-N anti-Wick symbol for the standard frame in w coordinates:
// sigma = sum_{m <= N} (-hbar Delta / 4)^m / m! q.
CutoffPolynomial anti_wick_symbol(const CutoffPolynomial& q, int N, double hbar);
// General frame, z coordinates, no cutoff: sum_{m<=N} sum_{|a|=2m} (-1)^m hbar^m mu_a[Z] D^a q / a!.
Polynomial anti_wick_symbol(const Polynomial& q, const MomentTable& m, double hbar);

// Lambda(alpha, gamma) = prod Gamma(alpha_j + gamma_j/2 + 1) / sqrt(alpha_j! (alpha_j + gamma_j)!)
double lambda_prefactor(const MultiIndex& alpha, const MultiIndex& gamma);

// <Op^AW(b) phi_{alpha+gamma}, phi_alpha> for the standard frame at the origin,
// = pi^{-d} int b e^{-|zeta|^2} zeta^alpha conj(zeta)^{alpha+gamma} / sqrt(alpha! (alpha+gamma)!)
// with w = (p, q), q = sqrt(2h) Re zeta, p = sqrt(2h) Im zeta. Exact zero when the angular degree check fails.
cplx bargmann_matrix_element(const CutoffPolynomial& b, const MultiIndex& alpha, const MultiIndex& gamma,
                             double hbar);

// normalized radial integral (1/m!) int_0^inf S^m e^{-S} chi^(k)(2 hbar S) dS
double radial_cutoff_integral(int m, int k, double hbar);

// Dense band over a truncated index set; entry (i, j) couples row alpha_i to column alpha_j.
struct CouplingBand {
  double t = 0.0, hbar = 1.0;
  int N = 0;
  IndexSetPtr index;
  CMat entries;
  // max |entry| / max(|alpha|, 1) over rows (kappa), or max |entry| / (1 + |alpha|) (mu)
  double C = 0.0;
};

// d/dt of the frame normalization, K = N^{-1} dN/dt, from the Sylvester equation.
CMat normalization_velocity(const SymbolModel& P, const LagrangianFrame& Z0, const FlowState& s);

// kappa: the quadratic part of the coefficient generator at a trajectory node (forward time,
// gauge e^{i Lambda/h + rho} removed). Support |beta| >= |alpha|, |alpha - beta| <= 2.
CouplingBand assemble_kappa(const SymbolModel& P, const LagrangianFrame& Z0, const FlowState& s, double hbar,
                            IndexSetPtr index);

// mu_{alpha gamma} = (i/h) <Op^AW(sigma_N(chi P_N)) phi_{alpha+gamma}, phi_alpha> at the node.
// entries(i, j) = mu_{alpha_i, alpha_j - alpha_i}; the coefficient equation uses -entries.
CouplingBand assemble_mu(SymbolPtr P, const FlowState& s, int N, double hbar, IndexSetPtr index);

struct Couplings {
  CouplingBand kappa, mu;
};
Couplings assemble_couplings(SymbolPtr P, const Trajectory& traj, double t, int N, double hbar, IndexSetPtr index);

// Ladder matrices on the index set: [A_j]_{ab} = sqrt(b_j) delta_{a, b - e_j}.
CMat lowering_matrix(const IndexSet& idx, int j);
CMat raising_matrix(const IndexSet& idx, int j);

}  // namespace hq
