#pragma once

#include <functional>

#include "hq/averaging.hpp"
#include "hq/dynamics.hpp"
#include "hq/hagedorn.hpp"
#include "hq/oracle.hpp"
#include "hq/symbol.hpp"

namespace hq {

enum class QuasimodeMode {
  T1,
  // spectral projection of a T1 quasimode for the averaged symbol onto the omega . E eigenspace of H
  T2,
  // selfadjoint baseline: fixed (hbar-independent) window along the orbit of a real symbol
  Control,
};

struct QuasimodeScenario {
  QuasimodeMode mode = QuasimodeMode::T1;
  // P = V + iA in internal (p, q) order; for T2 this is the averaged symbol
  SymbolPtr P;
  Vec z0;
  int N = 3;
  // Hagedorn order for non-quadratic symbols; quadratic ones stay on the ground state exactly
  int K = 12;
  Vec omega;  // T2
  int time_nodes = 64;
  int torus_nodes = 128;
  // Control only. Bump: window support (-scale, 3 scale). Gaussian: exp(-(t-1)^2/(2 scale^2)) on [1-pi, 1+pi].
  enum class Window { Bump, Gaussian };
  Window control_window = Window::Gaussian;
  double control_scale = 0.4;
};

// desk scenarios
QuasimodeScenario t1_desk_scenario();  // V = xi, A = x^2, z0 = 0
// V = (x1 xi2 - x2 xi1)/sqrt 2, A = ((x1-x2)^2 + (xi1-xi2)^2)/2, z0 = (1,1,0,0)
QuasimodeScenario t2_desk_scenario();
QuasimodeScenario control_scenario();  // H = (x^2 + xi^2)/2, z0 = (x, xi) = (1, 0)

struct CutoffConstants {
  double L = 1.0;
  // time scale hbar^{1/3} L
  double scale = 1.0;
  // jump between the two branches of L at beta = hbar^{2/3}
  double seam_jump = 0.0;
  double chi(double t) const;
};
CutoffConstants cutoff_constants(double beta, double hbar, double gamma0);

// C with C hbar^{1/3} int chi(s/L)^2 exp(2 beta s / hbar^{2/3} - gamma0 s^3/3) ds = 1
double normalization_constant(double beta, double hbar, double gamma0);

// (hbar log(1/hbar))^{2/3}
double beta_ceiling(double hbar);

// exp(-x^T A x / 2 + b . x + c) on R^d
struct GaussianForm {
  CMat A;
  CVec b;
  cplx c = 0.0;
  cplx operator()(const Vec& x) const;
};
// phi_0[Z, z] as a GaussianForm (uses the tracked log det Q branch when present)
GaussianForm ground_form(const WavePacketBasis& b);
// int exp(-w^T A w / 2 + b . w + c) dw for complex symmetric A with positive definite real part
cplx gaussian_integral(const CMat& A, const CVec& b, cplx c);

struct PacketTerm {
  WavePacketBasis basis;
  // Hagedorn coefficients; ground-only terms have size 1
  CVec c;
  cplx weight = 0.0;
  // same node with i hbar chi' in place of chi (boundary term of the residual)
  cplx dweight = 0.0;
  double t = 0.0;  // flow time of the node
  double tau = 0.0;  // torus angle (T2)
};

class Quasimode {
 public:
  int d = 1;
  double hbar = 0.0, beta = 0.0;
  cplx lambda = 0.0;
  double gamma0 = 0.0;
  CutoffConstants cutoff;
  double C = 0.0, Theta = 0.0;
  std::vector<double> t, w, chi;
  std::vector<double> tau;
  std::vector<PacketTerm> terms;
  // ||Theta^{1/2}-scaled psi|| before normalization
  double raw_norm = 0.0;
  // ||psi_n - psi_2n|| with both scaled by the same constant
  double quadrature_error = 0.0;
  // largest leakage reported by the coefficient propagation
  double leakage = 0.0;
  // max over nodes of |c~_0 - 1| for the gauged coefficients (0 on the exact Gaussian ansatz)
  double ground_defect = 0.0;
  // T2
  Vec E;
  double omega_E = 0.0;

  bool ground_only() const;
  cplx value(const Vec& x) const;
  // position grid that resolves every packet (spacing and extent rules of the oracle)
  Grid resolving_grid(double pad = 9.0) const;
  GridFunction sample(const Grid& g) const;
};

Quasimode assemble_quasimode(const QuasimodeScenario& s, double hbar, double beta);

// sum conj(w_j) w_k <phi_j, phi_k> in closed form (ground-only quasimodes)
cplx pair_gram(const std::vector<PacketTerm>& a, const std::vector<PacketTerm>& b);

struct ResidualReport {
  double r = 0.0;
  double norm_grid = 0.0;
  // r through the cutoff-derivative identity (P - lambda) psi = i hbar Theta^{1/2} int chi' e^{-it lambda/hbar} phi dt,
  // exact when the packets solve the evolution exactly (quadratic symbols)
  double r_boundary = 0.0;
  // T2: ||H psi - omega.E psi|| / ||psi||
  double eigen_residual = 0.0;
  double resolvent_lower = 0.0;
  Grid grid;
};
ResidualReport residual_and_width(const Quasimode& q, const QuasimodeScenario& s);

// isotropic Gaussian exp(-|z - center|^2 / (2 s^2)) on phase space (internal order)
struct GaussianObservable {
  Vec center;
  double s = 0.5;
  double operator()(const Vec& z) const;
};

struct Observable {
  std::function<cplx(const Vec&)> a;
  // quadrature box in internal coordinates; a is assumed to vanish outside
  Vec center, half_width;
  bool constant_one = false;
  static Observable one();
  static Observable bump(const Vec& center, double radius);
};

// <Op(a) psi, psi> for Gaussian a in closed form over node pairs
cplx wigner_observable(const Quasimode& q, const GaussianObservable& a);
// lifted-frame Wigner functions of node pairs integrated against a over its box (tensor Gauss-Legendre,
// nodes doubled until two successive values agree within tol); a = 1 returns the Gram pair sum
cplx wigner_observable(const Quasimode& q, const Observable& a, double tol = 1e-9);
// grid Wigner oracle, d = 1
cplx wigner_observable_grid(const Quasimode& q, const std::function<double(const Vec&)>& a, const Grid& g,
                            int nxi = 1024);

struct ResolventReport {
  double sigma_min = 0.0;
  double resolvent_norm = 0.0;
  // ||(P - lambda) psi|| / ||psi|| on the same dense grid
  double r_grid = 0.0;
};
// d = 1 dense grid of n points on the given window
ResolventReport dense_resolvent(const Quasimode& q, const QuasimodeScenario& s, int n, double lo, double hi);

}  // namespace hq
