#pragma once

#include <functional>

#include "hq/core.hpp"
#include "hq/symbol.hpp"

namespace hq {

// Frequencies of H_omega = sum omega_j (p_j^2 + q_j^2)/2 and the resonance module found over |k|_1 <= kmax.
struct FrequencyVector {
  Vec omega;
  int kmax = 16;
  // integer basis of {k : k . omega = 0}
  std::vector<std::vector<int>> resonances;
  int d_omega = 1;

  int dim() const { return static_cast<int>(omega.size()); }
  bool resonant(const std::vector<int>& k) const;
  // all omega_j integers: the flow is 2 pi periodic
  bool periodic() const;
};

FrequencyVector make_frequency(const Vec& omega, int kmax = 16);

// function of internal (p, q) coordinates
using PhaseFunction = std::function<cplx(const Vec&)>;

// phi_t^H(z) = Phi_z(t omega)
Vec oscillator_orbit(const Vec& z, const FrequencyVector& w, double t);

struct TorusFourierData {
  Vec z;
  int kmax = 0;
  // a_k(z) = int_{T^d} a(Phi_z(tau)) e^{-i k . tau} dtau for |k|_inf <= kmax
  std::map<std::vector<int>, cplx> coeffs;
  // max |a_k| on the shell |k|_inf = kmax
  double shell = 0.0;
};

TorusFourierData torus_fourier(const PhaseFunction& a, const Vec& z, int kmax);

// I_a(z) = (2 pi)^{-d} sum_{k in Lambda_omega} a_k(z); ResolutionTooLow when the shell exceeds 1e-8.
cplx average(const PhaseFunction& a, const Vec& z, const FrequencyVector& w);
cplx average(const SymbolModel& a, const Vec& z, const FrequencyVector& w);
// exact average of a polynomial symbol, again a polynomial
Polynomial average(const Polynomial& p, const FrequencyVector& w);

struct CohomologicalSolution {
  PhaseFunction f;
  // max |I_g| over the sample points (removed from g before solving)
  double removed_mean = 0.0;
};

// f with {H, f} = g - I_g and I_f = 0, where {H, f}(z) = d/dt f(phi_t^H z) at t = 0.
// Periodic omega: Fourier series along the orbit. Otherwise f_k = g_k / (i k . omega) on the torus.
CohomologicalSolution solve_cohomological(const PhaseFunction& g, const FrequencyVector& w,
                                          const std::vector<Vec>& samples);

// d/dt f(phi_t z) at t = 0 by an eighth-order central difference
cplx flow_derivative_of(const PhaseFunction& f, const FrequencyVector& w, const Vec& z, double h = 0.02);

struct DiophantineFit {
  int gamma = 0;
  double varsigma = 0.0;
  std::vector<int> binding;
};
// min over non-resonant 0 < |k|_1 <= kmax of |k . omega| |k|_1^gamma, for gamma in {0, 1, 2, 4}
std::vector<DiophantineFit> diophantine_check(const FrequencyVector& w, int kmax);

// E = hbar (N_j + 1/2) with N_j = round-half-up(H_j(z0)/hbar - 1/2), clipped at 0
struct EnergyLattice {
  Vec E;
  std::vector<int> N;
  bool clipped = false;
};
EnergyLattice energy_lattice(const Vec& z0, double hbar);
// H_j(z) = (p_j^2 + q_j^2)/2
Vec action_vector(const Vec& z);

}  // namespace hq
