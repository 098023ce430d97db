#include "hq/quantization.hpp"

#include <gsl/gsl_sf_gamma.h>

#include <cmath>
#include <mutex>

#include "hq/bump.hpp"
#include "hq/quadrature.hpp"

namespace hq {

namespace {

// E[z^a] for a centered Gaussian with covariance Sigma (Isserlis recursion)
double isserlis(const MultiIndex& a, const Mat& Sigma, std::map<MultiIndex, double>& memo) {
  const int n = static_cast<int>(a.size());
  if (order(a) == 0) return 1.0;
  if (order(a) % 2 == 1) return 0.0;
  auto it = memo.find(a);
  if (it != memo.end()) return it->second;
  int j = 0;
  while (a[j] == 0) ++j;
  MultiIndex b = a;
  b[j] -= 1;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    if (b[k] == 0) continue;
    MultiIndex c = b;
    c[k] -= 1;
    s += Sigma(j, k) * b[k] * isserlis(c, Sigma, memo);
  }
  memo[a] = s;
  return s;
}

bool leq(const MultiIndex& a, const MultiIndex& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

MultiIndex minus(const MultiIndex& a, const MultiIndex& b) {
  MultiIndex c(a.size());
  for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Polynomial radius_squared(int n) {
  Polynomial r(n);
  for (int i = 0; i < n; ++i) {
    MultiIndex m(n, 0);
    m[i] = 2;
    r.add_term(m, 1.0);
  }
  return r;
}

// w in terms of (zeta, conj zeta): q_j = sqrt(2h)(z + zb)/2, p_j = sqrt(2h)(z - zb)/(2i)
CMat bargmann_map(int d, double hbar) {
  const double s = std::sqrt(2.0 * hbar);
  CMat T = CMat::Zero(2 * d, 2 * d);
  for (int j = 0; j < d; ++j) {
    T(j, j) = s / (2.0 * I_unit);
    T(j, d + j) = -s / (2.0 * I_unit);
    T(d + j, j) = s / 2.0;
    T(d + j, d + j) = s / 2.0;
  }
  return T;
}

struct ZetaTerm {
  int k;  // cutoff derivative order, -1 without cutoff
  MultiIndex a, b;
  cplx c;
};

std::vector<ZetaTerm> zeta_terms(const CutoffPolynomial& q, double hbar) {
  const int d = q.nvars / 2;
  const CMat T = bargmann_map(d, hbar);
  std::vector<ZetaTerm> out;
  const bool cut = q.has_cutoff();
  const int ang = q.angular_degree();
  for (const auto& [k, P] : q.terms) {
    Polynomial Pz = P.compose_linear(T);
    for (const auto& [m, c] : Pz.terms()) {
      if (std::abs(c) == 0.0) continue;
      // frequencies above the seed's cancel exactly; only rounding survives there
      int freq = 0;
      for (int j = 0; j < d; ++j) freq += std::abs(m[j] - m[j + d]);
      if (freq > ang) continue;
      out.push_back({cut ? k : -1, MultiIndex(m.begin(), m.begin() + d), MultiIndex(m.begin() + d, m.end()), c});
    }
  }
  return out;
}

// contribution of one zeta monomial to <Op^AW phi_beta, phi_alpha>, beta = alpha + (a - b)
cplx zeta_contribution(const ZetaTerm& z, const MultiIndex& alpha, const MultiIndex& beta, double hbar) {
  const int d = static_cast<int>(alpha.size());
  double logc = 0.0;
  int M = d - 1;
  for (int j = 0; j < d; ++j) {
    const int n = beta[j] + z.b[j];
    logc += std::lgamma(n + 1.0) - 0.5 * std::lgamma(alpha[j] + 1.0) - 0.5 * std::lgamma(beta[j] + 1.0);
    M += n;
  }
  // Dirichlet reduction: the product of radial integrals over the simplex
  // prod n_j! * (1/M!) int S^M e^{-S} h(S) dS
  const double radial = z.k < 0 ? 1.0 : radial_cutoff_integral(M, z.k, hbar);
  return z.c * std::exp(logc) * radial;
}

}  // namespace

double MomentTable::lam(const MultiIndex& a) const {
  auto it = lambda.find(a);
  return it == lambda.end() ? 0.0 : it->second;
}

double MomentTable::mu_of(const MultiIndex& a) const {
  auto it = mu.find(a);
  return it == mu.end() ? 0.0 : it->second;
}

MomentTable moment_table(const LagrangianFrame& Z, int N) {
  const int n = 2 * Z.dim();
  MomentTable t;
  t.Z = Z;
  t.N = N;
  const Mat Sigma = 0.5 * geometry_of(Z).G.inverse();
  std::map<MultiIndex, double> memo;
  IndexSet idx(n, 2 * N);
  std::vector<MultiIndex> even;
  for (int i = 0; i < idx.size(); ++i) {
    const MultiIndex& a = idx.at(i);
    t.lambda[a] = isserlis(a, Sigma, memo);
    if (order(a) % 2 == 0) even.push_back(a);
  }
  // sum_{alpha <= gamma} (-1)^{|alpha|/2} mu_alpha lambda_{gamma-alpha} / (alpha! (gamma-alpha)!) = delta_{gamma 0}
  for (const MultiIndex& g : even) {
    if (order(g) == 0) {
      t.mu[g] = 1.0;
      continue;
    }
    double s = 0.0;
    for (const MultiIndex& a : even) {
      if (a == g || !leq(a, g)) continue;
      const MultiIndex r = minus(g, a);
      s += ((order(a) / 2) % 2 ? -1.0 : 1.0) * t.mu[a] * t.lam(r) / (multi_factorial(a) * multi_factorial(r));
    }
    const double sign = (order(g) / 2) % 2 ? -1.0 : 1.0;
    t.mu[g] = -s * multi_factorial(g) * sign;
  }
  for (int i = 0; i < idx.size(); ++i) {
    const MultiIndex& a = idx.at(i);
    if (order(a) % 2 == 1) t.mu[a] = 0.0;
  }
  for (const MultiIndex& g : even) {
    double s = 0.0;
    for (const MultiIndex& a : even) {
      if (!leq(a, g)) continue;
      const MultiIndex r = minus(g, a);
      s += ((order(a) / 2) % 2 ? -1.0 : 1.0) * t.mu[a] * t.lam(r) / (multi_factorial(a) * multi_factorial(r));
    }
    t.triangular_residual = std::max(t.triangular_residual, std::abs(s - (order(g) == 0 ? 1.0 : 0.0)));
  }
  return t;
}

CutoffPolynomial::CutoffPolynomial(const Polynomial& p, bool with_cutoff) : nvars(p.nvars()), angular(p.degree()) {
  terms[with_cutoff ? 0 : -1] = p;
}

bool CutoffPolynomial::has_cutoff() const { return terms.empty() || terms.begin()->first >= 0; }

cplx CutoffPolynomial::operator()(const Vec& w) const {
  if (!has_cutoff()) return terms.begin()->second(w);
  const int kmax = terms.empty() ? 0 : terms.rbegin()->first;
  const std::vector<double> chi = bump_derivatives(w.squaredNorm(), kmax);
  cplx s = 0.0;
  for (const auto& [k, P] : terms)
    if (chi[k] != 0.0) s += chi[k] * P(w);
  return s;
}

CutoffPolynomial CutoffPolynomial::laplacian() const {
  CutoffPolynomial out;
  out.nvars = nvars;
  out.angular = angular;
  if (!has_cutoff()) {
    out.terms[-1] = terms.begin()->second.laplacian();
    return out;
  }
  const int n = nvars;
  const Polynomial r2 = radius_squared(n);
  auto add = [&](int k, const Polynomial& p) {
    if (p.is_zero()) return;
    auto it = out.terms.find(k);
    if (it == out.terms.end())
      out.terms.emplace(k, p);
    else
      it->second = it->second + p;
  };
  for (const auto& [k, P] : terms) {
    add(k + 2, r2 * P * cplx(4.0));
    Polynomial radial = P * cplx(2.0 * n);
    for (int i = 0; i < n; ++i) radial = radial + Polynomial::variable(n, i) * P.derivative(i) * cplx(4.0);
    add(k + 1, radial);
    add(k, P.laplacian());
  }
  return out;
}

CutoffPolynomial CutoffPolynomial::operator+(const CutoffPolynomial& o) const {
  CutoffPolynomial out = *this;
  if (out.nvars == 0) out.nvars = o.nvars;
  out.angular = (angular < 0 || o.angular < 0) ? -1 : std::max(angular, o.angular);
  for (const auto& [k, P] : o.terms) {
    auto it = out.terms.find(k);
    if (it == out.terms.end())
      out.terms.emplace(k, P);
    else
      it->second = it->second + P;
  }
  return out;
}

CutoffPolynomial CutoffPolynomial::operator*(cplx s) const {
  CutoffPolynomial out = *this;
  for (auto& [k, P] : out.terms) P = P * s;
  return out;
}

int CutoffPolynomial::degree() const {
  int d = -1;
  for (const auto& [k, P] : terms) d = std::max(d, P.degree());
  return d;
}

CutoffPolynomial anti_wick_symbol(const CutoffPolynomial& q, int N, double hbar) {
  CutoffPolynomial sum = q, cur = q;
  double coef = 1.0;
  for (int m = 1; m <= N; ++m) {
    cur = cur.laplacian();
    coef *= -hbar / (4.0 * m);
    sum = sum + cur * cplx(coef);
  }
  return sum;
}

Polynomial anti_wick_symbol(const Polynomial& q, const MomentTable& t, double hbar) {
  const int n = q.nvars();
  Polynomial out = q;
  for (int m = 1; m <= t.N; ++m)
    for (const MultiIndex& a : indices_of_order(n, 2 * m)) {
      const double mu = t.mu_of(a);
      if (mu == 0.0) continue;
      const double c = (m % 2 ? -1.0 : 1.0) * std::pow(hbar, m) * mu / multi_factorial(a);
      out = out + q.derivative(a) * cplx(c);
    }
  return out;
}

double lambda_prefactor(const MultiIndex& alpha, const MultiIndex& gamma) {
  double l = 0.0;
  for (size_t j = 0; j < alpha.size(); ++j) {
    const int b = alpha[j] + gamma[j];
    if (b < 0) throw Error(ErrorKind::IndexOutOfRange, "alpha + gamma has a negative entry");
    l += std::lgamma(alpha[j] + 0.5 * gamma[j] + 1.0) - 0.5 * std::lgamma(alpha[j] + 1.0) - 0.5 * std::lgamma(b + 1.0);
  }
  return std::exp(l);
}

double radial_cutoff_integral(int m, int k, double hbar) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, double> cache;
  const auto key = std::make_tuple(m, k, hbar);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double lo = 1.0 / hbar, hi = 1.5 / hbar;
  const double lgm = std::lgamma(m + 1.0);
  auto weight = [&](double S) { return std::exp(m * std::log(S) - S - lgm); };
  // returns the integral; l1 receives the integral of the absolute integrand
  auto transition = [&](int panels, double& l1) {
    double s = 0.0;
    l1 = 0.0;
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const Rule r = gauss_legendre(32, lo + p * h, lo + (p + 1) * h);
      for (int i = 0; i < r.size(); ++i) {
        const double S = r.x[i];
        const std::vector<double> chi = bump_derivatives(2.0 * hbar * S, k);
        const double f = k == 0 ? 1.0 - chi[0] : chi[k];
        s += r.w[i] * weight(S) * f;
        l1 += r.w[i] * weight(S) * std::abs(f);
      }
    }
    return s;
  };
  double l1a = 0.0, l1 = 0.0;
  const double a = transition(16, l1a), b = transition(32, l1);
  // high derivatives of the bump cancel heavily, so the check is relative to the absolute integral
  if (std::abs(a - b) > 1e-11 * (1.0 + l1))
    throw Error(ErrorKind::QuadratureFailure, "radial cutoff integral not converged", std::abs(a - b));
  double val = k == 0 ? 1.0 - b - gsl_sf_gamma_inc_Q(m + 1.0, hi) : b;
  std::lock_guard<std::mutex> lock(mu);
  cache[key] = val;
  return val;
}

cplx bargmann_matrix_element(const CutoffPolynomial& b, const MultiIndex& alpha, const MultiIndex& gamma,
                             double hbar) {
  const int d = static_cast<int>(alpha.size());
  MultiIndex beta(d);
  for (int j = 0; j < d; ++j) {
    beta[j] = alpha[j] + gamma[j];
    if (beta[j] < 0 || alpha[j] < 0) throw Error(ErrorKind::IndexOutOfRange, "negative index in matrix element");
  }
  int l1 = 0;
  for (int v : gamma) l1 += std::abs(v);
  // angular degree check: zeta^a conj(zeta)^b with |a - b| > deg never matches
  if (l1 > b.angular_degree()) return 0.0;
  cplx s = 0.0;
  for (const ZetaTerm& z : zeta_terms(b, hbar)) {
    bool match = true;
    for (int j = 0; j < d && match; ++j) match = z.a[j] - z.b[j] == gamma[j];
    if (match) s += zeta_contribution(z, alpha, beta, hbar);
  }
  return s;
}

CMat lowering_matrix(const IndexSet& idx, int j) {
  CMat A = CMat::Zero(idx.size(), idx.size());
  for (int c = 0; c < idx.size(); ++c) {
    const int r = idx.shifted(c, j, -1);
    if (r >= 0) A(r, c) = std::sqrt(double(idx.at(c)[j]));
  }
  return A;
}

CMat raising_matrix(const IndexSet& idx, int j) {
  CMat A = CMat::Zero(idx.size(), idx.size());
  for (int c = 0; c < idx.size(); ++c) {
    const int r = idx.shifted(c, j, +1);
    if (r >= 0) A(r, c) = std::sqrt(double(idx.at(c)[j] + 1));
  }
  return A;
}

CMat normalization_velocity(const SymbolModel& P, const LagrangianFrame& Z0, const FlowState& s) {
  const CMat W = s.S * Z0.Z();
  const Mat M = P.hessian(s.z).imag();
  const CMat R = s.N * s.N * (W.adjoint() * M.cast<cplx>() * W) * s.N * s.N;
  Eigen::SelfAdjointEigenSolver<CMat> es(s.N);
  const CMat& U = es.eigenvectors();
  const Vec& ev = es.eigenvalues();
  CMat X = U.adjoint() * R * U;
  for (int i = 0; i < X.rows(); ++i)
    for (int k = 0; k < X.cols(); ++k) X(i, k) /= ev(i) + ev(k);
  const CMat Ndot = U * X * U.adjoint();
  return s.N.inverse() * Ndot;
}

CouplingBand assemble_kappa(const SymbolModel& P, const LagrangianFrame& Z0, const FlowState& s, double hbar,
                            IndexSetPtr index) {
  const int d = Z0.dim();
  const IndexSet& idx = *index;
  const CMat Z = s.Z.Z();
  const CVec g = P.gradient(s.z);
  const Mat M = P.hessian(s.z).imag();
  const CVec a = -std::sqrt(2.0 / hbar) * Z.adjoint() * g.imag().cast<cplx>();
  const CMat Q2 = Z.adjoint() * M.cast<cplx>() * Z.conjugate();
  const CMat K = normalization_velocity(P, Z0, s);
  std::vector<CMat> low(d), up(d);
  for (int j = 0; j < d; ++j) {
    low[j] = lowering_matrix(idx, j);
    up[j] = raising_matrix(idx, j);
  }
  CMat kap = CMat::Zero(idx.size(), idx.size());
  for (int j = 0; j < d; ++j) {
    kap -= a(j) * low[j];
    for (int k = 0; k < d; ++k) {
      kap += 0.5 * Q2(j, k) * low[j] * low[k];
      kap += K(k, j) * up[j] * low[k];
    }
  }
  CouplingBand band;
  band.t = s.t;
  band.hbar = hbar;
  band.index = index;
  band.entries = kap;
  for (int r = 0; r < idx.size(); ++r)
    for (int c = 0; c < idx.size(); ++c) {
      const int w = std::max({order(idx.at(r)), order(idx.at(c)), 1});
      band.C = std::max(band.C, std::abs(kap(r, c)) / w);
    }
  return band;
}

CouplingBand assemble_mu(SymbolPtr P, const FlowState& s, int N, double hbar, IndexSetPtr index) {
  const IndexSet& idx = *index;
  const int d = idx.dim();
  if (idx.max_order() < 2 * N) throw Error(ErrorKind::BandOverflow, "index set order below 2N", idx.max_order());
  CouplingBand band;
  band.t = s.t;
  band.hbar = hbar;
  band.N = N;
  band.index = index;
  band.entries = CMat::Zero(idx.size(), idx.size());
  TaylorSplit ts = taylor_split(P, s.z, N);
  if (!ts.PN.is_zero()) {
    const Mat F = symplectic_of(s.Z);
    const Polynomial q = ts.PN.compose_linear(F.cast<cplx>());
    const CutoffPolynomial sigma = anti_wick_symbol(CutoffPolynomial(q), N, hbar);
    const std::vector<ZetaTerm> terms = zeta_terms(sigma, hbar);
    for (int r = 0; r < idx.size(); ++r) {
      const MultiIndex& alpha = idx.at(r);
      for (const ZetaTerm& z : terms) {
        MultiIndex beta(d);
        for (int j = 0; j < d; ++j) beta[j] = alpha[j] + z.a[j] - z.b[j];
        const int c = idx.find(beta);
        if (c < 0) continue;
        band.entries(r, c) += zeta_contribution(z, alpha, beta, hbar);
      }
    }
    band.entries *= I_unit / hbar;
  }
  for (int r = 0; r < idx.size(); ++r)
    band.C = std::max(band.C, band.entries.row(r).cwiseAbs().maxCoeff() / (1.0 + order(idx.at(r))));
  return band;
}

Couplings assemble_couplings(SymbolPtr P, const Trajectory& traj, double t, int N, double hbar, IndexSetPtr index) {
  const FlowState s = traj.at(t);
  return {assemble_kappa(*P, traj.Z0, s, hbar, index), assemble_mu(P, s, N, hbar, index)};
}

}  // namespace hq
