#include "hq/quasimode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hq/bump.hpp"
#include "hq/propagation.hpp"
#include "hq/quadrature.hpp"

namespace hq {

namespace {

constexpr double pi = std::numbers::pi;

Polynomial pub_var(int d, int i) { return Polynomial::variable(2 * d, i); }

bool is_quadratic(const SymbolModel& P) {
  const auto poly = P.polynomial();
  return poly && poly->degree() <= 2;
}

// H = sum omega_j (p_j^2 + q_j^2)/2 in internal order
Polynomial oscillator_polynomial(const Vec& w) {
  const int d = static_cast<int>(w.size());
  Polynomial H(2 * d);
  for (int j = 0; j < d; ++j) {
    const Polynomial p = Polynomial::variable(2 * d, j), q = Polynomial::variable(2 * d, d + j);
    H = H + (p * p + q * q) * cplx(0.5 * w(j));
  }
  return H;
}

// sqrt(det A) as the product of principal roots of the eigenvalues (all in the right half plane)
cplx sqrt_det_right_half(const CMat& A) {
  const int n = static_cast<int>(A.rows());
  if (n == 1) return std::sqrt(A(0, 0));
  if (n == 2) {
    const cplx tr = A(0, 0) + A(1, 1), det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    return std::sqrt(0.5 * (tr + disc)) * std::sqrt(0.5 * (tr - disc));
  }
  Eigen::ComplexEigenSolver<CMat> es(A, false);
  cplx s = 1.0;
  for (int i = 0; i < n; ++i) s *= std::sqrt(es.eigenvalues()(i));
  return s;
}

struct TermForm {
  GaussianForm g;
  cplx weight, dweight;
  Vec q, sigma;  // position center and marginal standard deviations of |phi|^2
  Vec kmax;      // per-axis wavenumber reach
};

TermForm term_form(const PacketTerm& t, double pad) {
  TermForm f;
  f.g = ground_form(t.basis);
  f.weight = t.weight;
  const int d = t.basis.frame.dim();
  const double h = t.basis.hbar;
  const CMat B = t.basis.frame.B();
  const Mat ImB = B.imag();
  const Mat cov = 0.5 * h * ImB.inverse();
  const Mat mom = (0.5 * h * (B.adjoint() * ImB.inverse().cast<cplx>() * B)).real();
  f.q = t.basis.center.tail(d);
  f.sigma = cov.diagonal().cwiseSqrt();
  f.kmax = Vec(d);
  for (int a = 0; a < d; ++a)
    f.kmax(a) = (std::abs(t.basis.center(a)) + pad * std::sqrt(std::max(mom(a, a), 0.0))) / h;
  // excited states widen by sqrt(2K + 1)
  if (t.c.size() > 1) {
    const double grow = std::sqrt(2.0 * t.basis.K + 1.0);
    f.sigma *= grow;
    f.kmax *= grow;
  }
  return f;
}

// pair integral of ground forms: <phi_j, phi_k> = int conj(phi_j) phi_k
cplx ground_overlap(const GaussianForm& a, const GaussianForm& b) {
  return gaussian_integral(a.A.conjugate() + b.A, a.b.conjugate() + b.b, std::conj(a.c) + b.c);
}

std::vector<GaussianForm> forms_of(const std::vector<PacketTerm>& ts) {
  std::vector<GaussianForm> out;
  out.reserve(ts.size());
  for (const PacketTerm& t : ts) out.push_back(ground_form(t.basis));
  return out;
}

void require_ground(const std::vector<PacketTerm>& ts, const char* what) {
  for (const PacketTerm& t : ts)
    if (t.c.size() != 1) throw Error(ErrorKind::OracleUnavailable, std::string(what) + " needs ground-state terms");
}

cplx pair_sum(const std::vector<PacketTerm>& a, const std::vector<PacketTerm>& b, bool da, bool db) {
  require_ground(a, "pair_gram");
  require_ground(b, "pair_gram");
  const std::vector<GaussianForm> fa = forms_of(a), fb = forms_of(b);
  cplx s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const cplx wj = std::conj((da ? a[j].dweight : a[j].weight) * a[j].c(0));
    if (wj == 0.0) continue;
    cplx row = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      const cplx wk = (db ? b[k].dweight : b[k].weight) * b[k].c(0);
      if (wk == 0.0) continue;
      row += wk * ground_overlap(fa[j], fb[k]);
    }
    s += wj * row;
  }
  return s;
}

// sum |w| ||phi||, the scale of rounding in pair sums
double weight_mass(const std::vector<PacketTerm>& ts) {
  double m = 0.0;
  for (const PacketTerm& t : ts) m += std::abs(t.weight) * t.c.norm();
  return m;
}

struct NodeSet {
  std::vector<double> t, w, chi, dchi;
  std::vector<PacketTerm> terms;
  double leakage = 0.0;
  double ground_defect = 0.0;
};

struct AssemblyContext {
  const QuasimodeScenario* s;
  double hbar, scale;
  cplx lambda;
  double sqrt_theta;
};

NodeSet build_nodes(const AssemblyContext& cx, int n) {
  const QuasimodeScenario& s = *cx.s;
  const int d = s.P->dim();
  NodeSet ns;
  const bool gauss = s.mode == QuasimodeMode::Control && s.control_window == QuasimodeScenario::Window::Gaussian;
  const Rule r = gauss ? gauss_legendre(n, 1.0 - pi, 1.0 + pi) : gauss_legendre(n, -cx.scale, 3.0 * cx.scale);
  std::vector<double> fwd;
  for (int j = 0; j < n; ++j) {
    ns.t.push_back(r.x[j]);
    ns.w.push_back(r.w[j]);
    if (gauss) {
      const double u = (r.x[j] - 1.0) / cx.scale;
      ns.chi.push_back(std::exp(-0.5 * u * u));
      ns.dchi.push_back(-u / cx.scale * ns.chi.back());
    } else {
      const std::vector<double> b = bump_derivatives(r.x[j] / cx.scale, 1);
      ns.chi.push_back(b[0]);
      ns.dchi.push_back(b[1] / cx.scale);
    }
    fwd.push_back(-r.x[j]);
  }
  std::vector<double> times = fwd;
  times.push_back(0.0);
  auto traj = std::make_shared<Trajectory>(integrate_flow(s.P, s.z0, standard_frame(d), times));
  const bool quad = is_quadratic(*s.P);
  std::vector<CVec> coeffs;
  if (!quad) {
    IndexSetPtr idx = std::make_shared<IndexSet>(d, s.K);
    const CoefficientEvolution ev =
        evolve_coefficients(s.P, traj, s.N, cx.hbar, idx, CoefficientVector::unit(idx, MultiIndex(d, 0)), fwd);
    for (const CoefficientSample& smp : ev.samples) {
      coeffs.push_back(smp.gauged.values);
      ns.leakage = std::max(ns.leakage, smp.leakage);
      ns.ground_defect = std::max(ns.ground_defect, std::abs(smp.gauged.values(0) - 1.0));
    }
  }
  for (int j = 0; j < n; ++j) {
    const FlowState& st = traj->node_at(fwd[j]);
    PacketTerm pt;
    pt.basis = make_basis(st.Z, st.z, cx.hbar, quad ? 0 : s.K);
    pt.basis.log_det_Q = st.log_det_Q;
    pt.c = quad ? CVec::Ones(1) : coeffs[j];
    const cplx phase = std::exp(-I_unit * ns.t[j] * cx.lambda / cx.hbar + gauge_exponent(st, cx.hbar));
    pt.weight = cx.sqrt_theta * ns.w[j] * ns.chi[j] * phase;
    pt.dweight = I_unit * cx.hbar * cx.sqrt_theta * ns.w[j] * ns.dchi[j] * phase;
    pt.t = ns.t[j];
    ns.terms.push_back(std::move(pt));
  }
  return ns;
}

// U(tau) = exp(-i tau H/hbar) applied to every term, times e^{i tau omega.E/hbar}/M
std::vector<PacketTerm> project_terms(const std::vector<PacketTerm>& base, const Vec& omega, double omega_E,
                                      double hbar, int M) {
  const int d = static_cast<int>(omega.size());
  std::vector<PacketTerm> out;
  out.reserve(base.size() * M);
  for (const PacketTerm& t : base) {
    const CMat Z0 = t.basis.frame.Z();
    cplx ld = t.basis.log_det_Q ? *t.basis.log_det_Q : principal_log_det(t.basis.frame.Q());
    cplx prev = t.basis.frame.Q().determinant();
    for (int m = 0; m < M; ++m) {
      const double tau = 2.0 * pi * m / M;
      const Mat R = oscillator_matrix(tau * omega);
      const CMat Z = R.cast<cplx>() * Z0;
      const cplx det = Z.bottomRows(d).determinant();
      if (m > 0) ld += std::log(det / prev);
      prev = det;
      PacketTerm r = t;
      r.basis.frame = frame_unchecked(Z);
      r.basis.center = R * t.basis.center;
      r.basis.log_det_Q = ld;
      const cplx ph = std::exp(I_unit * tau * omega_E / hbar) / static_cast<double>(M);
      r.weight *= ph;
      r.dweight *= ph;
      r.tau = tau;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void scale_terms(std::vector<PacketTerm>& ts, double f) {
  for (PacketTerm& t : ts) {
    t.weight *= f;
    t.dweight *= f;
  }
}

std::vector<PacketTerm> negated(std::vector<PacketTerm> ts) {
  scale_terms(ts, -1.0);
  return ts;
}

template <class T>
std::vector<T> concat(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

QuasimodeScenario t1_desk_scenario() {
  QuasimodeScenario s;
  s.mode = QuasimodeMode::T1;
  const Polynomial x = pub_var(1, 0), xi = pub_var(1, 1);
  s.P = PolySymbol::from_public(xi, x * x);
  s.z0 = Vec::Zero(2);
  return s;
}

QuasimodeScenario t2_desk_scenario() {
  QuasimodeScenario s;
  s.mode = QuasimodeMode::T2;
  const Polynomial x1 = pub_var(2, 0), x2 = pub_var(2, 1), xi1 = pub_var(2, 2), xi2 = pub_var(2, 3);
  const Polynomial dx = x1 - x2, dxi = xi1 - xi2;
  // scaled so that |grad V(z0)| = 1 and gamma0 = 2, the local constants of the T1 desk scenario
  s.P = PolySymbol::from_public((x1 * xi2 - x2 * xi1) * cplx(1.0 / std::sqrt(2.0)), (dx * dx + dxi * dxi) * cplx(0.5));
  s.z0 = to_internal(Vec(Eigen::Vector4d(1, 1, 0, 0)));
  s.omega = Vec::Ones(2);
  return s;
}

QuasimodeScenario control_scenario() {
  QuasimodeScenario s;
  s.mode = QuasimodeMode::Control;
  const Polynomial x = pub_var(1, 0), xi = pub_var(1, 1);
  s.P = PolySymbol::from_public((x * x + xi * xi) * cplx(0.5), Polynomial(2));
  s.z0 = to_internal(Vec(Eigen::Vector2d(1, 0)));
  s.time_nodes = 384;
  return s;
}

double CutoffConstants::chi(double t) const { return bump(t / scale); }

CutoffConstants cutoff_constants(double beta, double hbar, double gamma0) {
  if (beta < 0) throw Error(ErrorKind::ScenarioInvalid, "beta < 0", beta);
  if (gamma0 <= 0) throw Error(ErrorKind::ScenarioInvalid, "gamma0 <= 0", gamma0);
  CutoffConstants c;
  const double h23 = std::pow(hbar, 2.0 / 3.0);
  c.L = beta >= h23 ? std::sqrt(2.0 * beta / (h23 * gamma0)) : 1.0;
  c.scale = std::cbrt(hbar) * c.L;
  c.seam_jump = std::abs(std::sqrt(2.0 / gamma0) - 1.0);
  return c;
}

double normalization_constant(double beta, double hbar, double gamma0) {
  const CutoffConstants c = cutoff_constants(beta, hbar, gamma0);
  const double h23 = std::pow(hbar, 2.0 / 3.0);
  auto f = [&](double s) {
    const double x = bump(s / c.L);
    return x * x * std::exp(2.0 * beta * s / h23 - gamma0 * s * s * s / 3.0);
  };
  // the bump is flat on [-L/2, 2L]; split there so the transitions get their own panels
  const double J = integrate(f, -c.L, -0.5 * c.L, 0.0, 1e-12) + integrate(f, -0.5 * c.L, 2.0 * c.L, 0.0, 1e-12) +
                   integrate(f, 2.0 * c.L, 3.0 * c.L, 0.0, 1e-12);
  return 1.0 / (std::cbrt(hbar) * J);
}

double beta_ceiling(double hbar) { return std::pow(hbar * std::log(1.0 / hbar), 2.0 / 3.0); }

cplx GaussianForm::operator()(const Vec& x) const {
  const CVec xc = x.cast<cplx>();
  return std::exp(-0.5 * (xc.transpose() * A * xc)(0, 0) + (b.transpose() * xc)(0, 0) + c);
}

GaussianForm ground_form(const WavePacketBasis& b) {
  const int d = b.frame.dim();
  const double h = b.hbar;
  const CMat B = b.frame.B();
  const CVec p = b.center.head(d).cast<cplx>(), q = b.center.tail(d).cast<cplx>();
  const cplx ld = b.log_det_Q ? *b.log_det_Q : principal_log_det(b.frame.Q());
  GaussianForm g;
  g.A = -I_unit / h * B;
  g.b = I_unit / h * (p - B * q);
  const cplx qBq = (q.transpose() * B * q)(0, 0);
  const cplx pq = (p.transpose() * q)(0, 0);
  g.c = I_unit / (2.0 * h) * qBq - I_unit / (2.0 * h) * pq - 0.25 * d * std::log(pi * h) - 0.5 * ld;
  return g;
}

cplx gaussian_integral(const CMat& A, const CVec& b, cplx c) {
  const int n = static_cast<int>(A.rows());
  cplx quad;
  if (n == 1) {
    quad = b(0) * b(0) / A(0, 0);
  } else {
    const CVec y = A.partialPivLu().solve(b);
    quad = (b.transpose() * y)(0, 0);
  }
  return std::pow(2.0 * pi, 0.5 * n) / sqrt_det_right_half(A) * std::exp(0.5 * quad + c);
}

bool Quasimode::ground_only() const {
  return std::all_of(terms.begin(), terms.end(), [](const PacketTerm& t) { return t.c.size() == 1; });
}

cplx Quasimode::value(const Vec& x) const {
  cplx s = 0.0;
  for (const PacketTerm& t : terms) {
    if (t.c.size() == 1) {
      s += t.weight * t.c(0) * ground_form(t.basis)(x);
    } else {
      PacketEvaluator ev(t.basis);
      s += t.weight * ev.synthesize(t.c, x);
    }
  }
  return s;
}

Grid Quasimode::resolving_grid(double pad) const {
  Vec lo = Vec::Constant(d, 1e300), hi = Vec::Constant(d, -1e300), k = Vec::Zero(d);
  for (const PacketTerm& t : terms) {
    if (t.weight == 0.0) continue;
    const TermForm f = term_form(t, pad);
    lo = lo.cwiseMin(f.q - pad * f.sigma);
    hi = hi.cwiseMax(f.q + pad * f.sigma);
    k = k.cwiseMax(f.kmax);
  }
  std::vector<int> n(d);
  Vec center = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int a = 0; a < d; ++a) {
    const double dx = std::min(std::sqrt(hbar) / 6.0, pi / std::max(k(a), 1e-300));
    n[a] = static_cast<int>(std::ceil(2.0 * half(a) / dx));
    n[a] += n[a] % 2;
    // keep the spacing within the bound after rounding
    half(a) = 0.5 * n[a] * dx;
  }
  return Grid::centered(center, half, n);
}

GridFunction Quasimode::sample(const Grid& g) const {
  GridFunction out{g, hbar, CVec::Zero(g.size())};
  const double pad = 10.0;
  std::vector<int> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * g.n[a + 1];
  for (const PacketTerm& t : terms) {
    if (t.weight == 0.0) continue;
    const TermForm f = term_form(t, pad);
    std::vector<int> k0(d), k1(d);
    bool empty = false;
    for (int a = 0; a < d; ++a) {
      k0[a] = std::max(0, static_cast<int>(std::floor((f.q(a) - pad * f.sigma(a) - g.lo[a]) / g.dx[a])));
      k1[a] = std::min(g.n[a] - 1, static_cast<int>(std::ceil((f.q(a) + pad * f.sigma(a) - g.lo[a]) / g.dx[a])));
      if (k0[a] > k1[a]) empty = true;
    }
    if (empty) continue;
    std::unique_ptr<PacketEvaluator> ev;
    if (t.c.size() > 1) ev = std::make_unique<PacketEvaluator>(t.basis);
    const cplx w = t.weight * (t.c.size() == 1 ? t.c(0) : cplx(1.0));
    std::vector<int> k = k0;
    Vec x(d);
    while (true) {
      std::size_t flat = 0;
      for (int a = 0; a < d; ++a) {
        x(a) = g.coord(a, k[a]);
        flat += std::size_t(k[a]) * stride[a];
      }
      out.values(flat) += w * (ev ? ev->synthesize(t.c, x) : f.g(x));
      int a = d - 1;
      while (a >= 0 && ++k[a] > k1[a]) {
        k[a] = k0[a];
        --a;
      }
      if (a < 0) break;
    }
  }
  return out;
}

cplx pair_gram(const std::vector<PacketTerm>& a, const std::vector<PacketTerm>& b) { return pair_sum(a, b, false, false); }

Quasimode assemble_quasimode(const QuasimodeScenario& s, double hbar, double beta) {
  if (!s.P) throw Error(ErrorKind::ScenarioInvalid, "no symbol");
  const int d = s.P->dim();
  if (s.z0.size() != 2 * d) throw Error(ErrorKind::ScenarioInvalid, "z0 dimension");
  if (hbar <= 0) throw Error(ErrorKind::ScenarioInvalid, "hbar <= 0", hbar);
  Quasimode q;
  q.d = d;
  q.hbar = hbar;
  q.beta = beta;
  AssemblyContext cx{&s, hbar, 1.0, 0.0, 1.0};
  if (s.mode == QuasimodeMode::Control) {
    if (std::abs(s.P->A(s.z0)) > 1e-12 || !is_quadratic(*s.P))
      throw Error(ErrorKind::ScenarioInvalid, "control needs a real quadratic symbol");
    q.lambda = s.P->value(s.z0);
    cx.scale = s.control_scale;
    q.cutoff.L = 1.0;
    q.cutoff.scale = s.control_scale;
    q.Theta = 1.0;
  } else {
    if (std::abs(s.P->A(s.z0)) > 1e-9) throw Error(ErrorKind::ScenarioInvalid, "A(z0) != 0", s.P->A(s.z0));
    const CVec g = s.P->gradient(s.z0);
    if (g.imag().norm() > 1e-9) throw Error(ErrorKind::ScenarioInvalid, "grad A(z0) != 0", g.imag().norm());
    q.gamma0 = finite_type_constant(*s.P, s.z0).gamma0;
    if (q.gamma0 <= 1e-12) throw Error(ErrorKind::ScenarioInvalid, "gamma0 = 0 (not of finite type)", q.gamma0);
    if (s.mode == QuasimodeMode::T2) {
      if (s.omega.size() != d) throw Error(ErrorKind::ScenarioInvalid, "omega dimension");
      const FrequencyVector fv = make_frequency(s.omega);
      if (fv.resonances.empty() || !fv.periodic())
        throw Error(ErrorKind::ScenarioInvalid, "T2 needs a periodic resonant omega");
    }
    q.cutoff = cutoff_constants(beta, hbar, q.gamma0);
    q.C = normalization_constant(beta, hbar, q.gamma0);
    q.Theta = q.C * g.real().norm() / (std::pow(hbar, 5.0 / 6.0) * std::sqrt(pi));
    q.lambda = cplx(s.P->V(s.z0), beta);
    cx.scale = q.cutoff.scale;
  }
  cx.lambda = q.lambda;
  cx.sqrt_theta = std::sqrt(q.Theta);

  NodeSet coarse = build_nodes(cx, s.time_nodes);
  NodeSet fine = build_nodes(cx, 2 * s.time_nodes);
  q.t = coarse.t;
  q.w = coarse.w;
  q.chi = coarse.chi;
  q.leakage = std::max(coarse.leakage, fine.leakage);
  q.ground_defect = coarse.ground_defect;

  // base: unprojected terms; <P psi_a, P psi_b> = <psi_a, P psi_b> for the orthogonal projection P
  std::vector<PacketTerm> base_c = coarse.terms, base_f = fine.terms, full_c = coarse.terms, full_f = fine.terms;
  if (s.mode == QuasimodeMode::T2) {
    const EnergyLattice el = energy_lattice(s.z0, hbar);
    q.E = el.E;
    q.omega_E = s.omega.dot(el.E);
    for (int m = 0; m < s.torus_nodes; ++m) q.tau.push_back(2.0 * pi * m / s.torus_nodes);
    full_c = project_terms(base_c, s.omega, q.omega_E, hbar, s.torus_nodes);
    full_f = project_terms(base_f, s.omega, q.omega_E, hbar, s.torus_nodes);
  }

  if (coarse.terms.front().c.size() == 1) {
    const double n2 = pair_gram(base_c, full_c).real();
    if (!(n2 > 0)) throw Error(ErrorKind::ComputeFailed, "quasimode norm vanished", n2);
    q.raw_norm = std::sqrt(n2);
    const double f = 1.0 / q.raw_norm;
    scale_terms(base_c, f);
    scale_terms(full_c, f);
    scale_terms(base_f, f);
    scale_terms(full_f, f);
    const double diff2 = pair_gram(concat(base_c, negated(base_f)), concat(full_c, negated(full_f))).real();
    const double mass = weight_mass(base_c) + weight_mass(base_f);
    q.quadrature_error = std::sqrt(std::max(diff2, 0.0) + 1e-15 * mass * mass);
  } else {
    q.terms = full_c;
    const Grid g = q.resolving_grid();
    GridFunction a = q.sample(g);
    q.terms = full_f;
    GridFunction b = q.sample(g);
    q.raw_norm = a.norm();
    const double f = 1.0 / q.raw_norm;
    scale_terms(full_c, f);
    scale_terms(full_f, f);
    a.values = (a.values - b.values) * f;
    q.quadrature_error = a.norm();
  }
  q.terms = std::move(full_c);
  return q;
}

ResidualReport residual_and_width(const Quasimode& q, const QuasimodeScenario& s) {
  if (q.d > 2) throw Error(ErrorKind::OracleUnavailable, "grid residual limited to d <= 2");
  ResidualReport rep;
  rep.grid = q.resolving_grid();
  const GridFunction psi = q.sample(rep.grid);
  rep.norm_grid = psi.norm();
  const GridFunction Ppsi = weyl_apply_grid(*s.P, psi);
  GridFunction res = Ppsi;
  if (s.mode == QuasimodeMode::T2) {
    const GridFunction Hpsi = weyl_apply_grid(oscillator_polynomial(s.omega), psi);
    GridFunction e = Hpsi;
    e.values -= q.omega_E * psi.values;
    rep.eigen_residual = e.norm() / rep.norm_grid;
    res.values = Hpsi.values + q.hbar * Ppsi.values - (q.omega_E + q.hbar * q.lambda) * psi.values;
    rep.r = res.norm() / rep.norm_grid / q.hbar;
    rep.resolvent_lower = 1.0 / (rep.r * q.hbar);
  } else {
    res.values -= q.lambda * psi.values;
    rep.r = res.norm() / rep.norm_grid;
    rep.resolvent_lower = 1.0 / rep.r;
  }
  if (q.ground_only() && is_quadratic(*s.P)) {
    double bd = 0.0;
    if (s.mode == QuasimodeMode::T2) {
      // the boundary term commutes with the projection; base terms are those with tau = 0
      std::vector<PacketTerm> base;
      for (const PacketTerm& t : q.terms)
        if (t.tau == 0.0) {
          PacketTerm b = t;
          b.weight *= static_cast<double>(s.torus_nodes);
          b.dweight *= static_cast<double>(s.torus_nodes);
          base.push_back(b);
        }
      bd = pair_sum(base, q.terms, true, true).real();
    } else {
      bd = pair_sum(q.terms, q.terms, true, true).real();
    }
    rep.r_boundary = std::sqrt(std::max(bd, 0.0));
  }
  return rep;
}

double GaussianObservable::operator()(const Vec& z) const {
  return std::exp(-(z - center).squaredNorm() / (2.0 * s * s));
}

Observable Observable::one() {
  Observable o;
  o.a = [](const Vec&) { return cplx(1.0); };
  o.constant_one = true;
  return o;
}

Observable Observable::bump(const Vec& center, double radius) {
  Observable o;
  o.center = center;
  o.half_width = Vec::Constant(center.size(), radius);
  o.a = [center, radius](const Vec& z) {
    const double r2 = (z - center).squaredNorm() / (radius * radius);
    return r2 >= 1.0 ? cplx(0.0) : cplx(std::exp(1.0 - 1.0 / (1.0 - r2)));
  };
  return o;
}

cplx wigner_observable(const Quasimode& q, const GaussianObservable& a) {
  require_ground(q.terms, "Gaussian observable");
  const int d = q.d;
  const double h = q.hbar, s = a.s;
  const Vec xi_a = a.center.head(d), x_a = a.center.tail(d);
  // kernel of Op(a) as a Gaussian in w = (x, y)
  CMat K = CMat::Zero(2 * d, 2 * d);
  CVec kb = CVec::Zero(2 * d);
  const double m = 1.0 / (4.0 * s * s), u = s * s / (h * h);
  for (int i = 0; i < d; ++i) {
    K(i, i) = K(d + i, d + i) = m + u;
    K(i, d + i) = K(d + i, i) = m - u;
    kb(i) = x_a(i) / (2.0 * s * s) + I_unit * xi_a(i) / h;
    kb(d + i) = x_a(i) / (2.0 * s * s) - I_unit * xi_a(i) / h;
  }
  const cplx kc = -x_a.squaredNorm() / (2.0 * s * s) + std::log(std::pow(2.0 * pi * h, -d) * std::pow(2.0 * pi, 0.5 * d) * std::pow(s, d));
  const std::vector<GaussianForm> f = forms_of(q.terms);
  cplx total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const cplx wj = std::conj(q.terms[j].weight * q.terms[j].c(0));
    cplx row = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      CMat M = K;
      CVec b = kb;
      M.topLeftCorner(d, d) += f[j].A.conjugate();
      M.bottomRightCorner(d, d) += f[k].A;
      b.head(d) += f[j].b.conjugate();
      b.tail(d) += f[k].b;
      row += q.terms[k].weight * q.terms[k].c(0) * gaussian_integral(M, b, kc + std::conj(f[j].c) + f[k].c);
    }
    total += wj * row;
  }
  return total;
}

cplx wigner_observable(const Quasimode& q, const Observable& a, double tol) {
  if (a.constant_one) return pair_gram(q.terms, q.terms);
  const int d = q.d, n2 = 2 * d;
  // W[psi] summed over node pairs at the quadrature points
  auto evaluate = [&](int n) {
    std::vector<Rule> rules;
    for (int i = 0; i < n2; ++i) rules.push_back(gauss_legendre(n, a.center(i) - a.half_width(i), a.center(i) + a.half_width(i)));
    std::vector<Vec> pts;
    std::vector<cplx> wa;
    std::vector<int> k(n2, 0);
    while (true) {
      Vec z(n2);
      double w = 1.0;
      for (int i = 0; i < n2; ++i) {
        z(i) = rules[i].x[k[i]];
        w *= rules[i].w[k[i]];
      }
      const cplx v = a.a(z);
      if (v != 0.0) {
        pts.push_back(z);
        wa.push_back(w * v);
      }
      int i = 0;
      while (i < n2 && ++k[i] == n) k[i++] = 0;
      if (i == n2) break;
    }
    cplx total = 0.0;
    for (const PacketTerm& tj : q.terms)
      for (const PacketTerm& tk : q.terms) {
        const cplx wjk = tj.weight * std::conj(tk.weight);
        if (wjk == 0.0) continue;
        for (int ia = 0; ia < tj.c.size(); ++ia) {
          if (tj.c(ia) == 0.0) continue;
          const MultiIndex al = tj.c.size() == 1 ? MultiIndex(d, 0) : PacketEvaluator(tj.basis).index()->at(ia);
          for (int ib = 0; ib < tk.c.size(); ++ib) {
            if (tk.c(ib) == 0.0) continue;
            const MultiIndex be = tk.c.size() == 1 ? MultiIndex(d, 0) : PacketEvaluator(tk.basis).index()->at(ib);
            const std::vector<cplx> W = wigner_lift_eval(tj.basis, tk.basis, al, be, pts);
            cplx s = 0.0;
            for (std::size_t p = 0; p < pts.size(); ++p) s += wa[p] * W[p];
            total += wjk * tj.c(ia) * std::conj(tk.c(ib)) * s;
          }
        }
      }
    return total;
  };
  const int nmax = d == 1 ? 512 : 48;
  int n = d == 1 ? 32 : 12;
  cplx prev = evaluate(n);
  while (2 * n <= nmax) {
    n *= 2;
    const cplx cur = evaluate(n);
    if (std::abs(cur - prev) <= tol) return cur;
    prev = cur;
  }
  throw Error(ErrorKind::QuadratureFailure, "lifted Wigner quadrature did not settle");
}

cplx wigner_observable_grid(const Quasimode& q, const std::function<double(const Vec&)>& a, const Grid& g, int nxi) {
  if (q.d != 1) throw Error(ErrorKind::OracleUnavailable, "grid Wigner observable is d = 1");
  const GridFunction psi = q.sample(g);
  // the lag sum is periodic in xi with period pi hbar / dx; integrate over one period
  const double period = pi * q.hbar / g.dx[0];
  std::vector<double> xi(nxi);
  for (int k = 0; k < nxi; ++k) xi[k] = -0.5 * period + period * k / nxi;
  const CMat W = wigner_grid(psi, psi, xi);
  cplx total = 0.0;
  Vec z(2);
  for (int i = 0; i < g.n[0]; ++i)
    for (int k = 0; k < nxi; ++k) {
      z << xi[k], g.coord(0, i);
      total += a(z) * W(i, k);
    }
  return total * g.dx[0] * (period / nxi);
}

ResolventReport dense_resolvent(const Quasimode& q, const QuasimodeScenario& s, int n, double lo, double hi) {
  if (q.d != 1) throw Error(ErrorKind::OracleUnavailable, "dense resolvent is d = 1");
  Vec c(1), hw(1);
  c << 0.5 * (lo + hi);
  hw << 0.5 * (hi - lo);
  const Grid g = Grid::centered(c, hw, {n});
  CMat M = weyl_matrix_grid(*s.P, g, q.hbar);
  M -= q.lambda * CMat::Identity(n, n);
  Eigen::BDCSVD<CMat> svd(M);
  ResolventReport rep;
  rep.sigma_min = svd.singularValues().minCoeff();
  rep.resolvent_norm = 1.0 / rep.sigma_min;
  const GridFunction psi = q.sample(g);
  rep.r_grid = (M * psi.values).norm() / psi.values.norm();
  return rep;
}

}  // namespace hq
