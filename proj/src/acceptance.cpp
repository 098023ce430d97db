#include "hq/acceptance.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "hq/averaging.hpp"
#include "hq/cli.hpp"
#include "hq/hagedorn.hpp"
#include "hq/oracle.hpp"
#include "hq/propagation.hpp"
#include "hq/quadrature.hpp"
#include "hq/quantization.hpp"
#include "hq/quasimode.hpp"

namespace hq {

namespace {

constexpr double pi = std::numbers::pi;

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}
std::string sci(double v) { return fmt("%.3e", v); }

Mat random_symmetric(int d, std::mt19937& rng, double s) {
  std::normal_distribution<double> n(0.0, s);
  Mat S(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = n(rng);
  return S;
}

Mat random_symplectic(int d, std::mt19937& rng, double s = 0.7) {
  std::normal_distribution<double> n(0.0, s);
  Mat lower = Mat::Identity(2 * d, 2 * d), upper = Mat::Identity(2 * d, 2 * d), lin = Mat::Zero(2 * d, 2 * d);
  lower.bottomLeftCorner(d, d) = random_symmetric(d, rng, s);
  upper.topRightCorner(d, d) = random_symmetric(d, rng, s);
  Mat A = Mat::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) += 0.3 * n(rng);
  lin.topLeftCorner(d, d) = A;
  lin.bottomRightCorner(d, d) = A.inverse().transpose();
  return lower * lin * upper;
}

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Polynomial pv(int i) { return Polynomial::variable(2, i); }

// xi + i x^2 in internal (p, q) variables
SymbolPtr airy() { return std::make_shared<PolySymbol>(pv(0) + pv(1) * pv(1) * I_unit); }

// the same with a real cubic and quartic in x, so that the Taylor remainder couples the coefficients
SymbolPtr airy_perturbed() {
  const Polynomial x = pv(1);
  return std::make_shared<PolySymbol>(pv(0) + x * x * I_unit + x.pow(3) * cplx(1.0 / 6) + x.pow(4) * cplx(1.0 / 24));
}

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

CriterionResult frames(unsigned seed) {
  CriterionResult r;
  r.title = "frame algebra over 100 random symplectic matrices";
  std::mt19937 rng(seed);
  double worst = 0.0;
  bool pd = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 2;
    const Mat F = random_symplectic(d, rng);
    const LagrangianFrame z = frame_from_symplectic(F, 1e-9);
    const FrameGeometry g = geometry_of(z);
    const Mat W = omega(d), Id = Mat::Identity(2 * d, 2 * d);
    const CMat Ic = Id.cast<cplx>();
    worst = std::max({worst, z.isotropy_residual(), z.normalization_residual(),
                      (symplectic_of(z) - F).cwiseAbs().maxCoeff(), (g.G.transpose() * W * g.G - W).cwiseAbs().maxCoeff(),
                      (g.G - g.G.transpose()).cwiseAbs().maxCoeff(), (g.J * g.J + Id).cwiseAbs().maxCoeff(),
                      max_abs(g.pi_L + g.pi_Lbar - Ic), max_abs(g.pi_L * g.pi_L - g.pi_L),
                      max_abs(g.pi_L - 0.5 * (Ic + I_unit * g.J.cast<cplx>()))});
    Eigen::SelfAdjointEigenSolver<Mat> es(g.G);
    pd = pd && es.eigenvalues().minCoeff() > 0.0;
    // G is invariant under a unitary change of frame
    CMat U = CMat::Identity(d, d);
    if (d == 2) {
      const double th = 0.3 * trial;
      U << std::cos(th), -std::sin(th) * I_unit, -std::sin(th) * I_unit, std::cos(th);
    } else {
      U(0, 0) = std::exp(I_unit * (0.1 * trial));
    }
    const FrameGeometry g2 = geometry_of(make_frame(CMat(z.Z() * U), 1e-9));
    worst = std::max(worst, (g2.G - g.G).cwiseAbs().maxCoeff());
  }
  r.pass = worst <= 1e-9 && pd;
  r.detail = "max invariant defect " + sci(worst) + " (tol 1e-9), G positive definite: " + (pd ? "yes" : "no");
  return r;
}

CriterionResult hagedorn(unsigned seed) {
  CriterionResult r;
  r.title = "Hagedorn Gram matrix and recurrence vs ladder";
  std::mt19937 rng(seed);
  const LagrangianFrame Z = frame_from_symplectic(random_symplectic(1, rng), 1e-9);
  double gram_dev = 0.0;
  for (double h : {1.0, 0.01}) {
    Vec c(2);
    c << 0.4, -0.7;
    PacketEvaluator ev(make_basis(Z, c, h, 8));
    const int n = ev.index()->size();
    const double s = std::sqrt(h) * std::abs(Z.Q()(0, 0));
    const Rule rule = gauss_hermite(120);
    CMat gram = CMat::Zero(n, n);
    for (int i = 0; i < rule.size(); ++i) {
      const CVec phi = ev.all(v1(c(1) + s * rule.x[i]));
      gram += (s * rule.w[i] * std::exp(rule.x[i] * rule.x[i])) * phi.conjugate() * phi.transpose();
    }
    gram_dev = std::max(gram_dev, max_abs(gram - CMat::Identity(n, n)));
  }
  double ladder = 0.0;
  std::normal_distribution<double> nd(0.0, 0.5);
  for (int d : {1, 2}) {
    const LagrangianFrame Zd = frame_from_symplectic(random_symplectic(d, rng), 1e-9);
    const Vec c = Vec::LinSpaced(2 * d, -0.3, 0.5);
    PacketEvaluator ev(make_basis(Zd, c, 0.3, 6));
    for (int trial = 0; trial < 5; ++trial) {
      Vec x = c.tail(d);
      for (int k = 0; k < d; ++k) x(k) += nd(rng);
      const CVec all = ev.all(x);
      for (int i = 0; i < ev.index()->size(); ++i) {
        const MultiIndex& a = ev.index()->at(i);
        CoefficientVector e = CoefficientVector::unit(ev.index(), MultiIndex(d, 0));
        for (int k = 0; k < d; ++k)
          for (int m = 0; m < a[k]; ++m) e = ladder_apply(Ladder::Raise, k, e);
        e.values /= std::sqrt(multi_factorial(a));
        ladder = std::max(ladder, std::abs(ev.synthesize(e.values, x) - all(i)));
      }
    }
  }
  r.pass = gram_dev <= 1e-8 && ladder <= 1e-10;
  r.detail = "Gram |alpha| <= 8 deviation " + sci(gram_dev) + " (tol 1e-8), recurrence vs ladder " + sci(ladder) +
             " (tol 1e-10)";
  return r;
}

CriterionResult lift(unsigned seed) {
  CriterionResult r;
  r.title = "closed-form Wigner lift vs grid Wigner, alpha, beta <= 3";
  std::mt19937 rng(seed);
  const double h = 0.1;
  Vec z1(2), z2(2);
  z1 << 0.3, -0.2;
  z2 << -0.1, 0.25;
  const WavePacketBasis b1 = make_basis(frame_from_symplectic(random_symplectic(1, rng, 0.4), 1e-9), z1, h, 3);
  const WavePacketBasis b2 = make_basis(frame_from_symplectic(random_symplectic(1, rng, 0.4), 1e-9), z2, h, 3);
  // 128 x 128 phase-space grid; the xi range is the full period of the lag sum
  const Grid g = Grid::centered(v1(0.0), v1(63.9 * std::sqrt(h) / 6.0), {128});
  const double period = pi * h / g.dx[0];
  std::vector<double> xi(128);
  for (int s = 0; s < 128; ++s) xi[s] = -period / 2 + period * s / 128;
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (double k : xi) {
      Vec z(2);
      z << k, g.point(i)(0);
      pts.push_back(z);
    }
  PacketEvaluator e1(b1), e2(b2);
  double worst = 0.0;
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) {
      const GridFunction f1 = sample_grid(g, h, [&](const Vec& x) { return e1.value({a}, x); });
      const GridFunction f2 = sample_grid(g, h, [&](const Vec& x) { return e2.value({b}, x); });
      const CMat W = wigner_grid(f1, f2, xi);
      const std::vector<cplx> L = wigner_lift_eval(b1, b2, {a}, {b}, pts);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (int s = 0; s < 128; ++s)
          worst = std::max(worst, std::abs(L[i * 128 + s] - W(static_cast<Eigen::Index>(i), s)));
    }
  r.pass = worst <= 1e-6;
  r.detail = "max |lift - grid| " + sci(worst) + " over 16 pairs on 128^2 points (tol 1e-6), hbar 0.1";
  return r;
}

CriterionResult flow(unsigned) {
  CriterionResult r;
  r.title = "flow invariants for xi + i x^2";
  std::vector<double> nodes;
  // G_xx = 1 - 2t degenerates at t = 1/2, so the window stops one step short
  for (int i = 0; i < 200; ++i) nodes.push_back(-0.5 + 0.005 * i);
  FlowOptions opt;
  opt.tol = 1e-10;
  const Trajectory tr = integrate_flow(airy(), Vec::Zero(2), standard_frame(1), nodes, opt);
  const double inv = std::max({tr.stats.max_symmetry_defect, tr.stats.max_symplectic_defect, tr.stats.max_metric_mismatch});
  bool pd = true;
  for (const FlowState& s : tr.nodes) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s.G);
    pd = pd && es.eigenvalues().minCoeff() > 0.0;
  }
  // selfadjoint control: V = xi + x^3/3 + x^2 xi, A = 0
  const Polynomial p = pv(0), q = pv(1);
  auto R = std::make_shared<PolySymbol>(p + q.pow(3) * cplx(1.0 / 3.0) + q * q * p);
  const Trajectory tc = integrate_flow(R, to_internal(Vec(Eigen::Vector2d(0.2, -0.1))), standard_frame(1), nodes, opt);
  double rho = 0.0, norm = 0.0;
  for (const FlowState& s : tc.nodes) {
    rho = std::max(rho, std::abs(s.rho));
    norm = std::max(norm, std::abs(std::abs(std::exp(I_unit * s.Lambda / 0.01 + s.rho)) - 1.0));
  }
  const FlowDerivative fd = flow_derivative(*airy(), Vec::Zero(2), Mat::Identity(2, 2));
  const Vec zdot = to_public(fd.zdot);
  const double dz = (zdot - Vec(Eigen::Vector2d(1.0, 0.0))).cwiseAbs().maxCoeff();
  const double dG = (to_public_matrix(fd.Gdot) - Mat(Eigen::Vector2d(-2.0, 2.0).asDiagonal())).cwiseAbs().maxCoeff();
  r.pass = inv <= 1e-8 && pd && rho <= 1e-10 && norm <= 1e-8 && dz <= 1e-8 && dG <= 1e-8;
  r.detail = "G defects " + sci(inv) + " (1e-8), PD " + (pd ? "yes" : "no") + "; control |rho| " + sci(rho) +
             " (1e-10), |norm - 1| " + sci(norm) + " (1e-8); z'(0) err " + sci(dz) + ", G'(0) err " + sci(dG);
  r.notes.push_back(std::to_string(tr.nodes.size()) + " nodes on [-0.5, 0.495], flow tol 1e-10");
  return r;
}

CriterionResult mu_structure(unsigned) {
  CriterionResult r;
  r.title = "matrix-element structure of mu";
  const int N = 3;
  SymbolPtr P = airy_perturbed();
  auto index = std::make_shared<const IndexSet>(1, 12);
  const Trajectory tr = integrate_flow(P, Vec::Zero(2), standard_frame(1), std::vector<double>{0.0, -0.05, 0.05});
  bool zero = true;
  auto stored = [&](double h, double& C, double& row0) {
    C = row0 = 0.0;
    for (const FlowState& s : tr.nodes) {
      const CouplingBand b = assemble_mu(P, s, N, h, index);
      for (int i = 0; i < index->size(); ++i)
        for (int j = 0; j < index->size(); ++j)
          if (std::abs(order(index->at(j)) - order(index->at(i))) > 2 * N && b.entries(i, j) != cplx(0.0)) zero = false;
      C = std::max(C, b.C);
      for (int j = 0; j < index->size(); ++j) row0 = std::max(row0, std::abs(b.entries(0, j)));
    }
  };
  std::vector<double> Cs, rows;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    double C, row0;
    stored(h, C, row0);
    Cs.push_back(C);
  }
  for (double h : {1e-2, 1e-3, 1e-4}) {
    double C, row0;
    stored(h, C, row0);
    rows.push_back(row0 / std::sqrt(h));
  }
  const double c_drift = *std::max_element(Cs.begin(), Cs.end()) / Cs.front();
  const double r_drift = *std::max_element(rows.begin(), rows.end()) / rows.front();
  r.pass = zero && c_drift < 3.0 && r_drift < 3.0;
  r.detail = std::string("band outside |alpha - gamma| <= 2N bit-zero: ") + (zero ? "yes" : "no") +
             "; max_hbar C / C(0.1) = " + fmt("%.3f", c_drift) + " (< 3); max_hbar |mu_a0|/sqrt(h) / value at 1e-2 = " +
             fmt("%.3f", r_drift) + " (< 3)";
  r.notes.push_back("stored C over hbar 1e-1, 1e-2, 1e-3: " + sci(Cs[0]) + ", " + sci(Cs[1]) + ", " + sci(Cs[2]));
  r.notes.push_back("|mu_a0|/sqrt(hbar) over hbar 1e-2, 1e-3, 1e-4: " + sci(rows[0]) + ", " + sci(rows[1]) + ", " +
                    sci(rows[2]));
  return r;
}

// |alpha - beta| <= 2; lowering_only keeps |beta| >= |alpha|
CMat random_band(const IndexSet& idx, std::mt19937& rng, double scale, bool lowering_only) {
  std::normal_distribution<double> g(0.0, scale);
  CMat A = CMat::Zero(idx.size(), idx.size());
  for (int r = 0; r < idx.size(); ++r)
    for (int c = 0; c < idx.size(); ++c) {
      const int ar = order(idx.at(r)), ac = order(idx.at(c));
      if (std::abs(ar - ac) > 2 || (lowering_only && ac < ar)) continue;
      A(r, c) = cplx(g(rng), g(rng));
    }
  return A;
}

double rel(const CVec& a, const CVec& b) { return (a - b).norm() / b.norm(); }

CriterionResult picard(unsigned seed) {
  CriterionResult r;
  r.title = "Picard propagation vs dense oracle, K = 10";
  std::mt19937 rng(seed);
  auto idx = std::make_shared<const IndexSet>(1, 10);
  const int n = idx->size();
  std::normal_distribution<double> g;
  auto random_vec = [&] {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const CVec c0 = random_vec();
    const CMat L = random_band(*idx, rng, 0.3, true);
    const double t1 = 0.8 / drho_seminorm(L, *idx, 6.0);
    const PicardSolution p = picard_propagator(BandOperator::constant(idx, L), 6.0, 1.0, t1, CMat(c0));
    worst = std::max(worst, rel(p(t1).col(0), dense_propagate(L, c0, t1)));
    const CMat A0 = random_band(*idx, rng, 0.5, false), A1 = random_band(*idx, rng, 0.5, false);
    BandOperator A;
    A.index = idx;
    A.at = [=](double t) { return CMat(A0 + std::sin(2 * t) * A1); };
    const PicardSolution q = propagate(A, 6.0, 1.0, 0.0, -1.5, CMat(c0));
    for (double t : {-0.4, -1.5}) worst = std::max(worst, rel(q(t).col(0), dense_propagate(A.at, c0, 0.0, t, 1e-13)));
  }
  const CMat A0 = random_band(*idx, rng, 0.5, true), B0 = random_band(*idx, rng, 0.2, false);
  BandOperator A, B;
  A.index = B.index = idx;
  A.at = [=](double t) { return CMat(A0 * (1.0 + 0.3 * t)); };
  B.at = [=](double t) { return CMat(B0 * std::cos(t)); };
  const CVec u = random_vec();
  double duhamel = 0.0;
  for (double t : {0.7, -0.5}) {
    const CVec ut = propagate(A, 6.0, 1.0, 0.0, t, CMat(u))(t).col(0);
    const CVec vt = propagate(A + B, 6.0, 1.0, 0.0, t, CMat(u))(t).col(0);
    duhamel = std::max(duhamel, (vt - ut - duhamel_integral(A, B, u, t, 6.0, 1.0)).norm() / vt.norm());
  }
  r.pass = worst <= 1e-8 && duhamel <= 1e-8;
  r.detail = "relative error vs dense " + sci(worst) + " (tol 1e-8), Duhamel identity " + sci(duhamel) + " (tol 1e-8)";
  return r;
}

struct CoefficientScan {
  std::vector<double> ground, decay;
};

CoefficientScan coefficient_scan(const std::vector<double>& hs, const std::function<std::vector<double>(double)>& times) {
  SymbolPtr P = airy_perturbed();
  auto tr = std::make_shared<const Trajectory>(integrate_flow(P, Vec::Zero(2), standard_frame(1), std::vector<double>{0.0}));
  auto idx = std::make_shared<const IndexSet>(1, 12);
  CoefficientScan out;
  for (double h : hs) {
    const CoefficientEvolution ev = evolve_coefficients(P, tr, 3, h, idx, CoefficientVector::unit(idx, {0}), times(h));
    double g = 0.0, dcy = 0.0;
    for (const CoefficientSample& s : ev.samples) {
      g = std::max(g, std::abs(s.gauged.values(0) - 1.0));
      dcy = std::max(dcy, s.decay);
    }
    out.ground.push_back(g);
    out.decay.push_back(dcy);
  }
  return out;
}

CriterionResult coefficients(unsigned) {
  CriterionResult r;
  r.title = "coefficient asymptotics |c0/e^gauge - 1| ~ sqrt(hbar)";
  const std::vector<double> hs{1e-2, 1e-3, 1e-4};
  // fixed window |t| <= 0.03 where the coefficient propagation is contracting
  const CoefficientScan fixed = coefficient_scan(hs, [](double) {
    std::vector<double> t;
    for (int k = -4; k <= 4; ++k)
      if (k) t.push_back(0.03 * k / 4.0);
    return t;
  });
  std::string slope_txt = "unavailable";
  bool slope_ok = false;
  try {
    const LogLogFit f = fit_loglog(hs, fixed.ground);
    slope_ok = std::abs(f.slope - 0.5) <= 0.15;
    slope_txt = fmt("%.3f", f.slope) + " [" + fmt("%.3f", f.ci_lo) + ", " + fmt("%.3f", f.ci_hi) + "]";
  } catch (const Error& e) {
    slope_txt = e.what();
  }
  const double drift = *std::max_element(fixed.decay.begin(), fixed.decay.end()) / fixed.decay.front();
  r.pass = slope_ok && drift < 3.0;
  r.detail = "slope " + slope_txt + " (target 0.5 +- 0.15), decay sup drift " + fmt("%.3f", drift) + " (< 3)";
  r.notes.push_back("|t| <= 0.03, |c0 - 1| at hbar 1e-2, 1e-3, 1e-4: " + sci(fixed.ground[0]) + ", " +
                    sci(fixed.ground[1]) + ", " + sci(fixed.ground[2]));
  r.notes.push_back("decay diagnostic: " + sci(fixed.decay[0]) + ", " + sci(fixed.decay[1]) + ", " + sci(fixed.decay[2]));
  // window variant: the quasimode time window (-3 hbar^{1/3}, hbar^{1/3}) in forward time
  const CoefficientScan win = coefficient_scan(hs, [](double h) {
    const double w = std::cbrt(h);
    std::vector<double> t;
    for (int k = 1; k <= 6; ++k) {
      t.push_back(-3 * w * k / 6);
      t.push_back(w * k / 6);
    }
    return t;
  });
  std::string wtxt;
  try {
    wtxt = fmt("%.3f", fit_loglog(hs, win.ground).slope);
  } catch (const Error& e) {
    wtxt = e.what();
  }
  r.notes.push_back("info: hbar-scaled window (-3 hbar^1/3, hbar^1/3): |c0 - 1| = " + sci(win.ground[0]) + ", " +
                    sci(win.ground[1]) + ", " + sci(win.ground[2]) + ", slope " + wtxt);
  return r;
}

RunConfig desk_config(const QuasimodeScenario& s, std::vector<double> hbars, std::vector<double> fracs = {0.0}) {
  RunConfig c;
  c.scenario = s;
  c.hbars = std::move(hbars);
  c.beta_fracs = std::move(fracs);
  return c;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + sci(v[i]);
  return s;
}

double width_slope(const std::vector<RunRecord>& recs, std::vector<double>* r_out = nullptr) {
  std::vector<double> h, r;
  for (const RunRecord& x : recs) {
    h.push_back(x.hbar);
    r.push_back(x.residual);
  }
  if (r_out) *r_out = r;
  return fit_loglog(h, r).slope;
}

CriterionResult width_law(unsigned) {
  CriterionResult r;
  r.title = "non-selfadjoint width law r ~ hbar^{2/3}";
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = desk_config(t1_desk_scenario(), {0.04, 0.02, 0.01, 0.005});
  std::vector<double> rs;
  const std::vector<RunRecord> recs = run_grid(c);
  const LogLogFit f = [&] {
    std::vector<double> h;
    for (const RunRecord& x : recs) {
      h.push_back(x.hbar);
      rs.push_back(x.residual);
    }
    return fit_loglog(h, rs);
  }();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const RunConfig cb = desk_config(t1_desk_scenario(), {0.01}, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  const std::vector<RunRecord> rb = run_grid(cb);
  std::vector<double> beta, rbeta;
  for (const RunRecord& x : rb) {
    beta.push_back(x.beta);
    rbeta.push_back(x.residual);
  }
  const BetaFit bf = fit_beta_law(beta, rbeta, 0.01);
  const bool slope_ok = std::abs(f.slope - 2.0 / 3.0) <= 0.1;
  r.pass = slope_ok && secs < 600 && bf.nonincreasing && bf.cv < 0.5;
  r.detail = "slope " + fmt("%.3f", f.slope) + " [" + fmt("%.3f", f.ci_lo) + ", " + fmt("%.3f", f.ci_hi) +
             "] (2/3 +- 0.1) in " + fmt("%.1f", secs) + " s (< 600); beta sweep nonincreasing " +
             (bf.nonincreasing ? "yes" : "no") + ", C0 " + fmt("%.4f", bf.C0) + ", CV " + fmt("%.3f", bf.cv) + " (< 0.5)";
  r.notes.push_back("r at hbar 0.04, 0.02, 0.01, 0.005: " + list(rs));
  r.notes.push_back("r at hbar 0.01, beta/ceiling 0..1: " + list(rbeta));
  return r;
}

CriterionResult concentration(unsigned) {
  CriterionResult r;
  r.title = "Wigner concentration at z0";
  const QuasimodeScenario s = t1_desk_scenario();
  const GaussianObservable ga{s.z0, 0.5};
  std::vector<double> dev;
  for (double h : {0.04, 0.02, 0.01, 0.005})
    dev.push_back(std::abs(wigner_observable(assemble_quasimode(s, h, 0.0), ga) - ga(s.z0)));
  bool dec = true;
  for (std::size_t i = 1; i < dev.size(); ++i) dec = dec && dev[i] < dev[i - 1];
  const Observable far = Observable::bump(to_internal(Vec(Eigen::Vector2d(0.0, 1.0))), 0.3);
  const double fv = std::abs(wigner_observable(assemble_quasimode(s, 0.01, 0.0), far));
  r.pass = dec && fv <= 1e-6;
  r.detail = std::string("Gaussian deviation strictly decreasing: ") + (dec ? "yes" : "no") +
             "; far bump at (x, xi) = (0, 1), radius 0.3: " + sci(fv) + " (<= 1e-6)";
  r.notes.push_back("|<Op(a) psi, psi> - a(z0)| at hbar 0.04, 0.02, 0.01, 0.005: " + list(dev));
  return r;
}

CriterionResult resolvent(unsigned) {
  CriterionResult r;
  r.title = "resolvent lower bound from the quasimode";
  const QuasimodeScenario s = t1_desk_scenario();
  const Quasimode q = assemble_quasimode(s, 0.02, 0.0);
  const double rh = residual_and_width(q, s).r;
  const ResolventReport rr = dense_resolvent(q, s, 1024, -6.0, 6.0);
  r.pass = rr.resolvent_norm >= 0.9 / rh;
  r.detail = "||(P - lambda)^-1|| = " + fmt("%.3f", rr.resolvent_norm) + " vs 0.9/r = " + fmt("%.3f", 0.9 / rh) +
             " (1/r = " + fmt("%.3f", 1.0 / rh) + "), grid 1024 on [-6, 6]";
  return r;
}

CriterionResult averaging(unsigned seed) {
  CriterionResult r;
  r.title = "averaging and the cohomological equation, omega = (1, 1)";
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  std::vector<Vec> pts;
  for (int i = 0; i < 60; ++i) {
    Vec z(4);
    for (int k = 0; k < 4; ++k) z(k) = g(rng);
    pts.push_back(z.normalized() * 2.0 * std::pow(u(rng), 0.25));
  }
  const FrequencyVector w = make_frequency(Vec::Ones(2));
  // trigonometric polynomial along the torus: a random real quartic in (p, q)
  Polynomial p(4);
  for (int k = 1; k <= 4; ++k)
    for (const MultiIndex& m : indices_of_order(4, k)) p.add_term(m, cplx(g(rng)));
  const PhaseFunction gf = [p](const Vec& z) { return p(z); };
  const CohomologicalSolution sol = solve_cohomological(gf, w, pts);
  const Polynomial Ip = average(p, w);
  double coh = 0.0, proj = 0.0;
  for (const Vec& z : pts) {
    const cplx Ig = Ip(z);
    coh = std::max(coh, std::abs(flow_derivative_of(sol.f, w, z) - (gf(z) - Ig)));
    const PhaseFunction If = [&](const Vec& y) { return Ip(y); };
    proj = std::max({proj, std::abs(average(sol.f, z, w)), std::abs(average(If, z, w) - Ig),
                     std::abs(flow_derivative_of(If, w, z)), std::abs(average(gf, z, w) - Ig)});
  }
  const Polynomial twice = average(Ip, w) - Ip;
  for (const auto& [m, c] : twice.terms()) proj = std::max(proj, std::abs(c));
  r.pass = coh <= 1e-8 && proj <= 1e-8;
  r.detail = "|{H, f} - (g - I_g)| " + sci(coh) + " (tol 1e-8); projection identities " + sci(proj) + " (tol 1e-8)";
  r.notes.push_back("identities: I_f = 0, I(I_g) = I_g, {H, I_g} = 0, Fourier route = polynomial route; 60 points");
  return r;
}

CriterionResult normal_form(unsigned) {
  CriterionResult r;
  r.title = "normal-form quasimode, d = 2, omega = (1, 1)";
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = desk_config(t2_desk_scenario(), {0.04, 0.02, 0.01});
  const std::vector<RunRecord> recs = run_grid(c);
  double eig = 0.0;
  for (const RunRecord& x : recs) eig = std::max(eig, x.eigen_residual);
  std::vector<double> rs;
  const double slope = width_slope(recs, &rs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = eig <= 1e-8 && std::abs(slope - 2.0 / 3.0) <= 0.15 && secs < 1800;
  r.detail = "||H psi - omega.E psi|| max " + sci(eig) + " (tol 1e-8); slope " + fmt("%.3f", slope) +
             " (2/3 +- 0.15) in " + fmt("%.1f", secs) + " s (< 1800)";
  r.notes.push_back("r at hbar 0.04, 0.02, 0.01: " + list(rs));
  return r;
}

CriterionResult control(unsigned) {
  CriterionResult r;
  r.title = "selfadjoint control, width ~ hbar";
  const std::vector<double> hs{0.04, 0.02, 0.01, 0.005};
  std::vector<double> rs;
  const double slope = width_slope(run_grid(desk_config(control_scenario(), hs)), &rs);
  r.pass = std::abs(slope - 1.0) <= 0.15;
  r.detail = "slope " + fmt("%.3f", slope) + " (1 +- 0.15), Gaussian window sigma 0.4";
  r.notes.push_back("r at hbar 0.04, 0.02, 0.01, 0.005: " + list(rs));
  QuasimodeScenario b = control_scenario();
  b.control_window = QuasimodeScenario::Window::Bump;
  b.control_scale = 1.0;
  b.time_nodes = 128;
  std::vector<double> rb;
  const double sb = width_slope(run_grid(desk_config(b, hs)), &rb);
  r.notes.push_back("info: compact bump window, slope " + fmt("%.3f", sb) + ", r = " + list(rb));
  return r;
}

}  // namespace

std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}; }
std::vector<int> invariant_criteria() { return {1, 2, 3, 4, 5, 6, 11}; }

CriterionResult run_criterion(int id, unsigned seed) {
  static const std::map<int, std::pair<double, std::function<CriterionResult(unsigned)>>> table{
      {1, {5, frames}},          {2, {30, hagedorn}},     {3, {60, lift}},          {4, {0, flow}},
      {5, {0, mu_structure}},    {6, {30, picard}},       {7, {0, coefficients}},   {8, {0, width_law}},
      {9, {0, concentration}},   {10, {300, resolvent}},  {11, {0, averaging}},     {12, {0, normal_form}},
      {13, {0, control}}};
  const auto it = table.find(id);
  if (it == table.end()) throw Error(ErrorKind::ConfigInvalid, "no criterion " + std::to_string(id));
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = it->second.second(seed);
  } catch (const std::exception& e) {
    r.title = "error";
    r.pass = false;
    r.detail = e.what();
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double limit = it->second.first;
  if (limit > 0 && r.seconds >= limit) {
    r.pass = false;
    r.detail += "; runtime " + fmt("%.1f", r.seconds) + " s over the " + fmt("%.0f", limit) + " s limit";
  }
  return r;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream o;
  o << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << " [" << fmt("%.1f", r.seconds) << " s] " << r.title
    << ": " << r.detail;
  for (const std::string& n : r.notes) o << "\n    " << n;
  return o.str();
}

}  // namespace hq
