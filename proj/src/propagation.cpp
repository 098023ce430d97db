#include "hq/propagation.hpp"

#include <cmath>
#include <mutex>

#include "hq/quadrature.hpp"

namespace hq {

namespace {

std::vector<double> weights_of(const IndexSet& idx, double rho) {
  std::vector<double> w(idx.size());
  for (int i = 0; i < idx.size(); ++i) w[i] = std::exp(rho * order(idx.at(i)));
  return w;
}

// log-spaced grid on (0, rho)
std::vector<double> sigma_grid(double rho) {
  std::vector<double> s;
  const int n = 96;
  for (int k = 0; k < n; ++k) s.push_back(rho * std::pow(1e-3, 1.0 - (k + 0.5) / n) * (1.0 - 1e-3));
  return s;
}

double column_ratio(const CMat& AP, const CMat& P, const IndexSet& idx, double rho, double s) {
  const std::vector<double> w_to = weights_of(idx, rho - s), w_from = weights_of(idx, rho);
  double best = 0.0;
  for (int c = 0; c < P.cols(); ++c) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < P.rows(); ++r) {
      num += std::abs(AP(r, c)) * w_to[r];
      den += std::abs(P(r, c)) * w_from[r];
    }
    if (den > 0.0) best = std::max(best, num / den);
  }
  return best;
}

// Lagrange basis on the nodes x evaluated at y
std::vector<double> lagrange(const std::vector<double>& x, double y) {
  std::vector<double> l(x.size(), 1.0);
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t k = 0; k < x.size(); ++k)
      if (k != j) l[j] *= (y - x[k]) / (x[j] - x[k]);
  return l;
}

// W(j) = int_0^y l_j on the unit interval
std::vector<double> integrated_lagrange(const std::vector<double>& x, double y) {
  std::vector<double> w(x.size(), 0.0);
  if (y == 0.0) return w;
  const Rule r = gauss_legendre(static_cast<int>(x.size()), 0.0, y);
  for (int k = 0; k < r.size(); ++k) {
    const std::vector<double> l = lagrange(x, r.x[k]);
    for (std::size_t j = 0; j < x.size(); ++j) w[j] += r.w[k] * l[j];
  }
  return w;
}

struct UnitNodes {
  std::vector<double> x;
  std::vector<std::vector<double>> S;
};

const UnitNodes& unit_nodes(int m) {
  static std::mutex mu;
  static std::map<int, UnitNodes> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  UnitNodes u;
  u.x = gauss_legendre(m, 0.0, 1.0).x;
  for (int i = 0; i < m; ++i) u.S.push_back(integrated_lagrange(u.x, u.x[i]));
  return cache.emplace(m, std::move(u)).first->second;
}

double inf_norm(const CMat& A) { return A.rows() == 0 ? 0.0 : A.cwiseAbs().rowwise().sum().maxCoeff(); }

// Solves one collocation segment [s, s + h] from start by Picard iteration.
PicardSolution::Segment solve_segment(const BandOperator& A, double s, double h, const CMat& start,
                                      const std::vector<CMat>& B, double rho, double sigma, const PicardOptions& opt,
                                      PicardStats& st) {
  const UnitNodes& un = unit_nodes(opt.nodes);
  const int m = opt.nodes;
  const IndexSet& idx = *A.index;
  PicardSolution::Segment seg;
  seg.s = s;
  seg.h = h;
  seg.start = start;
  for (int j = 0; j < m; ++j) seg.tau.push_back(s + h * un.x[j]);
  std::vector<CMat> U(m, start), AU(m);
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (;; ++it) {
    if (it >= opt.max_iterations)
      throw Error(ErrorKind::NotConverged, "Picard iteration did not converge", prev);
    for (int j = 0; j < m; ++j) AU[j] = B[j] * U[j];
    double inc = 0.0, ref = 0.0;
    for (int i = 0; i < m; ++i) {
      CMat next = start;
      for (int j = 0; j < m; ++j) next += (h * un.S[i][j]) * AU[j];
      inc = std::max(inc, lrho_norm(CMat(next - U[i]), idx, rho - sigma));
      ref = std::max(ref, lrho_norm(next, idx, rho - sigma));
      U[i] = std::move(next);
    }
    const double rel = ref > 0.0 ? inc / ref : inc;
    // accept at the tolerance, or once the increment stalls at rounding level
    const bool stalled = it > 3 && rel > 0.5 * prev && rel < 1e-9;
    prev = rel;
    if (rel <= opt.tol || stalled) {
      st.max_increment = std::max(st.max_increment, rel);
      break;
    }
  }
  for (int j = 0; j < m; ++j) AU[j] = B[j] * U[j];
  seg.AU = std::move(AU);
  st.iterations += it + 1;
  st.max_iterations = std::max(st.max_iterations, it + 1);
  st.segments += 1;
  return seg;
}

std::vector<CMat> sample(const BandOperator& A, double s, double h, int m) {
  const UnitNodes& un = unit_nodes(m);
  std::vector<CMat> B;
  for (int j = 0; j < m; ++j) B.push_back(A.at(s + h * un.x[j]));
  return B;
}

double seminorm_over(const std::vector<CMat>& B, const IndexSet& idx, double rho) {
  double c = 0.0;
  for (const CMat& b : B) c = std::max(c, drho_seminorm(b, idx, rho));
  return c;
}

CMat evaluate(const PicardSolution::Segment& seg, double t, int m) {
  const UnitNodes& un = unit_nodes(m);
  const std::vector<double> w = integrated_lagrange(un.x, (t - seg.s) / seg.h);
  CMat out = seg.start;
  for (int j = 0; j < m; ++j) out += (seg.h * w[j]) * seg.AU[j];
  return out;
}

}  // namespace

double lrho_norm(const CVec& c, const IndexSet& idx, double rho) {
  double s = 0.0;
  for (int i = 0; i < idx.size(); ++i) s += std::abs(c(i)) * std::exp(rho * order(idx.at(i)));
  return s;
}

double lrho_norm(const CoefficientVector& c, double rho) { return lrho_norm(c.values, *c.index, rho); }

double lrho_norm(const CMat& C, const IndexSet& idx, double rho) {
  double best = 0.0;
  for (int c = 0; c < C.cols(); ++c) best = std::max(best, lrho_norm(CVec(C.col(c)), idx, rho));
  return best;
}

double weighted_operator_norm(const CMat& A, const IndexSet& idx, double rho, double sigma) {
  const std::vector<double> w_to = weights_of(idx, rho - sigma), w_from = weights_of(idx, rho);
  double best = 0.0;
  for (int c = 0; c < A.cols(); ++c) {
    double s = 0.0;
    for (int r = 0; r < A.rows(); ++r) s += std::abs(A(r, c)) * w_to[r];
    best = std::max(best, s / w_from[c]);
  }
  return best;
}

double drho_seminorm(const CMat& A, const IndexSet& idx, double rho) {
  double best = 0.0;
  for (double s : sigma_grid(rho)) best = std::max(best, std::exp(1.0) * s * weighted_operator_norm(A, idx, rho, s));
  return best;
}

double probe_seminorm(const CMat& A, const CMat& probes, const IndexSet& idx, double rho) {
  const CMat AP = A * probes;
  double best = 0.0;
  for (double s : sigma_grid(rho)) best = std::max(best, std::exp(1.0) * s * column_ratio(AP, probes, idx, rho, s));
  return best;
}

BandOperator BandOperator::constant(IndexSetPtr idx, const CMat& A) {
  BandOperator b;
  b.index = std::move(idx);
  b.at = [A](double) { return A; };
  return b;
}

BandOperator BandOperator::zero(IndexSetPtr idx) {
  const int n = idx->size();
  return constant(std::move(idx), CMat::Zero(n, n));
}

BandOperator BandOperator::operator+(const BandOperator& o) const {
  BandOperator b;
  b.index = index;
  auto f = at, g = o.at;
  b.at = [f, g](double t) { return CMat(f(t) + g(t)); };
  if (spill && o.spill) {
    auto p = spill, q = o.spill;
    b.spill = [p, q](double t) { return CMat(p(t) + q(t)); };
  } else if (spill || o.spill) {
    b.spill = spill ? spill : o.spill;
  }
  return b;
}

BandOperator BandOperator::operator*(cplx s) const {
  BandOperator b;
  b.index = index;
  auto f = at;
  b.at = [f, s](double t) { return CMat(s * f(t)); };
  if (spill) {
    auto p = spill;
    b.spill = [p, s](double t) { return CMat(s * p(t)); };
  }
  return b;
}

CoefficientVector BandOperator::apply(double t, const CoefficientVector& c) const {
  CoefficientVector out(index);
  out.values = at(t) * c.values;
  if (spill) out.leakage = (spill(t) * c.values).cwiseAbs().sum();
  return out;
}

BandOperator coefficient_generator(SymbolPtr P, std::shared_ptr<const Trajectory> traj, int N, double hbar,
                                   IndexSetPtr index) {
  const int n = index->size();
  auto ext = std::make_shared<const IndexSet>(index->dim(), index->max_order() + 2 * N);
  // both providers share the last assembly
  struct Cache {
    std::mutex mu;
    double t = std::numeric_limits<double>::quiet_NaN();
    CMat full;
  };
  auto cache = std::make_shared<Cache>();
  auto full = [=](double t) {
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      if (cache->t == t) return cache->full;
    }
    const FlowState s = traj->at(t);
    CMat A = assemble_kappa(*P, traj->Z0, s, hbar, ext).entries;
    if (N > 0) A -= assemble_mu(P, s, N, hbar, ext).entries;
    std::lock_guard<std::mutex> lock(cache->mu);
    cache->t = t;
    cache->full = A;
    return A;
  };
  BandOperator b;
  b.index = index;
  b.at = [=](double t) { return CMat(full(t).topLeftCorner(n, n)); };
  const int m = ext->size() - n;
  if (m > 0) b.spill = [=](double t) { return CMat(full(t).block(n, 0, m, n)); };
  return b;
}

CMat PicardSolution::operator()(double t) const {
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  if (t < lo - 1e-14 || t > hi + 1e-14) throw Error(ErrorKind::IndexOutOfRange, "time outside the solved interval", t);
  for (const Segment& seg : segments) {
    const double a = std::min(seg.s, seg.s + seg.h), b = std::max(seg.s, seg.s + seg.h);
    if (t >= a - 1e-14 && t <= b + 1e-14) return evaluate(seg, t, static_cast<int>(seg.tau.size()));
  }
  return segments.back().start;
}

CoefficientVector PicardSolution::vector(double t, int column) const {
  CoefficientVector c(index);
  c.values = (*this)(t).col(column);
  return c;
}

PicardSolution picard_propagator(const BandOperator& A, double rho, double sigma, double t1, const CMat& C0,
                                 const PicardOptions& opt) {
  if (!(sigma > 0.0 && sigma < rho)) throw Error(ErrorKind::ConfigInvalid, "sigma must lie in (0, rho)", sigma);
  PicardSolution sol;
  sol.index = A.index;
  sol.t0 = 0.0;
  sol.t1 = t1;
  if (t1 == 0.0) {
    sol.segments.push_back({0.0, 0.0, {}, C0, {}});
    return sol;
  }
  const std::vector<CMat> B = sample(A, 0.0, t1, opt.nodes);
  const double C = seminorm_over(B, *A.index, rho);
  const double ratio = std::abs(t1) * C / sigma;
  if (ratio >= 1.0) throw Error(ErrorKind::NoContraction, "t1 ||A|| / sigma >= 1", ratio);
  // the contraction holds on the whole interval; collocation panels only control quadrature accuracy
  sol = propagate(A, rho, sigma, 0.0, t1, C0, opt);
  sol.stats.max_seminorm = std::max(sol.stats.max_seminorm, C);
  sol.stats.max_contraction = std::max(sol.stats.max_contraction, ratio);
  return sol;
}

PicardSolution picard_propagator(const BandOperator& A, double rho, double sigma, double t1,
                                 const CoefficientVector& c0, const PicardOptions& opt) {
  return picard_propagator(A, rho, sigma, t1, CMat(c0.values), opt);
}

PicardSolution propagate(const BandOperator& A, double rho, double sigma, double t0, double t1, const CMat& C0,
                         const PicardOptions& opt) {
  if (!(sigma > 0.0 && sigma < rho)) throw Error(ErrorKind::ConfigInvalid, "sigma must lie in (0, rho)", sigma);
  PicardSolution sol;
  sol.index = A.index;
  sol.t0 = t0;
  sol.t1 = t1;
  if (t1 == t0) {
    sol.segments.push_back({t0, 0.0, {}, C0, {}});
    return sol;
  }
  const double dir = t1 > t0 ? 1.0 : -1.0;
  double s = t0;
  CMat start = C0;
  double norm = std::max(inf_norm(A.at(t0)), 1e-300);
  while (dir * (t1 - s) > 1e-15 * std::max(1.0, std::abs(t1))) {
    double h = dir * std::min(std::abs(t1 - s), opt.theta / norm);
    std::vector<CMat> B;
    for (;;) {
      B = sample(A, s, h, opt.nodes);
      double worst = 0.0;
      for (const CMat& b : B) worst = std::max(worst, inf_norm(b));
      norm = std::max(worst, 1e-300);
      if (std::abs(h) * norm <= 1.5 * opt.theta) break;
      h = dir * opt.theta / norm;
    }
    const double C = seminorm_over(B, *A.index, rho);
    sol.stats.max_seminorm = std::max(sol.stats.max_seminorm, C);
    sol.stats.max_contraction = std::max(sol.stats.max_contraction, std::abs(h) * C / sigma);
    PicardSolution::Segment seg = solve_segment(A, s, h, start, B, rho, sigma, opt, sol.stats);
    start = evaluate(seg, s + h, opt.nodes);
    sol.segments.push_back(std::move(seg));
    s += h;
  }
  sol.t1 = t1;
  return sol;
}

CVec duhamel_integral(const BandOperator& A, const BandOperator& B, const CVec& u, double t, double rho, double sigma,
                      int nodes, const PicardOptions& opt) {
  const int n = A.index->size();
  CVec w = CVec::Zero(n);
  if (t == 0.0) return w;
  const PicardSolution U = propagate(A, rho, sigma, 0.0, t, CMat(u), opt);
  const BandOperator AB = A + B;
  const Rule r = gauss_legendre(nodes, 0.0, t);
  for (int k = 0; k < r.size(); ++k) {
    const CVec f = B.at(r.x[k]) * U(r.x[k]).col(0);
    const PicardSolution V = propagate(AB, rho, sigma, r.x[k], t, CMat(f), opt);
    w += r.w[k] * V(t).col(0);
  }
  return w;
}

cplx gauge_exponent(const FlowState& s, double hbar) { return I_unit * s.Lambda / hbar + s.rho; }

cplx gauge_rate(const SymbolModel& P, const FlowState& s, const LagrangianFrame& Z0, double hbar) {
  const int d = static_cast<int>(s.z.size()) / 2;
  const FlowDerivative fd = flow_derivative(P, s.z, s.G);
  const Vec p = s.z.head(d), q = s.z.tail(d);
  const cplx lam_dot = -(P.value(s.z) + 0.5 * (fd.zdot.head(d).dot(q) - fd.zdot.tail(d).dot(p)));
  const cplx rho_dot = 0.5 * normalization_velocity(P, Z0, s).trace();
  return I_unit * lam_dot / hbar + rho_dot;
}

CoefficientEvolution evolve_coefficients(SymbolPtr P, std::shared_ptr<const Trajectory> traj, int N, double hbar,
                                         IndexSetPtr index, const CoefficientVector& c0,
                                         const std::vector<double>& times, const EvolutionOptions& opt) {
  BandOperator gen = coefficient_generator(P, traj, N, hbar, index);
  if (opt.fold_gauge) {
    const int n = index->size();
    BandOperator g;
    g.index = index;
    g.at = [=](double t) {
      return CMat(gauge_rate(*P, traj->at(t), traj->Z0, hbar) * CMat::Identity(n, n));
    };
    gen = gen + g;
  }
  const double t0 = 0.0;
  double tmin = t0, tmax = t0;
  for (double t : times) {
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  const CMat C0 = c0.values;
  const PicardSolution fwd = propagate(gen, opt.rho, opt.sigma, t0, tmax, C0, opt.picard);
  const PicardSolution bwd = propagate(gen, opt.rho, opt.sigma, t0, tmin, C0, opt.picard);
  CoefficientEvolution out;
  for (const PicardSolution* s : {&fwd, &bwd}) {
    out.stats.segments += s->stats.segments;
    out.stats.iterations += s->stats.iterations;
    out.stats.max_iterations = std::max(out.stats.max_iterations, s->stats.max_iterations);
    out.stats.max_contraction = std::max(out.stats.max_contraction, s->stats.max_contraction);
    out.stats.max_seminorm = std::max(out.stats.max_seminorm, s->stats.max_seminorm);
    out.stats.max_increment = std::max(out.stats.max_increment, s->stats.max_increment);
  }
  // leakage integrand sampled on the collocation nodes of each segment
  auto leakage_to = [&](const PicardSolution& sol, double t) {
    if (!gen.spill) return 0.0;
    double total = 0.0;
    for (const PicardSolution::Segment& seg : sol.segments) {
      if (seg.h == 0.0) continue;
      const double a = seg.s, b = seg.s + seg.h;
      if (std::abs(a - t0) >= std::abs(t - t0)) break;
      const double end = std::abs(b - t0) <= std::abs(t - t0) ? b : t;
      const Rule r = gauss_legendre(8, std::min(a, end), std::max(a, end));
      for (int k = 0; k < r.size(); ++k) total += r.w[k] * (gen.spill(r.x[k]) * sol(r.x[k]).col(0)).cwiseAbs().sum();
    }
    return total;
  };
  for (double t : times) {
    const PicardSolution& sol = t >= t0 ? fwd : bwd;
    const FlowState st = traj->at(t);
    const cplx gauge = std::exp(gauge_exponent(st, hbar));
    CoefficientSample smp;
    smp.t = t;
    CVec c = sol(t).col(0);
    smp.gauged = CoefficientVector(index);
    smp.physical = CoefficientVector(index);
    if (opt.fold_gauge) {
      smp.physical.values = c;
      smp.gauged.values = c / gauge;
    } else {
      smp.gauged.values = c;
      smp.physical.values = gauge * c;
    }
    const double rt = std::sqrt(hbar);
    for (int i = 1; i < index->size(); ++i)
      smp.decay = std::max(smp.decay, std::abs(smp.gauged.values(i)) *
                                          std::exp((opt.rho - 3 * opt.sigma) * order(index->at(i))) / rt);
    smp.ground = std::abs(smp.gauged.values(0) - c0.values(0)) / rt;
    smp.leakage = leakage_to(sol, t);
    smp.gauged.leakage = smp.physical.leakage = smp.leakage;
    out.samples.push_back(std::move(smp));
  }
  return out;
}

}  // namespace hq
