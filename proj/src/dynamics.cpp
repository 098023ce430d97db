#include "hq/dynamics.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>
#include <numbers>

#include "hq/quadrature.hpp"

namespace hq {

namespace {

namespace ode = boost::numeric::odeint;
using State = std::vector<double>;

// layout: z (n), G (n*n), S re/im (2 n*n), Lambda (2), log det Q_W (2)
struct Layout {
  int n;
  explicit Layout(int d) : n(2 * d) {}
  int size() const { return n + 3 * n * n + 4; }
  int G() const { return n; }
  int S() const { return n + n * n; }
  int Lam() const { return n + 3 * n * n; }
  int ld() const { return Lam() + 2; }
};

State pack(const Layout& L, const Vec& z, const Mat& G, const CMat& S, cplx lam, cplx ld) {
  State x(L.size());
  const int n = L.n;
  for (int i = 0; i < n; ++i) x[i] = z(i);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      x[L.G() + c * n + r] = G(r, c);
      x[L.S() + 2 * (c * n + r)] = S(r, c).real();
      x[L.S() + 2 * (c * n + r) + 1] = S(r, c).imag();
    }
  x[L.Lam()] = lam.real();
  x[L.Lam() + 1] = lam.imag();
  x[L.ld()] = ld.real();
  x[L.ld() + 1] = ld.imag();
  return x;
}

struct Unpacked {
  Vec z;
  Mat G;
  CMat S;
  cplx lam, ld;
};

Unpacked unpack(const Layout& L, const State& x) {
  const int n = L.n;
  Unpacked u{Vec(n), Mat(n, n), CMat(n, n), 0.0, 0.0};
  for (int i = 0; i < n; ++i) u.z(i) = x[i];
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) {
      u.G(r, c) = x[L.G() + c * n + r];
      u.S(r, c) = cplx(x[L.S() + 2 * (c * n + r)], x[L.S() + 2 * (c * n + r) + 1]);
    }
  u.lam = cplx(x[L.Lam()], x[L.Lam() + 1]);
  u.ld = cplx(x[L.ld()], x[L.ld() + 1]);
  return u;
}

struct Rhs {
  const SymbolModel& P;
  CMat Z0;
  Layout L;
  double sign;
  long* calls;

  void operator()(const State& x, State& dx, double) const {
    ++*calls;
    const int d = L.n / 2;
    Unpacked u = unpack(L, x);
    FlowDerivative fd = flow_derivative(P, u.z, u.G);
    const CMat H = P.hessian(u.z);
    const CMat Sdot = omega(d).cast<cplx>() * H * u.S;
    const CMat W = u.S * Z0;
    const CMat Wdot = Sdot * Z0;
    const cplx ld_dot = W.bottomRows(d).partialPivLu().solve(Wdot.bottomRows(d)).trace();
    const Vec p = u.z.head(d), q = u.z.tail(d);
    const Vec pdot = fd.zdot.head(d), qdot = fd.zdot.tail(d);
    const cplx lam_dot = -(P.value(u.z) + 0.5 * (pdot.dot(q) - qdot.dot(p)));
    State out = pack(L, fd.zdot, fd.Gdot, Sdot, lam_dot, ld_dot);
    for (size_t i = 0; i < out.size(); ++i) dx[i] = sign * out[i];
  }
};

FlowState make_state(const Layout& L, const CMat& Z0, double t, const State& x) {
  Unpacked u = unpack(L, x);
  FlowState s;
  s.t = t;
  s.z = u.z;
  s.G = u.G;
  s.S = u.S;
  s.Lambda = u.lam;
  s.log_det_QW = u.ld;
  Normalized nf = normalize_frame(u.S * Z0, 1e-6);
  s.N = nf.N;
  s.Z = nf.frame;
  Eigen::SelfAdjointEigenSolver<CMat> es(s.N);
  double ldN = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) ldN += std::log(es.eigenvalues()(i));
  s.rho = 0.5 * ldN;
  s.log_det_Q = u.ld + ldN;
  return s;
}

double positivity_ratio(const Mat& G) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  return hi > 0.0 ? es.eigenvalues().minCoeff() / hi : -1.0;
}

void record_invariants(FlowStats& st, const FlowState& s) {
  const int d = static_cast<int>(s.z.size()) / 2;
  const Mat W = omega(d);
  st.max_symmetry_defect = std::max(st.max_symmetry_defect, (s.G - s.G.transpose()).cwiseAbs().maxCoeff());
  st.max_symplectic_defect =
      std::max(st.max_symplectic_defect, (s.G.transpose() * W * s.G - W).cwiseAbs().maxCoeff());
  st.max_metric_mismatch =
      std::max(st.max_metric_mismatch, (s.G - geometry_of(s.Z).G).cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s.G + s.G.transpose()), Eigen::EigenvaluesOnly);
  st.min_eigenvalue = std::min(st.min_eigenvalue, es.eigenvalues().minCoeff());
}

// Integrates from the state x at t0 through the targets (all on one side of t0, sorted
// away from t0) and appends the resulting nodes.
void run_segment(const SymbolModel& P, const CMat& Z0, State x, double t0, const std::vector<double>& targets,
                 const FlowOptions& opt, FlowStats& st, std::vector<FlowState>& out) {
  if (targets.empty()) return;
  const Layout L(static_cast<int>(Z0.cols()));
  const double sign = targets.back() >= t0 ? 1.0 : -1.0;
  Rhs rhs{P, Z0, L, sign, &st.rhs_calls};
  const double eps = 1e-2 * opt.tol;
  auto stepper = ode::make_dense_output(eps, eps, ode::runge_kutta_dopri5<State>());
  const double span = std::abs(targets.back() - t0);
  double dt0 = std::min(1e-3, std::max(span, 1e-6) * 1e-2);
  stepper.initialize(x, 0.0, dt0);
  size_t k = 0;
  long steps = 0;
  State tmp(x.size());
  while (k < targets.size()) {
    const double s_target = std::abs(targets[k] - t0);
    if (s_target == 0.0) {
      out.push_back(make_state(L, Z0, targets[k], x));
      ++k;
      continue;
    }
    while (stepper.current_time() < s_target) {
      if (++steps > opt.max_steps)
        throw Error(ErrorKind::StepFailure, "step limit reached", t0 + sign * stepper.current_time());
      try {
        stepper.do_step(rhs);
      } catch (const std::exception&) {
        throw Error(ErrorKind::StepFailure, "step size underflow", t0 + sign * stepper.current_time());
      }
      Unpacked u = unpack(L, stepper.current_state());
      const double ratio = positivity_ratio(u.G);
      if (!std::isfinite(ratio) || ratio < opt.positivity_floor)
        throw Error(ErrorKind::PositivityLost, "metric lost positivity", t0 + sign * stepper.current_time());
    }
    while (k < targets.size() && std::abs(targets[k] - t0) <= stepper.current_time()) {
      stepper.calc_state(std::abs(targets[k] - t0), tmp);
      out.push_back(make_state(L, Z0, targets[k], tmp));
      ++k;
    }
  }
  st.steps += steps;
}

Trajectory integrate_raw(SymbolPtr P, const Vec& z0, const LagrangianFrame& Z0, const std::vector<double>& times,
                         const FlowOptions& opt) {
  const int d = Z0.dim();
  if (P->dim() != d || z0.size() != 2 * d) throw Error(ErrorKind::ScenarioInvalid, "dimension mismatch");
  Trajectory tr;
  tr.symbol = P;
  tr.Z0 = Z0;
  tr.options = opt;
  tr.stats.min_eigenvalue = std::numeric_limits<double>::infinity();
  const Layout L(d);
  const CMat Zm = Z0.Z();
  const Mat G0 = geometry_of(Z0).G;
  const State x0 = pack(L, z0, G0, CMat::Identity(2 * d, 2 * d), 0.0, std::log(Z0.Q().determinant()));
  std::vector<double> fwd, bwd;
  for (double t : times) (t >= 0.0 ? fwd : bwd).push_back(t);
  std::sort(fwd.begin(), fwd.end());
  std::sort(bwd.begin(), bwd.end(), std::greater<double>());
  std::vector<FlowState> nodes;
  run_segment(*P, Zm, x0, 0.0, fwd, opt, tr.stats, nodes);
  run_segment(*P, Zm, x0, 0.0, bwd, opt, tr.stats, nodes);
  std::sort(nodes.begin(), nodes.end(), [](const FlowState& a, const FlowState& b) { return a.t < b.t; });
  for (const auto& s : nodes) record_invariants(tr.stats, s);
  tr.nodes = std::move(nodes);
  return tr;
}

}  // namespace

FlowDerivative flow_derivative(const SymbolModel& P, const Vec& z, const Mat& G) {
  const int d = static_cast<int>(z.size()) / 2;
  const Mat W = omega(d);
  const CVec g = P.gradient(z);
  const CMat H = P.hessian(z);
  const Mat R = H.real(), M = H.imag();
  FlowDerivative fd;
  fd.zdot = W * g.real() + G.partialPivLu().solve(g.imag());
  fd.Gdot = -M + R * W * G - G * W * R - G * W * M * W * G;
  return fd;
}

Trajectory integrate_flow(SymbolPtr P, const Vec& z0, const LagrangianFrame& Z0, const std::vector<double>& times,
                          const FlowOptions& opt) {
  static std::once_flag once;
  std::call_once(once, [] {
    const double dev = flow_convention_selftest();
    if (dev > 1e-8) throw Error(ErrorKind::ComputeFailed, "flow convention self-test failed", dev);
  });
  return integrate_raw(std::move(P), z0, Z0, times, opt);
}

Trajectory integrate_flow(SymbolPtr P, const Vec& z0, const LagrangianFrame& Z0, double tmax, int n,
                          const FlowOptions& opt) {
  int halvings = 0;
  while (true) {
    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = n == 1 ? 0.0 : -tmax + 2.0 * tmax * i / (n - 1);
    try {
      Trajectory tr = integrate_flow(P, z0, Z0, times, opt);
      tr.stats.halvings = halvings;
      return tr;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PositivityLost || halvings >= 30) throw;
      tmax *= 0.5;
      ++halvings;
    }
  }
}

const FlowState& Trajectory::node_at(double t) const {
  if (nodes.empty()) throw Error(ErrorKind::ScenarioInvalid, "empty trajectory");
  auto it = std::min_element(nodes.begin(), nodes.end(), [t](const FlowState& a, const FlowState& b) {
    return std::abs(a.t - t) < std::abs(b.t - t);
  });
  return *it;
}

FlowState Trajectory::at(double t) const {
  const FlowState& s = node_at(t);
  if (s.t == t) return s;
  const int d = Z0.dim();
  const Layout L(d);
  State x = pack(L, s.z, s.G, s.S, s.Lambda, s.log_det_QW);
  FlowStats st;
  std::vector<FlowState> out;
  run_segment(*symbol, Z0.Z(), x, s.t, {t}, options, st, out);
  return out.front();
}

Vec oscillator_flow(const Vec& z, const Vec& tau) { return oscillator_matrix(tau) * z; }

Mat oscillator_matrix(const Vec& tau) {
  const int d = static_cast<int>(tau.size());
  Mat F = Mat::Zero(2 * d, 2 * d);
  for (int j = 0; j < d; ++j) {
    const double c = std::cos(tau(j)), s = std::sin(tau(j));
    F(j, j) = c;
    F(j, d + j) = -s;
    F(d + j, j) = s;
    F(d + j, d + j) = c;
  }
  return F;
}

double flow_convention_selftest() {
  Polynomial p = Polynomial::variable(2, 0), q = Polynomial::variable(2, 1);
  auto H = std::make_shared<PolySymbol>((p * p + q * q) * cplx(0.5));
  Vec z0(2);
  z0 << 0.3, 1.0;
  const double t = std::numbers::pi / 2;
  FlowOptions opt;
  opt.tol = 1e-11;
  Trajectory tr = integrate_raw(H, z0, standard_frame(1), {t}, opt);
  Vec tau(1);
  tau << t;
  return (tr.nodes.front().z - oscillator_flow(z0, tau)).norm();
}

FiniteType finite_type_constant(const SymbolModel& P, const Vec& z0) {
  const int d = P.dim();
  FiniteType ft;
  const CVec g = P.gradient(z0);
  const CMat H = P.hessian(z0);
  const Vec X = omega(d) * g.real();
  ft.gamma0 = X.dot(H.imag() * X);
  if (std::abs(P.A(z0)) > 1e-9) ft.warnings.push_back("A(z0) != 0");
  if (g.imag().norm() > 1e-9) ft.warnings.push_back("grad A(z0) != 0");
  if (ft.gamma0 <= 1e-12) ft.warnings.push_back("NotFiniteType");
  return ft;
}

cplx TaylorSplit::RN(const Vec& z) const {
  const int n = static_cast<int>(center.size());
  const Vec w = z - center;
  const Rule r = gauss_legendre(24, 0.0, 1.0);
  cplx total = 0.0;
  for (const MultiIndex& b : indices_of_order(n, N + 1)) {
    double mono = 1.0;
    for (int i = 0; i < n; ++i) mono *= std::pow(w(i), b[i]);
    if (mono == 0.0) continue;
    cplx integral = 0.0;
    for (int k = 0; k < r.size(); ++k)
      integral += r.w[k] * std::pow(1.0 - r.x[k], N) * symbol->derivative(Vec(center + r.x[k] * w), b);
    total += double(N + 1) / multi_factorial(b) * mono * integral;
  }
  return total;
}

TaylorSplit taylor_split(SymbolPtr P, const Vec& zt, int N) {
  if (P->max_order() < N + 1) throw Error(ErrorKind::OrderUnavailable, "symbol order below N + 1", N + 1);
  const int n = static_cast<int>(zt.size());
  TaylorSplit ts;
  ts.center = zt;
  ts.N = N;
  ts.symbol = P;
  ts.P2 = Polynomial(n);
  ts.PN = Polynomial(n);
  for (int k = 0; k <= N; ++k)
    for (const MultiIndex& b : indices_of_order(n, k)) {
      const cplx c = P->derivative(zt, b) / multi_factorial(b);
      (k <= 2 ? ts.P2 : ts.PN).add_term(b, c);
    }
  return ts;
}

}  // namespace hq
