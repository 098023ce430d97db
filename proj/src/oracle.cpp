#include "hq/oracle.hpp"

#include <fftw3.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "hq/simd.hpp"

namespace hq {

namespace {

class FftPlans {
 public:
  static fftw_plan get(const std::vector<int>& n, int sign) {
    static FftPlans inst;
    std::lock_guard<std::mutex> lock(inst.mu_);
    auto key = std::make_pair(n, sign);
    auto it = inst.plans_.find(key);
    if (it != inst.plans_.end()) return it->second;
    std::size_t total = 1;
    for (int v : n) total *= v;
    fftw_complex* buf = fftw_alloc_complex(total);
    fftw_plan p = fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    inst.plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

void fft_inplace(CVec& v, const std::vector<int>& n, int sign) {
  fftw_plan p = FftPlans::get(n, sign);
  auto* data = reinterpret_cast<fftw_complex*>(v.data());
  fftw_execute_dft(p, data, data);
}

std::vector<int> axis_index(const Grid& g, std::size_t flat) {
  std::vector<int> k(g.d);
  for (int a = g.d - 1; a >= 0; --a) {
    k[a] = static_cast<int>(flat % g.n[a]);
    flat /= g.n[a];
  }
  return k;
}

// D^kappa with D = -i hbar d/dx, spectrally
CVec spectral_derivative(const CVec& v, const Grid& g, double hbar, const MultiIndex& kappa) {
  if (order(kappa) == 0) return v;
  std::vector<CVec> mult(g.d);
  for (int a = 0; a < g.d; ++a) {
    const int n = g.n[a];
    mult[a] = CVec::Ones(n);
    if (kappa[a] == 0) continue;
    for (int m = 0; m < n; ++m) {
      const int mm = m < (n + 1) / 2 ? m : m - n;
      if (n % 2 == 0 && m == n / 2 && kappa[a] % 2 == 1) {
        mult[a](m) = 0.0;
        continue;
      }
      const double k = 2.0 * std::numbers::pi * mm / (n * g.dx[a]);
      mult[a](m) = std::pow(hbar * k, kappa[a]);
    }
  }
  CVec w = v;
  fft_inplace(w, g.n, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<int> k = axis_index(g, i);
    cplx f = scale;
    for (int a = 0; a < g.d; ++a) f *= mult[a](k[a]);
    w(i) *= f;
  }
  fft_inplace(w, g.n, FFTW_BACKWARD);
  return w;
}

double binomial(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }

GridFunction apply_polynomial(const Polynomial& P, const GridFunction& psi) {
  const Grid& g = psi.grid;
  const int d = g.d;
  if (P.nvars() != 2 * d) throw Error(ErrorKind::ScenarioInvalid, "symbol dimension does not match grid");
  // group by the momentum exponent kappa
  std::map<MultiIndex, std::vector<std::pair<MultiIndex, cplx>>> groups;
  for (const auto& [m, c] : P.terms()) {
    MultiIndex kappa(m.begin(), m.begin() + d), xm(m.begin() + d, m.end());
    groups[kappa].emplace_back(xm, c);
  }
  std::vector<Vec> pts(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pts[i] = g.point(i);
  std::map<MultiIndex, CVec> dpsi;
  auto deriv = [&](const MultiIndex& m) -> const CVec& {
    auto it = dpsi.find(m);
    if (it == dpsi.end()) it = dpsi.emplace(m, spectral_derivative(psi.values, g, psi.hbar, m)).first;
    return it->second;
  };
  CVec out = CVec::Zero(g.size());
  for (const auto& [kappa, terms] : groups) {
    CVec a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      cplx s = 0.0;
      for (const auto& [xm, c] : terms) {
        cplx t = c;
        for (int j = 0; j < d; ++j) t *= std::pow(pts[i](j), xm[j]);
        s += t;
      }
      a(i) = s;
    }
    // sum over j <= kappa of C(kappa, j) D^j a D^{kappa - j}
    MultiIndex j(d, 0);
    const double pre = std::pow(0.5, order(kappa));
    while (true) {
      MultiIndex rest(d);
      double c = pre;
      for (int k = 0; k < d; ++k) {
        rest[k] = kappa[k] - j[k];
        c *= binomial(kappa[k], j[k]);
      }
      CVec inner = a.cwiseProduct(deriv(rest));
      out += c * spectral_derivative(inner, g, psi.hbar, j);
      int k = 0;
      while (k < d && ++j[k] > kappa[k]) j[k++] = 0;
      if (k == d) break;
    }
  }
  return GridFunction{g, psi.hbar, out};
}

const Polynomial& require_polynomial(const SymbolModel& P, std::optional<Polynomial>& slot) {
  slot = P.polynomial();
  if (!slot) throw Error(ErrorKind::OracleUnavailable, "grid Weyl application needs a polynomial symbol");
  return *slot;
}

}  // namespace

Grid Grid::centered(const Vec& center, const Vec& half_width, const std::vector<int>& n) {
  Grid g;
  g.d = static_cast<int>(center.size());
  g.n = n;
  for (int a = 0; a < g.d; ++a) {
    g.dx.push_back(2.0 * half_width(a) / n[a]);
    g.lo.push_back(center(a) - half_width(a));
  }
  return g;
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int v : n) s *= v;
  return s;
}

double Grid::cell() const {
  double c = 1.0;
  for (double v : dx) c *= v;
  return c;
}

Vec Grid::point(std::size_t i) const {
  std::vector<int> k = axis_index(*this, i);
  Vec x(d);
  for (int a = 0; a < d; ++a) x(a) = coord(a, k[a]);
  return x;
}

double GridFunction::norm() const { return std::sqrt(values.squaredNorm() * grid.cell()); }

GridFunction sample_grid(const Grid& g, double hbar, const std::function<cplx(const Vec&)>& f) {
  GridFunction gf{g, hbar, CVec(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) gf.values(i) = f(g.point(i));
  return gf;
}

cplx grid_inner(const GridFunction& f, const GridFunction& g) {
  const std::size_t n = f.values.size();
  std::vector<double> ar(n), ai(n), br(n), bi(n);
  for (std::size_t i = 0; i < n; ++i) {
    ar[i] = f.values(i).real();
    ai[i] = -f.values(i).imag();
    br[i] = g.values(i).real();
    bi[i] = g.values(i).imag();
  }
  return simd::cdot_split(ar.data(), ai.data(), br.data(), bi.data(), n) * f.grid.cell();
}

CMat gram_grid(const std::vector<GridFunction>& fs) {
  const int m = static_cast<int>(fs.size());
  CMat G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = grid_inner(fs[i], fs[j]);
  return G;
}

void check_resolution(const Grid& g, double hbar) {
  const double limit = std::sqrt(hbar) / 6.0 * (1.0 + 1e-9);
  for (int a = 0; a < g.d; ++a)
    if (g.dx[a] > limit) throw Error(ErrorKind::GridTooCoarse, "grid spacing above sqrt(hbar)/6", g.dx[a]);
}

GridFunction weyl_apply_grid(const Polynomial& P, const GridFunction& psi) {
  check_resolution(psi.grid, psi.hbar);
  return apply_polynomial(P, psi);
}

GridFunction weyl_apply_grid(const SymbolModel& P, const GridFunction& psi) {
  std::optional<Polynomial> slot;
  return weyl_apply_grid(require_polynomial(P, slot), psi);
}

WeylCheck weyl_apply_grid_checked(const SymbolModel& P, const GridFunction& psi) {
  std::optional<Polynomial> slot;
  const Polynomial& poly = require_polynomial(P, slot);
  WeylCheck res{weyl_apply_grid(poly, psi), 0.0};
  const Grid& g = psi.grid;
  for (int v : g.n)
    if (v % 2 != 0) return res;
  Grid coarse = g;
  for (int a = 0; a < g.d; ++a) {
    coarse.n[a] = g.n[a] / 2;
    coarse.dx[a] = 2.0 * g.dx[a];
  }
  GridFunction cpsi{coarse, psi.hbar, CVec(coarse.size())};
  std::vector<std::size_t> fine_of(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    std::vector<int> k = axis_index(coarse, i);
    std::size_t flat = 0;
    for (int a = 0; a < g.d; ++a) flat = flat * g.n[a] + 2 * k[a];
    fine_of[i] = flat;
    cpsi.values(i) = psi.values(flat);
  }
  GridFunction cout = apply_polynomial(poly, cpsi);
  for (std::size_t i = 0; i < coarse.size(); ++i)
    res.error_estimate = std::max(res.error_estimate, std::abs(cout.values(i) - res.value.values(fine_of[i])));
  return res;
}

CMat weyl_matrix_grid(const SymbolModel& P, const Grid& g, double hbar) {
  std::optional<Polynomial> slot;
  const Polynomial& poly = require_polynomial(P, slot);
  check_resolution(g, hbar);
  const std::size_t n = g.size();
  CMat M(n, n);
  GridFunction e{g, hbar, CVec::Zero(n)};
  for (std::size_t k = 0; k < n; ++k) {
    e.values.setZero();
    e.values(k) = 1.0;
    M.col(k) = apply_polynomial(poly, e).values;
  }
  return M;
}

CMat wigner_grid(const GridFunction& psi, const GridFunction& phi, const std::vector<double>& xi) {
  const Grid& g = psi.grid;
  if (g.d != 1) throw Error(ErrorKind::OracleUnavailable, "wigner_grid is d = 1; use wigner_point");
  const int n = g.n[0];
  const double dv = 2.0 * g.dx[0] / psi.hbar;
  const int nl = 2 * n - 1;
  const int nx = static_cast<int>(xi.size());
  // phase table e^{i xi v_k}, k = -(n-1) .. n-1
  std::vector<double> er(std::size_t(nx) * nl), ei(std::size_t(nx) * nl);
  for (int s = 0; s < nx; ++s)
    for (int k = -(n - 1); k <= n - 1; ++k) {
      er[std::size_t(s) * nl + k + n - 1] = std::cos(xi[s] * k * dv);
      ei[std::size_t(s) * nl + k + n - 1] = std::sin(xi[s] * k * dv);
    }
  CMat W(n, nx);
  std::vector<double> ar(nl), ai(nl);
  const double pre = dv / (2.0 * std::numbers::pi);
  for (int j = 0; j < n; ++j) {
    const int K = std::min(j, n - 1 - j);
    for (int k = -K; k <= K; ++k) {
      const cplx a = psi.values(j - k) * std::conj(phi.values(j + k));
      ar[k + K] = a.real();
      ai[k + K] = a.imag();
    }
    for (int s = 0; s < nx; ++s) {
      const std::size_t off = std::size_t(s) * nl + (n - 1) - K;
      W(j, s) = pre * simd::cdot_split(ar.data(), ai.data(), er.data() + off, ei.data() + off, 2 * K + 1);
    }
  }
  return W;
}

cplx wigner_point(const GridFunction& psi, const GridFunction& phi, std::size_t i, const Vec& xi) {
  const Grid& g = psi.grid;
  const std::vector<int> j = axis_index(g, i);
  std::vector<int> K(g.d);
  double pre = 1.0;
  for (int a = 0; a < g.d; ++a) {
    K[a] = std::min(j[a], g.n[a] - 1 - j[a]);
    const double dv = 2.0 * g.dx[a] / psi.hbar;
    pre *= dv / (2.0 * std::numbers::pi);
  }
  std::vector<double> ar, ai, er, ei;
  std::vector<int> k(g.d);
  for (int a = 0; a < g.d; ++a) k[a] = -K[a];
  while (true) {
    std::size_t lo = 0, hi = 0;
    double phase = 0.0;
    for (int a = 0; a < g.d; ++a) {
      lo = lo * g.n[a] + (j[a] - k[a]);
      hi = hi * g.n[a] + (j[a] + k[a]);
      phase += xi(a) * k[a] * 2.0 * g.dx[a] / psi.hbar;
    }
    const cplx v = psi.values(lo) * std::conj(phi.values(hi));
    ar.push_back(v.real());
    ai.push_back(v.imag());
    er.push_back(std::cos(phase));
    ei.push_back(std::sin(phase));
    int a = 0;
    while (a < g.d && ++k[a] > K[a]) {
      k[a] = -K[a];
      ++a;
    }
    if (a == g.d) break;
  }
  return pre * simd::cdot_split(ar.data(), ai.data(), er.data(), ei.data(), ar.size());
}

CVec dense_propagate(const CMat& A, const CVec& c0, double t) {
  const CMat E = (t * A).exp();
  return E * c0;
}

CVec dense_propagate(const std::function<CMat(double)>& A, const CVec& c0, double t0, double t1, double tol) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<cplx>;
  const std::size_t n = c0.size();
  State x(c0.data(), c0.data() + n);
  auto rhs = [&](const State& s, State& ds, double t) {
    Eigen::Map<const CVec> sv(s.data(), n);
    Eigen::Map<CVec> dv(ds.data(), n);
    dv = A(t) * sv;
  };
  if (t1 != t0) {
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<State>());
    ode::integrate_adaptive(stepper, rhs, x, t0, t1, (t1 - t0) * 1e-3);
  }
  return Eigen::Map<CVec>(x.data(), n);
}

CoefficientVector dense_propagate(const CMat& A, const CoefficientVector& c0, double t) {
  CoefficientVector out(c0.index);
  out.values = dense_propagate(A, c0.values, t);
  return out;
}

}  // namespace hq
