#include "hq/averaging.hpp"

#include <cmath>
#include <numbers>

#include "hq/dynamics.hpp"

namespace hq {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double dot(const std::vector<int>& k, const Vec& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * w(j);
  return s;
}

int l1(const std::vector<int>& k) {
  int s = 0;
  for (int v : k) s += std::abs(v);
  return s;
}

// integer vectors with |k|_1 <= kmax, by increasing |k|_1
std::vector<std::vector<int>> lattice_ball(int d, int kmax) {
  std::vector<std::vector<int>> out;
  std::vector<int> k(d, -kmax);
  while (true) {
    if (l1(k) <= kmax) out.push_back(k);
    int j = 0;
    while (j < d && ++k[j] > kmax) k[j++] = -kmax;
    if (j == d) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return l1(a) < l1(b); });
  return out;
}

// tensor grid on T^d with M points per axis, flat index with axis 0 slowest
Vec torus_point(int d, int M, std::size_t flat) {
  Vec tau(d);
  for (int j = d - 1; j >= 0; --j) {
    tau(j) = two_pi * static_cast<double>(flat % M) / M;
    flat /= M;
  }
  return tau;
}

std::size_t ipow(int b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// coefficients (1/M^d) sum_tau v(tau) e^{-i k . tau} for |k|_inf <= kmax, separable DFT
std::map<std::vector<int>, cplx> dft(const std::vector<cplx>& v, int d, int M, int kmax) {
  // successive partial transforms, one axis at a time; data[k_0..k_{j-1}, tau_j..tau_{d-1}]
  const int nk = 2 * kmax + 1;
  std::vector<cplx> cur = v;
  std::vector<int> shape(d, M);
  for (int axis = 0; axis < d; ++axis) {
    std::size_t outer = 1, inner = 1;
    for (int j = 0; j < axis; ++j) outer *= shape[j];
    for (int j = axis + 1; j < d; ++j) inner *= shape[j];
    std::vector<cplx> next(outer * nk * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (int kk = 0; kk < nk; ++kk) {
        const int k = kk - kmax;
        for (std::size_t i = 0; i < inner; ++i) {
          cplx s = 0.0;
          for (int m = 0; m < M; ++m) s += cur[(o * M + m) * inner + i] * std::polar(1.0, -two_pi * k * m / M);
          next[(o * nk + kk) * inner + i] = s / static_cast<double>(M);
        }
      }
    cur = std::move(next);
    shape[axis] = nk;
  }
  std::map<std::vector<int>, cplx> out;
  for (std::size_t flat = 0; flat < cur.size(); ++flat) {
    std::vector<int> k(d);
    std::size_t f = flat;
    for (int j = d - 1; j >= 0; --j) {
      k[j] = static_cast<int>(f % nk) - kmax;
      f /= nk;
    }
    out[k] = cur[flat];
  }
  return out;
}

int integer_rank(const std::vector<std::vector<int>>& vs, int d) {
  if (vs.empty()) return 0;
  Mat A(vs.size(), d);
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (int j = 0; j < d; ++j) A(i, j) = vs[i][j];
  Eigen::FullPivHouseholderQR<Mat> qr(A);
  qr.setThreshold(1e-9);
  return static_cast<int>(qr.rank());
}

double shell_max(const std::map<std::vector<int>, cplx>& c, int kmax) {
  double s = 0.0;
  for (const auto& [k, v] : c) {
    int m = 0;
    for (int x : k) m = std::max(m, std::abs(x));
    if (m == kmax) s = std::max(s, std::abs(v));
  }
  return s;
}

double smallest_nonresonant(const FrequencyVector& w) {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& k : lattice_ball(w.dim(), w.kmax))
    if (l1(k) > 0 && !w.resonant(k)) s = std::min(s, std::abs(dot(k, w.omega)));
  return s;
}

}  // namespace

bool FrequencyVector::resonant(const std::vector<int>& k) const { return std::abs(dot(k, omega)) <= 1e-12; }

bool FrequencyVector::periodic() const {
  for (int j = 0; j < dim(); ++j)
    if (omega(j) != std::round(omega(j))) return false;
  return true;
}

FrequencyVector make_frequency(const Vec& omega, int kmax) {
  FrequencyVector w;
  w.omega = omega;
  w.kmax = kmax;
  const int d = static_cast<int>(omega.size());
  for (int j = 0; j < d; ++j)
    if (!(omega(j) > 0.0)) throw Error(ErrorKind::ScenarioInvalid, "frequencies must be positive", omega(j));
  for (const auto& k : lattice_ball(d, kmax)) {
    if (l1(k) == 0 || !w.resonant(k)) continue;
    auto trial = w.resonances;
    trial.push_back(k);
    if (integer_rank(trial, d) > static_cast<int>(w.resonances.size())) w.resonances.push_back(k);
  }
  w.d_omega = d - static_cast<int>(w.resonances.size());
  return w;
}

Vec oscillator_orbit(const Vec& z, const FrequencyVector& w, double t) { return oscillator_flow(z, Vec(t * w.omega)); }

TorusFourierData torus_fourier(const PhaseFunction& a, const Vec& z, int kmax) {
  const int d = static_cast<int>(z.size()) / 2;
  const int M = 2 * kmax + 2;
  const std::size_t n = ipow(M, d);
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a(oscillator_flow(z, torus_point(d, M, i)));
  TorusFourierData out;
  out.z = z;
  out.kmax = kmax;
  out.coeffs = dft(v, d, M, kmax);
  const double vol = std::pow(two_pi, d);
  for (auto& [k, c] : out.coeffs) c *= vol;
  out.shell = shell_max(out.coeffs, kmax);
  return out;
}

cplx average(const PhaseFunction& a, const Vec& z, const FrequencyVector& w) {
  const int d = w.dim();
  if (w.periodic()) {
    // time average over one period by the trapezoid rule, with a spectral check on the top modes
    const int M = 2 * w.kmax * static_cast<int>(w.omega.maxCoeff()) + 2;
    std::vector<cplx> v(M);
    for (int m = 0; m < M; ++m) v[m] = a(oscillator_orbit(z, w, two_pi * m / M));
    auto c = dft(v, 1, M, M / 2 - 1);
    double scale = 0.0;
    for (const auto& [k, x] : c) scale = std::max(scale, std::abs(x));
    const double shell = std::max(std::abs(c[{M / 2 - 1}]), std::abs(c[{-(M / 2 - 1)}]));
    if (shell > 1e-8 * std::max(1.0, scale))
      throw Error(ErrorKind::ResolutionTooLow, "orbit Fourier coefficients not decayed", shell);
    return c[{0}];
  }
  const TorusFourierData f = torus_fourier(a, z, w.kmax);
  double scale = 0.0;
  for (const auto& [k, x] : f.coeffs) scale = std::max(scale, std::abs(x));
  if (f.shell > 1e-8 * std::max(1.0, scale))
    throw Error(ErrorKind::ResolutionTooLow, "torus Fourier coefficients not decayed", f.shell);
  cplx s = 0.0;
  for (const auto& [k, x] : f.coeffs)
    if (w.resonant(k)) s += x;
  return s / std::pow(two_pi, d);
}

cplx average(const SymbolModel& a, const Vec& z, const FrequencyVector& w) {
  return average([&](const Vec& y) { return a.value(y); }, z, w);
}

Polynomial average(const Polynomial& p, const FrequencyVector& w) {
  const int d = w.dim();
  const int deg = std::max(p.degree(), 0);
  const int M = 2 * deg + 1;
  const std::size_t n = ipow(M, d);
  // per torus point, the composed polynomial; then project onto resonant modes
  std::vector<Polynomial> comp;
  comp.reserve(n);
  for (std::size_t i = 0; i < n; ++i) comp.push_back(p.compose_linear(oscillator_matrix(torus_point(d, M, i)).cast<cplx>()));
  Polynomial out(p.nvars());
  for (const auto& k : lattice_ball(d, d * deg)) {
    bool inside = true;
    for (int x : k) inside = inside && std::abs(x) <= deg;
    if (!inside || !w.resonant(k)) continue;
    Polynomial ck(p.nvars());
    for (std::size_t i = 0; i < n; ++i) {
      const Vec tau = torus_point(d, M, i);
      double phase = 0.0;
      for (int j = 0; j < d; ++j) phase += k[j] * tau(j);
      ck = ck + comp[i] * std::polar(1.0 / static_cast<double>(n), -phase);
    }
    out = out + ck;
  }
  return out.chop(1e-14);
}

CohomologicalSolution solve_cohomological(const PhaseFunction& g, const FrequencyVector& w,
                                          const std::vector<Vec>& samples) {
  CohomologicalSolution sol;
  for (const Vec& z : samples) sol.removed_mean = std::max(sol.removed_mean, std::abs(average(g, z, w)));
  const double floor = 1e-10 * smallest_nonresonant(w);
  if (w.periodic()) {
    const int M = 2 * w.kmax * static_cast<int>(w.omega.maxCoeff()) + 2;
    sol.f = [=](const Vec& z) {
      std::vector<cplx> v(M);
      for (int m = 0; m < M; ++m) v[m] = g(oscillator_orbit(z, w, two_pi * m / M));
      auto c = dft(v, 1, M, M / 2 - 1);
      double scale = 0.0;
      for (const auto& [k, x] : c) scale = std::max(scale, std::abs(x));
      if (std::max(std::abs(c[{M / 2 - 1}]), std::abs(c[{-(M / 2 - 1)}])) > 1e-8 * std::max(1.0, scale))
        throw Error(ErrorKind::ResolutionTooLow, "orbit Fourier coefficients not decayed");
      // g(phi_s z) = sum_n c_n e^{i n s}; f = sum_{n != 0} c_n / (i n)
      cplx f = 0.0;
      for (const auto& [k, x] : c)
        if (k[0] != 0) f += x / (I_unit * static_cast<double>(k[0]));
      return f;
    };
    return sol;
  }
  sol.f = [=](const Vec& z) {
    const TorusFourierData data = torus_fourier(g, z, w.kmax);
    double scale = 0.0;
    for (const auto& [k, x] : data.coeffs) scale = std::max(scale, std::abs(x));
    if (data.shell > 1e-8 * std::max(1.0, scale))
      throw Error(ErrorKind::ResolutionTooLow, "torus Fourier coefficients not decayed", data.shell);
    cplx f = 0.0;
    for (const auto& [k, x] : data.coeffs) {
      if (w.resonant(k)) continue;
      const double kw = dot(k, w.omega);
      if (std::abs(kw) < floor) {
        if (std::abs(x) > 1e-14 * std::max(1.0, scale)) throw Error(ErrorKind::SmallDivisor, "small divisor", kw);
        continue;
      }
      f += x / (I_unit * kw);
    }
    return f / std::pow(two_pi, w.dim());
  };
  return sol;
}

cplx flow_derivative_of(const PhaseFunction& f, const FrequencyVector& w, const Vec& z, double h) {
  static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  cplx s = 0.0;
  for (int i = 0; i < 4; ++i)
    s += c[i] * (f(oscillator_orbit(z, w, (i + 1) * h)) - f(oscillator_orbit(z, w, -(i + 1) * h)));
  return s / h;
}

std::vector<DiophantineFit> diophantine_check(const FrequencyVector& w, int kmax) {
  if (kmax < 2) throw Error(ErrorKind::ConfigInvalid, "kmax must be at least 2", kmax);
  std::vector<DiophantineFit> out;
  for (int gamma : {0, 1, 2, 4}) {
    DiophantineFit fit;
    fit.gamma = gamma;
    fit.varsigma = std::numeric_limits<double>::infinity();
    for (const auto& k : lattice_ball(w.dim(), kmax)) {
      if (l1(k) == 0 || w.resonant(k)) continue;
      const double v = std::abs(dot(k, w.omega)) * std::pow(l1(k), gamma);
      if (v < fit.varsigma) {
        fit.varsigma = v;
        fit.binding = k;
      }
    }
    out.push_back(fit);
  }
  return out;
}

Vec action_vector(const Vec& z) {
  const int d = static_cast<int>(z.size()) / 2;
  Vec H(d);
  for (int j = 0; j < d; ++j) H(j) = 0.5 * (z(j) * z(j) + z(d + j) * z(d + j));
  return H;
}

EnergyLattice energy_lattice(const Vec& z0, double hbar) {
  const Vec H = action_vector(z0);
  EnergyLattice e;
  e.E.resize(H.size());
  for (int j = 0; j < H.size(); ++j) {
    const double x = H(j) / hbar - 0.5;
    // round half up, with slack for representation error at exact ties
    int n = static_cast<int>(std::floor(x + 0.5 + 1e-12 * std::max(1.0, std::abs(x))));
    if (n < 0) {
      n = 0;
      e.clipped = true;
    }
    e.N.push_back(n);
    e.E(j) = hbar * (n + 0.5);
  }
  return e;
}

}  // namespace hq
