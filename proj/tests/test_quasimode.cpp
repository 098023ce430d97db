#include <numbers>

#include "doctest.h"
#include "hq/bump.hpp"
#include "hq/quasimode.hpp"
#include "test_util.hpp"

using namespace hq;

namespace {

constexpr double pi = std::numbers::pi;

// composite Simpson on a uniform mesh, independent of the adaptive routine
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("cutoff constants") {
  const double h = 0.01, h23 = std::pow(h, 2.0 / 3.0);
  CHECK(cutoff_constants(0.0, h, 2.0).L == 1.0);
  CHECK(cutoff_constants(2.0 * h23, h, 2.0).L == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // seam: at gamma0 = 2 both branches give 1
  CHECK(cutoff_constants(h23, h, 2.0).L == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cutoff_constants(h23, h, 2.0).seam_jump < 1e-15);
  CHECK(cutoff_constants(0.0, h, 2.0).scale == doctest::Approx(std::cbrt(h)));
  const CutoffConstants c = cutoff_constants(0.0, h, 2.0);
  CHECK(c.chi(0.0) == 1.0);
  CHECK(c.chi(-1.01 * c.scale) == 0.0);
  CHECK(c.chi(3.01 * c.scale) == 0.0);
  CHECK_THROWS_AS(cutoff_constants(-1e-3, h, 2.0), Error);
}

TEST_CASE("normalization constant") {
  const double J = simpson([](double s) { return bump(s) * bump(s) * std::exp(-2.0 * s * s * s / 3.0); }, -1.0, 3.0, 40000);
  for (double h : {0.04, 0.01, 0.001}) {
    const double C = normalization_constant(0.0, h, 2.0);
    CHECK(C * std::cbrt(h) == doctest::Approx(1.0 / J).epsilon(1e-9));
  }
  // larger beta moves weight to positive s where the exponential grows, so C falls
  double prev = normalization_constant(0.0, 0.01, 2.0);
  for (double f : {0.25, 0.5, 0.75, 1.0}) {
    const double C = normalization_constant(f * beta_ceiling(0.01), 0.01, 2.0);
    CHECK(C < prev);
    prev = C;
  }
}

TEST_CASE("closed-form ground state matches the packet evaluator") {
  std::mt19937 rng(5);
  for (int d : {1, 2}) {
    const LagrangianFrame Z = frame_from_symplectic(hqt::random_symplectic(d, rng), 1e-9);
    Vec z(2 * d);
    for (int i = 0; i < 2 * d; ++i) z(i) = 0.3 * (i + 1) - 0.5;
    WavePacketBasis b = make_basis(Z, z, 0.07, 0);
    for (bool tracked : {false, true}) {
      if (tracked) b.log_det_Q = principal_log_det(Z.Q()) + cplx(0.0, 2.0 * pi);
      const GaussianForm g = ground_form(b);
      PacketEvaluator ev(b);
      for (int k = 0; k < 5; ++k) {
        Vec x = z.tail(d) + 0.1 * Vec::LinSpaced(d, -1.0, 1.0) * (k - 2);
        CHECK(std::abs(g(x) - ev.ground(x)) < 1e-12 * (1.0 + std::abs(ev.ground(x))));
      }
    }
  }
}

TEST_CASE("complex Gaussian integral against Gauss-Hermite") {
  CMat A(2, 2);
  A << cplx(2.0, 0.7), cplx(0.3, -0.4), cplx(0.3, -0.4), cplx(1.5, 1.1);
  CVec b(2);
  b << cplx(0.2, 0.5), cplx(-0.3, 0.1);
  const cplx c(0.1, -0.2);
  auto f = [&](const Vec& w) {
    const CVec wc = w.cast<cplx>();
    return std::exp(-0.5 * (wc.transpose() * A * wc)(0, 0) + (b.transpose() * wc)(0, 0) + c);
  };
  const double re = hqt::hermite_integral([&](const Vec& w) { return f(w).real(); }, Vec::Zero(2), 0.8, 60);
  const double im = hqt::hermite_integral([&](const Vec& w) { return f(w).imag(); }, Vec::Zero(2), 0.8, 60);
  CHECK(std::abs(gaussian_integral(A, b, c) - cplx(re, im)) < 1e-11);
  // strongly rotated eigenvalues keep the continuous branch
  CMat B = CMat::Identity(1, 1) * cplx(0.05, 3.0);
  CVec z = CVec::Zero(1);
  CHECK(std::abs(gaussian_integral(B, z, 0.0) - std::sqrt(2.0 * pi) / std::sqrt(cplx(0.05, 3.0))) < 1e-13);
}

TEST_CASE("T1 desk quasimode is normalized with a consistent quadrature report") {
  const QuasimodeScenario s = t1_desk_scenario();
  const Quasimode q = assemble_quasimode(s, 0.02, 0.0);
  CHECK(std::abs(q.lambda) < 1e-15);
  CHECK(q.gamma0 == doctest::Approx(2.0));
  CHECK(q.t.size() == 64);
  CHECK(q.quadrature_error < 1e-4);
  const Grid g = q.resolving_grid();
  const GridFunction psi = q.sample(g);
  CHECK(std::abs(psi.norm() - 1.0) <= 3.0 * q.quadrature_error);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
  CHECK(std::abs(pair_gram(q.terms, q.terms) - 1.0) < 1e-12);
  // pointwise value agrees with the grid sample
  const std::size_t mid = g.size() / 2;
  CHECK(std::abs(q.value(g.point(mid)) - psi.values(mid)) < 1e-12);
  for (double tj : q.t) {
    CHECK(tj > -q.cutoff.scale);
    CHECK(tj < 3.0 * q.cutoff.scale);
  }
}

TEST_CASE("hypothesis violations are rejected") {
  const Polynomial x = Polynomial::variable(2, 0), xi = Polynomial::variable(2, 1);
  QuasimodeScenario s = t1_desk_scenario();
  s.P = PolySymbol::from_public(xi, Polynomial(2));
  CHECK_THROWS_AS(assemble_quasimode(s, 0.02, 0.0), Error);
  try {
    assemble_quasimode(s, 0.02, 0.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScenarioInvalid);
  }
  s.P = PolySymbol::from_public(xi, x * x + Polynomial::constant(2, 0.1));
  CHECK_THROWS_AS(assemble_quasimode(s, 0.02, 0.0), Error);
  s.P = PolySymbol::from_public(xi, x * x + x * cplx(0.1));
  CHECK_THROWS_AS(assemble_quasimode(s, 0.02, 0.0), Error);
}

TEST_CASE("residual: grid application and the cutoff-derivative identity agree") {
  const QuasimodeScenario s = t1_desk_scenario();
  double prev = 1e300;
  for (double h : {0.04, 0.01}) {
    const Quasimode q = assemble_quasimode(s, h, 0.0);
    const ResidualReport r = residual_and_width(q, s);
    CHECK(std::abs(r.r - r.r_boundary) < 3e-3 * r.r);
    CHECK(r.r / std::pow(h, 2.0 / 3.0) > 0.5);
    CHECK(r.r / std::pow(h, 2.0 / 3.0) < 1.5);
    CHECK(r.resolvent_lower == doctest::Approx(1.0 / r.r));
    CHECK(r.r < prev);
    prev = r.r;
  }
  // width is nonincreasing in beta
  prev = 1e300;
  for (double f : {0.0, 0.5, 1.0}) {
    const double r = residual_and_width(assemble_quasimode(s, 0.01, f * beta_ceiling(0.01)), s).r;
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("Wigner observables: mass, closed form, lifted frames and the grid oracle") {
  const QuasimodeScenario s = t1_desk_scenario();
  const Quasimode q = assemble_quasimode(s, 0.02, 0.0);
  CHECK(std::abs(wigner_observable(q, Observable::one()) - pair_gram(q.terms, q.terms)) < 1e-14);
  const Grid g = q.resolving_grid();
  const GaussianObservable ga{Vec::Zero(2), 0.5};
  const cplx closed = wigner_observable(q, ga);
  const cplx grid = wigner_observable_grid(q, [&](const Vec& z) { return ga(z); }, g, 512);
  CHECK(std::abs(closed - grid) < 1e-8);
  CHECK(std::abs(closed.imag()) < 1e-12);
  CHECK(closed.real() < 1.0);
  CHECK(closed.real() > 0.8);
  // mass check of the grid oracle
  CHECK(std::abs(wigner_observable_grid(q, [](const Vec&) { return 1.0; }, g, 256) - 1.0) < 1e-9);
  const Observable nb = Observable::bump(Vec::Zero(2), 0.3);
  const cplx lifted = wigner_observable(q, nb);
  const cplx oracle = wigner_observable_grid(q, [&](const Vec& z) { return nb.a(z).real(); }, g, 512);
  CHECK(std::abs(lifted - oracle) < 1e-5);
  // concentration improves with hbar
  const double dev_fine = std::abs(wigner_observable(assemble_quasimode(s, 0.005, 0.0), ga) - 1.0);
  CHECK(dev_fine < std::abs(closed - 1.0));
}

TEST_CASE("T2 quasimode is an exact oscillator eigenfunction") {
  const QuasimodeScenario s = t2_desk_scenario();
  const Quasimode q = assemble_quasimode(s, 0.04, 0.0);
  CHECK(q.omega_E == doctest::Approx(1.0));
  CHECK(q.gamma0 == doctest::Approx(2.0));
  CHECK(q.terms.size() == 64 * 128);
  const ResidualReport r = residual_and_width(q, s);
  CHECK(r.eigen_residual < 1e-8);
  CHECK(std::abs(r.norm_grid - 1.0) <= 3.0 * q.quadrature_error);
  CHECK(std::abs(r.r - r.r_boundary) < 3e-3 * r.r);
}

TEST_CASE("selfadjoint control has the smoothed-window width") {
  const QuasimodeScenario s = control_scenario();
  for (double h : {0.04, 0.01}) {
    const Quasimode q = assemble_quasimode(s, h, 0.0);
    const ResidualReport r = residual_and_width(q, s);
    const double predicted = h / std::sqrt(2.0 * (s.control_scale * s.control_scale + h));
    CHECK(r.r == doctest::Approx(predicted).epsilon(5e-3));
    CHECK(std::abs(r.norm_grid - 1.0) < 1e-10);
  }
}

TEST_CASE("dense resolvent is certified by the quasimode") {
  const QuasimodeScenario s = t1_desk_scenario();
  const Quasimode q = assemble_quasimode(s, 0.04, 0.0);
  const ResolventReport rr = dense_resolvent(q, s, 256, -3.0, 3.0);
  CHECK(rr.sigma_min <= rr.r_grid * (1.0 + 1e-12));
  CHECK(rr.r_grid == doctest::Approx(residual_and_width(q, s).r).epsilon(1e-6));
}
