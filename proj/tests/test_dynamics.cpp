#include <numbers>

#include "doctest.h"
#include "hq/dynamics.hpp"
#include "test_util.hpp"

using namespace hq;

namespace {

Polynomial pvar(int d, int i) { return Polynomial::variable(2 * d, i); }

// xi + i x^2 in internal (p, q) variables
SymbolPtr airy_symbol() {
  Polynomial p = pvar(1, 0), q = pvar(1, 1);
  return std::make_shared<PolySymbol>(p + q * q * I_unit);
}

std::vector<double> window_nodes(int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(-0.5 + 0.005 * i);
  return t;
}

}  // namespace

TEST_CASE("initial derivatives for xi + i x^2") {
  FlowDerivative fd = flow_derivative(*airy_symbol(), Vec::Zero(2), Mat::Identity(2, 2));
  Vec zdot = to_public(fd.zdot);
  CHECK(std::abs(zdot(0) - 1.0) < 1e-8);
  CHECK(std::abs(zdot(1)) < 1e-8);
  Mat Gdot = to_public_matrix(fd.Gdot);
  CHECK((Gdot - Mat(Eigen::Vector2d(-2.0, 2.0).asDiagonal())).norm() < 1e-8);
}

TEST_CASE("flow invariants on [-0.5, 0.5) for xi + i x^2") {
  Trajectory tr = integrate_flow(airy_symbol(), Vec::Zero(2), standard_frame(1), window_nodes(200));
  CHECK(tr.nodes.size() == 200);
  CHECK(tr.stats.max_symmetry_defect <= 1e-8);
  CHECK(tr.stats.max_symplectic_defect <= 1e-8);
  CHECK(tr.stats.max_metric_mismatch <= 1e-8);
  CHECK(tr.stats.min_eigenvalue > 0.0);
  for (const FlowState& s : tr.nodes) {
    const double t = s.t;
    // closed forms for this symbol: G_xx = 1 - 2t, x = t(1-t)/(1-2t), xi = 0
    CHECK(std::abs(to_public_matrix(s.G)(0, 0) - (1.0 - 2.0 * t)) < 1e-8);
    CHECK(std::abs(s.z(1) - t * (1.0 - t) / (1.0 - 2.0 * t)) < 1e-8 * (1.0 + std::abs(s.z(1))));
    CHECK(std::abs(s.z(0)) < 1e-10);
    if (t > 0) CHECK(s.Lambda.imag() <= 0.0);
  }
}

TEST_CASE("damping integral matches the center path") {
  Trajectory tr = integrate_flow(airy_symbol(), Vec::Zero(2), standard_frame(1), std::vector<double>{0.3});
  // Im Lambda = -int_0^t x(s)^2 ds
  const double expect = -integrate([](double s) { double x = s * (1 - s) / (1 - 2 * s); return x * x; }, 0.0, 0.3);
  CHECK(std::abs(tr.nodes[0].Lambda.imag() - expect) < 1e-9);
  CHECK(std::abs(tr.nodes[0].Lambda.real()) < 1e-12);
}

TEST_CASE("positivity is lost at t = 0.5") {
  try {
    integrate_flow(airy_symbol(), Vec::Zero(2), standard_frame(1), std::vector<double>{0.5});
    FAIL("expected PositivityLost");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PositivityLost);
    CHECK(e.value() == doctest::Approx(0.5).epsilon(1e-3));
  }
  Trajectory tr = integrate_flow(airy_symbol(), Vec::Zero(2), standard_frame(1), 0.5, 11);
  CHECK(tr.stats.halvings == 1);
  CHECK(tr.nodes.back().t == doctest::Approx(0.25));
}

TEST_CASE("selfadjoint control keeps rho zero and norm one") {
  // V = xi + x^3/3 + x^2 xi, A = 0
  Polynomial p = pvar(1, 0), q = pvar(1, 1);
  auto P = std::make_shared<PolySymbol>(p + q.pow(3) * cplx(1.0 / 3.0) + q * q * p);
  Vec z0 = to_internal(Vec(Eigen::Vector2d(0.2, -0.1)));
  Trajectory tr = integrate_flow(P, z0, standard_frame(1), window_nodes(200));
  for (const FlowState& s : tr.nodes) {
    CHECK(std::abs(s.rho) <= 1e-10);
    CHECK(std::abs(s.Lambda.imag()) <= 1e-10);
    const double hbar = 0.01;
    const double norm = std::abs(std::exp(I_unit * s.Lambda / hbar + s.rho));
    CHECK(std::abs(norm - 1.0) <= 1e-8);
  }
  CHECK(tr.stats.max_metric_mismatch <= 1e-8);
}

TEST_CASE("harmonic oscillator period and convention") {
  Polynomial p = pvar(1, 0), q = pvar(1, 1);
  auto H = std::make_shared<PolySymbol>((p * p + q * q) * cplx(0.5));
  Vec z0 = to_internal(Vec(Eigen::Vector2d(1.0, 0.0)));
  Trajectory tr = integrate_flow(H, z0, standard_frame(1), std::vector<double>{std::numbers::pi / 2, 2 * std::numbers::pi});
  Vec quarter = to_public(tr.nodes[0].z);
  CHECK(std::abs(quarter(0)) < 1e-8);
  CHECK(std::abs(quarter(1) + 1.0) < 1e-8);
  CHECK((tr.nodes[1].z - z0).norm() <= 1e-8);
  CHECK((tr.nodes[1].G - Mat::Identity(2, 2)).norm() <= 1e-8);
  CHECK(std::abs(tr.nodes[1].rho) <= 1e-10);
  CHECK(flow_convention_selftest() < 1e-8);
}

TEST_CASE("oscillator_flow examples and invariance") {
  Vec z = to_internal(Vec(Eigen::Vector2d(1.0, 0.0)));
  Vec tau(1);
  tau << 0.0;
  CHECK((oscillator_flow(z, tau) - z).norm() == 0.0);
  tau << std::numbers::pi / 2;
  Vec w = to_public(oscillator_flow(z, tau));
  CHECK(std::abs(w(0)) < 1e-15);
  CHECK(std::abs(w(1) + 1.0) < 1e-15);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    Vec z4(4), t2(2);
    for (int i = 0; i < 4; ++i) z4(i) = u(rng);
    t2 << u(rng), u(rng);
    Vec r = oscillator_flow(z4, t2);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(r(j) * r(j) + r(2 + j) * r(2 + j) - z4(j) * z4(j) - z4(2 + j) * z4(2 + j)) < 1e-13);
    CHECK(symplectic_defect(oscillator_matrix(t2)) < 1e-14);
  }
}

TEST_CASE("finite type constant") {
  auto P = airy_symbol();
  FiniteType ft = finite_type_constant(*P, Vec::Zero(2));
  CHECK(ft.gamma0 == doctest::Approx(2.0));
  CHECK(ft.warnings.empty());
  // adding a constant to V changes nothing
  Polynomial p = pvar(1, 0), q = pvar(1, 1);
  auto P2 = std::make_shared<PolySymbol>(p + q * q * I_unit + Polynomial::constant(2, 3.0));
  CHECK(finite_type_constant(*P2, Vec::Zero(2)).gamma0 == doctest::Approx(2.0));
  // A = xi^2 vanishes to second order along the flow direction of V = xi
  auto flat = std::make_shared<PolySymbol>(p + p * p * I_unit);
  FiniteType f0 = finite_type_constant(*flat, Vec::Zero(2));
  CHECK(f0.gamma0 == 0.0);
  CHECK(std::find(f0.warnings.begin(), f0.warnings.end(), "NotFiniteType") != f0.warnings.end());
  // d = 2: V = xi_1, A = x_1^2 + x_2^2
  Polynomial p1 = pvar(2, 0), q1 = pvar(2, 2), q2 = pvar(2, 3);
  auto P4 = std::make_shared<PolySymbol>(p1 + (q1 * q1 + q2 * q2) * I_unit);
  CHECK(finite_type_constant(*P4, Vec::Zero(4)).gamma0 == doctest::Approx(2.0));
}

TEST_CASE("taylor split") {
  Polynomial p = pvar(1, 0), q = pvar(1, 1);
  auto quad = std::make_shared<PolySymbol>(p * p + q * p * cplx(2.0, 1.0));
  TaylorSplit a = taylor_split(quad, Vec(Eigen::Vector2d(0.4, -0.3)), 4);
  CHECK(a.PN.is_zero());
  CHECK(std::abs(a.RN(Vec(Eigen::Vector2d(1.0, 1.0)))) < 1e-13);
  auto cubic = std::make_shared<PolySymbol>(q.pow(3));
  TaylorSplit b = taylor_split(cubic, Vec::Zero(2), 3);
  CHECK(b.P2.is_zero());
  CHECK(b.PN.terms().size() == 1);
  CHECK(std::abs(b.RN(Vec(Eigen::Vector2d(0.5, 0.7)))) < 1e-15);
  auto sine = std::make_shared<FunctionSymbol>(1, 6, [](const Vec& z, const MultiIndex& g) -> cplx {
    if (g[0] > 0) return 0.0;
    switch (g[1] % 4) {
      case 0: return std::sin(z(1));
      case 1: return std::cos(z(1));
      case 2: return -std::sin(z(1));
      default: return -std::cos(z(1));
    }
  });
  TaylorSplit c = taylor_split(sine, Vec::Zero(2), 3);
  Vec x(2);
  x << 0.0, 0.1;
  const cplx lhs = std::sin(0.1) - (c.P2(x) + c.PN(x));
  CHECK(std::abs(std::abs(lhs) - std::abs(c.RN(x))) < 1e-12);
  CHECK(std::abs(lhs - c.RN(x)) < 1e-12);
  CHECK_THROWS_AS(taylor_split(sine, Vec::Zero(2), 6), Error);
}
