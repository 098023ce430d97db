#include <numbers>

#include "doctest.h"
#include "hq/bump.hpp"
#include "hq/hagedorn.hpp"
#include "hq/oracle.hpp"
#include "hq/quantization.hpp"
#include "test_util.hpp"

using namespace hq;

namespace {

Polynomial pv(int n, int i) { return Polynomial::variable(n, i); }

Polynomial random_poly(int n, int deg, std::mt19937& rng, bool real = false) {
  std::normal_distribution<double> g(0.0, 1.0);
  Polynomial p(n);
  for (int k = 0; k <= deg; ++k)
    for (const MultiIndex& m : indices_of_order(n, k)) p.add_term(m, real ? cplx(g(rng)) : cplx(g(rng), g(rng)));
  return p;
}

}  // namespace

TEST_CASE("moment table of the standard frame") {
  MomentTable t = moment_table(standard_frame(1), 3);
  CHECK(t.lam({2, 0}) == doctest::Approx(0.5));
  CHECK(t.lam({0, 4}) == doctest::Approx(24.0 / (16.0 * 2.0)));
  CHECK(t.lam({1, 1}) == 0.0);
  CHECK(t.lam({1, 0}) == 0.0);
  CHECK(t.lam({2, 1}) == 0.0);
  for (const auto& [a, l] : t.lambda) CHECK(std::abs(t.mu_of(a) - l) < 1e-12);
  CHECK(t.triangular_residual < 1e-10);
  // single-axis closed form alpha!/(4^{|alpha|/2} (|alpha|/2)!)
  CHECK(t.lam({6, 0}) == doctest::Approx(720.0 / (64.0 * 6.0)));
}

TEST_CASE("moment tables over random frames") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + trial % 2;
    LagrangianFrame Z = frame_from_symplectic(hqt::random_symplectic(d, rng), 1e-9);
    MomentTable t = moment_table(Z, d == 1 ? 4 : 2);
    CHECK(t.triangular_residual < 1e-10);
    CHECK(t.lam(MultiIndex(2 * d, 0)) == 1.0);
    for (const auto& [a, l] : t.lambda)
      if (order(a) % 2 == 1) CHECK(l == 0.0);
  }
}

TEST_CASE("anti-Wick symbol examples") {
  Polynomial x = pv(2, 1), xi = pv(2, 0);
  Polynomial q = x.pow(3) + x * xi * xi;
  CutoffPolynomial c(q, false);
  CutoffPolynomial s0 = anti_wick_symbol(c, 0, 0.1);
  CHECK((s0.terms.at(-1) - q).is_zero());
  CutoffPolynomial s1 = anti_wick_symbol(c, 1, 0.1);
  Polynomial expect = q - q.laplacian() * cplx(0.1 / 4.0);
  CHECK((s1.terms.at(-1) - expect).is_zero());
  // frame-coordinate and moment-table routes agree
  std::mt19937 rng(2);
  LagrangianFrame Z = frame_from_symplectic(hqt::random_symplectic(1, rng), 1e-9);
  MomentTable t = moment_table(Z, 2);
  Polynomial qz = random_poly(2, 4, rng);
  const double hbar = 0.3;
  Polynomial route_a = anti_wick_symbol(qz, t, hbar);
  Mat F = symplectic_of(Z);
  Polynomial qw = qz.compose_linear(F.cast<cplx>());
  CutoffPolynomial route_b = anti_wick_symbol(CutoffPolynomial(qw, false), 2, hbar);
  for (int k = 0; k < 5; ++k) {
    Vec w = Vec::Random(2);
    CHECK(std::abs(route_a(Vec(F * w)) - route_b(w)) < 1e-10 * (1.0 + std::abs(route_a(Vec(F * w)))));
  }
}

TEST_CASE("anti-Wick round trip through the ground-state Wigner convolution") {
  std::mt19937 rng(4);
  LagrangianFrame Z = frame_from_symplectic(hqt::random_symplectic(1, rng), 1e-9);
  MomentTable t = moment_table(Z, 2);
  Polynomial q = random_poly(2, 4, rng);
  const double hbar = 0.2;
  Polynomial sigma = anti_wick_symbol(q, t, hbar);
  // Gaussian with covariance hbar G^{-1}/2 = hbar L L^T / 2
  Mat L = geometry_of(Z).G.inverse().llt().matrixL();
  const Rule r = gauss_hermite(12);
  for (int k = 0; k < 4; ++k) {
    Vec z = Vec::Random(2);
    cplx conv = 0.0;
    for (int i = 0; i < r.size(); ++i)
      for (int j = 0; j < r.size(); ++j) {
        Vec y(2);
        y << r.x[i], r.x[j];
        conv += r.w[i] * r.w[j] / std::numbers::pi * sigma(Vec(z + std::sqrt(hbar) * L * y));
      }
    CHECK(std::abs(conv - q(z)) < 1e-10 * (1.0 + std::abs(q(z))));
  }
}

TEST_CASE("Lambda prefactor") {
  CHECK(lambda_prefactor({0}, {0}) == doctest::Approx(1.0));
  CHECK(lambda_prefactor({1}, {0}) == doctest::Approx(1.0));
  for (int a1 = 0; a1 <= 10; ++a1)
    for (int g = -std::min(a1, 8); g <= 8; ++g) CHECK(lambda_prefactor({a1}, {g}) <= 1.0 + 1e-14);
  for (int a1 = 0; a1 <= 5; ++a1)
    for (int a2 = 0; a2 + a1 <= 10; ++a2)
      for (int g1 = -a1; g1 <= 4; ++g1)
        for (int g2 = -a2; std::abs(g1) + std::abs(g2) <= 8 && g2 <= 8; ++g2)
          CHECK(lambda_prefactor({a1, a2}, {g1, g2}) <= 1.0 + 1e-14);
}

TEST_CASE("Bargmann matrix elements: normalization, degree check, linear symbol") {
  CutoffPolynomial one(Polynomial::constant(2, 1.0), false);
  for (int a = 0; a < 8; ++a) CHECK(std::abs(bargmann_matrix_element(one, {a}, {0}, 0.01) - 1.0) < 1e-12);
  CutoffPolynomial cub(pv(2, 1).pow(3), true);
  CHECK(bargmann_matrix_element(cub, {2}, {4}, 0.01) == cplx(0.0));
  CHECK(bargmann_matrix_element(cub, {5}, {-4}, 0.01) == cplx(0.0));
  const double hbar = 0.05;
  CutoffPolynomial x(pv(2, 1), false);
  CHECK(std::abs(bargmann_matrix_element(x, {0}, {1}, hbar) - std::sqrt(hbar / 2)) < 1e-14);
  CHECK(std::abs(bargmann_matrix_element(x, {3}, {1}, hbar) - std::sqrt(2 * hbar)) < 1e-14);
}

TEST_CASE("Bargmann elements agree with grid Weyl matrix elements for polynomials") {
  std::mt19937 rng(8);
  const double hbar = 0.1;
  Polynomial sigma = random_poly(2, 4, rng);
  // Weyl symbol of Op^AW(sigma) is exp(hbar Delta / 4) sigma
  Polynomial weyl = sigma, cur = sigma;
  double c = 1.0;
  for (int m = 1; m <= 2; ++m) {
    cur = cur.laplacian();
    c *= hbar / (4.0 * m);
    weyl = weyl + cur * cplx(c);
  }
  Vec cc(1), hw(1);
  cc << 0.0;
  hw << 2.5;
  Grid g = Grid::centered(cc, hw, {192});
  WavePacketBasis b = make_basis(standard_frame(1), Vec::Zero(2), hbar, 6);
  PacketEvaluator ev(b);
  std::vector<GridFunction> phi;
  for (int a = 0; a <= 6; ++a) phi.push_back(sample_grid(g, hbar, [&](const Vec& x) { return ev.value({a}, x); }));
  CutoffPolynomial s(sigma, false);
  double err = 0.0;
  for (int be = 0; be <= 6; ++be) {
    GridFunction op = weyl_apply_grid(weyl, phi[be]);
    for (int a = 0; a <= 6; ++a) {
      const cplx grid = grid_inner(phi[a], op);
      err = std::max(err, std::abs(grid - bargmann_matrix_element(s, {a}, {be - a}, hbar)));
    }
  }
  CHECK(err < 1e-9);
}

TEST_CASE("Bargmann elements with cutoff against direct polar quadrature") {
  std::mt19937 rng(9);
  const double hbar = 0.3;
  Polynomial q = random_poly(2, 3, rng);
  CutoffPolynomial s = anti_wick_symbol(CutoffPolynomial(q, true), 2, hbar);
  for (int a = 0; a <= 3; ++a)
    for (int be = 0; be <= 4; ++be) {
      // pi^{-1} int sigma e^{-r^2} zeta^a conj(zeta)^be r dr dtheta
      const int nth = 64;
      cplx total = 0.0;
      for (int k = 0; k < nth; ++k) {
        const double th = 2 * std::numbers::pi * k / nth;
        auto f = [&](double r, bool re) {
          const cplx zeta = r * std::exp(I_unit * th);
          Vec w(2);
          w << std::sqrt(2 * hbar) * zeta.imag(), std::sqrt(2 * hbar) * zeta.real();
          const cplx v = s(w) * std::exp(-r * r) * std::pow(zeta, a) * std::pow(std::conj(zeta), be) * r;
          return re ? v.real() : v.imag();
        };
        const double rmax = std::sqrt(3.0 / (2 * hbar));
        total += cplx(integrate([&](double r) { return f(r, true); }, 0.0, rmax),
                      integrate([&](double r) { return f(r, false); }, 0.0, rmax)) *
                 (2 * std::numbers::pi / nth);
      }
      total /= std::numbers::pi * std::sqrt(std::tgamma(a + 1.0) * std::tgamma(be + 1.0));
      CHECK(std::abs(total - bargmann_matrix_element(s, {a}, {be - a}, hbar)) < 1e-9);
    }
}

TEST_CASE("radial reduction in two dimensions") {
  const double hbar = 0.2;
  CutoffPolynomial chi(Polynomial::constant(4, 1.0), true);
  for (MultiIndex a : {MultiIndex{0, 0}, MultiIndex{2, 1}, MultiIndex{3, 4}}) {
    // (1/(a1! a2!)) int int s1^a1 s2^a2 e^{-s1-s2} chi(2h(s1+s2))
    const double top = 1.5 / hbar;
    const double v = integrate(
        [&](double s1) {
          return integrate(
              [&](double s2) {
                return std::pow(s1, a[0]) * std::pow(s2, a[1]) * std::exp(-s1 - s2) * bump(2 * hbar * (s1 + s2));
              },
              0.0, std::max(top - s1, 0.0));
        },
        0.0, top);
    const double expect = v / (std::tgamma(a[0] + 1.0) * std::tgamma(a[1] + 1.0));
    CHECK(std::abs(bargmann_matrix_element(chi, a, {0, 0}, hbar).real() - expect) < 1e-9);
  }
}

namespace {

// Evolves c0 with c' = (kappa - mu) c along the trajectory and compares the reconstructed packet
// with dense grid propagation of the initial superposition. Returns the max relative error.
double coefficient_vs_grid(SymbolPtr P, const Vec& z0, const CVec& c0, int K, int N, double hbar,
                           const std::vector<double>& targets) {
  Vec cc(1), hw(1);
  cc << 0.0;
  hw << 2.5;
  Grid g = Grid::centered(cc, hw, {160});
  auto index = std::make_shared<const IndexSet>(1, K);
  const LagrangianFrame Z0 = standard_frame(1);
  PacketEvaluator ev0(make_basis(Z0, z0, hbar, K));
  GridFunction psi0 = sample_grid(g, hbar, [&](const Vec& x) { return ev0.synthesize(c0, x); });
  CMat H = weyl_matrix_grid(*P, g, hbar);
  std::vector<double> nodes;
  for (int k = 0; k <= 100; ++k) nodes.push_back(targets.front() * k / 100.0);
  Trajectory tr = integrate_flow(P, z0, Z0, nodes);
  auto gen = [&](double t) {
    const FlowState s = tr.at(t);
    CMat A = assemble_kappa(*P, Z0, s, hbar, index).entries;
    if (N > 0) A -= assemble_mu(P, s, N, hbar, index).entries;
    return A;
  };
  double worst = 0.0;
  for (double t : targets) {
    CVec exact = dense_propagate(CMat(-I_unit / hbar * H), psi0.values, t);
    CVec c = dense_propagate(gen, c0, 0.0, t, 1e-10);
    const FlowState s = tr.at(t);
    WavePacketBasis b = make_basis(s.Z, s.z, hbar, K);
    b.log_det_Q = s.log_det_Q;
    PacketEvaluator ev(b);
    const cplx pre = std::exp(I_unit * s.Lambda / hbar + s.rho);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      err = std::max(err, std::abs(exact(i) - pre * ev.synthesize(c, g.point(i))));
    worst = std::max(worst, err / exact.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("kappa structure") {
  auto P = std::make_shared<PolySymbol>(pv(2, 0) + pv(2, 1) * pv(2, 1) * cplx(0.0, 1.0));
  const Vec z0 = to_internal(Vec(Eigen::Vector2d(0.3, 0.0)));
  Trajectory tr = integrate_flow(P, z0, standard_frame(1), std::vector<double>{0.0, -0.5});
  auto index = std::make_shared<const IndexSet>(1, 8);
  for (const FlowState& s : tr.nodes) {
    CouplingBand k = assemble_kappa(*P, tr.Z0, s, 0.05, index);
    CHECK(k.entries.col(0).norm() == 0.0);
    for (int r = 0; r < index->size(); ++r)
      for (int c = 0; c < index->size(); ++c) {
        const int ar = order(index->at(r)), ac = order(index->at(c));
        if (ac < ar || ac - ar > 2) CHECK(k.entries(r, c) == cplx(0.0));
      }
  }
}

TEST_CASE("normalization velocity matches finite differences") {
  auto P = std::make_shared<PolySymbol>(pv(2, 0) + pv(2, 1) * pv(2, 1) * cplx(0.0, 1.0) +
                                        pv(2, 1).pow(3) * cplx(1.0 / 6.0) + pv(2, 0) * pv(2, 0) * cplx(0.0, 0.3));
  const Vec z0 = to_internal(Vec(Eigen::Vector2d(0.3, 0.1)));
  const double h = 1e-4, t = -0.3;
  Trajectory tr = integrate_flow(P, z0, standard_frame(1), std::vector<double>{0.0, t - h, t, t + h});
  const FlowState &a = tr.node_at(t - h), &b = tr.node_at(t), &c = tr.node_at(t + h);
  const CMat fd = b.N.inverse() * (c.N - a.N) / (2 * h);
  CHECK((normalization_velocity(*P, tr.Z0, b) - fd).norm() < 1e-6);
}

TEST_CASE("mu vanishes for quadratic symbols and is anti-Hermitian for real ones") {
  auto index = std::make_shared<const IndexSet>(1, 8);
  auto Q = std::make_shared<PolySymbol>(pv(2, 0) + pv(2, 1) * pv(2, 1) * cplx(0.0, 1.0));
  Trajectory tq = integrate_flow(Q, to_internal(Vec(Eigen::Vector2d(0.3, 0.0))), standard_frame(1),
                                 std::vector<double>{0.0, -0.4});
  for (const FlowState& s : tq.nodes) CHECK(assemble_mu(Q, s, 3, 0.05, index).entries.norm() == 0.0);
  // real cubic with a real frame flow: (i/h) <Op phi_b, phi_a> is anti-Hermitian
  auto R = std::make_shared<PolySymbol>((pv(2, 0) * pv(2, 0) + pv(2, 1) * pv(2, 1)) * cplx(0.5) +
                                        pv(2, 1).pow(3) * cplx(0.2) + pv(2, 0) * pv(2, 1) * pv(2, 1) * cplx(0.1));
  Trajectory tr = integrate_flow(R, to_internal(Vec(Eigen::Vector2d(0.3, 0.2))), standard_frame(1),
                                 std::vector<double>{0.0, 0.7, -0.4});
  for (const FlowState& s : tr.nodes) {
    CMat M = assemble_mu(R, s, 3, 0.05, index).entries;
    CHECK(M.norm() > 0.0);
    CHECK((M + M.adjoint()).norm() <= 1e-8 * M.norm());
  }
}

TEST_CASE("mu band is exactly zero beyond 2N on a moved frame") {
  // the cutoff Laplacians raise the polynomial degree past 2N; the extra zeta
  // monomials cancel and must not leave rounding in the band
  auto index = std::make_shared<const IndexSet>(1, 12);
  const Polynomial x = pv(2, 1);
  auto P = std::make_shared<PolySymbol>(pv(2, 0) + x * x * cplx(0.0, 1.0) + x.pow(3) * cplx(1.0 / 6) +
                                        x.pow(4) * cplx(1.0 / 24));
  Trajectory tr = integrate_flow(P, Vec::Zero(2), standard_frame(1), std::vector<double>{0.0, -0.05, 0.05});
  for (const FlowState& s : tr.nodes) {
    const CMat M = assemble_mu(P, s, 3, 0.1, index).entries;
    CHECK(M.norm() > 0.0);
    for (int i = 0; i < index->size(); ++i)
      for (int j = 0; j < index->size(); ++j)
        if (std::abs(order(index->at(i)) - order(index->at(j))) > 6) CHECK(M(i, j) == cplx(0.0));
  }
}

TEST_CASE("mu requires a band of order 2N") {
  auto P = std::make_shared<PolySymbol>(pv(2, 1).pow(3));
  Trajectory tr = integrate_flow(P, Vec::Zero(2), standard_frame(1), std::vector<double>{0.0});
  CHECK_THROWS_AS(assemble_mu(P, tr.nodes[0], 3, 0.05, std::make_shared<const IndexSet>(1, 5)), Error);
}

TEST_CASE("coefficient evolution reproduces grid propagation") {
  const double hbar = 0.05;
  CVec c0 = CVec::Zero(21);
  c0(0) = 0.6;
  c0(1) = cplx(0.3, 0.4);
  c0(2) = -0.5;
  SUBCASE("complex quadratic, displaced center") {
    auto P = std::make_shared<PolySymbol>(pv(2, 0) + pv(2, 1) * pv(2, 1) * cplx(0.0, 1.0));
    const double err = coefficient_vs_grid(P, to_internal(Vec(Eigen::Vector2d(0.3, 0.0))), c0, 20, 0, hbar,
                                           {-0.6, -0.3});
    MESSAGE("quadratic relative error " << err);
    CHECK(err < 1e-6);
  }
  SUBCASE("complex cubic through mu") {
    auto P = std::make_shared<PolySymbol>(pv(2, 0) + pv(2, 1) * pv(2, 1) * cplx(0.0, 1.0) +
                                          pv(2, 1).pow(3) * cplx(0.5) + pv(2, 0) * pv(2, 0) * cplx(0.2));
    const double err = coefficient_vs_grid(P, to_internal(Vec(Eigen::Vector2d(0.3, 0.1))), c0, 20, 3, hbar,
                                           {-0.5, -0.25});
    MESSAGE("cubic relative error " << err);
    CHECK(err < 1e-4);
    // without mu the cubic part is missing entirely
    CHECK(coefficient_vs_grid(P, to_internal(Vec(Eigen::Vector2d(0.3, 0.1))), c0, 20, 0, hbar, {-0.5}) > 1e-2);
  }
}
