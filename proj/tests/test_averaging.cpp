#include <numbers>

#include "doctest.h"
#include "hq/averaging.hpp"
#include "test_util.hpp"

using namespace hq;

namespace {

constexpr double pi = std::numbers::pi;

Vec v2(double a, double b) { return Vec(Eigen::Vector2d(a, b)); }

// internal (p1, p2, q1, q2); x_j = q_j, xi_j = p_j
double x(const Vec& z, int j) { return z(2 + j); }

std::vector<Vec> ball_points(int n, double R, std::mt19937& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec z(4);
    for (int k = 0; k < 4; ++k) z(k) = g(rng);
    out.push_back(z.normalized() * R * std::pow(u(rng), 0.25));
  }
  return out;
}

// time average over [0, 2 pi] by a fine Riemann sum (independent of the library's Fourier route)
cplx riemann_average(const PhaseFunction& a, const FrequencyVector& w, const Vec& z, int n = 4096) {
  cplx s = 0.0;
  for (int m = 0; m < n; ++m) s += a(oscillator_orbit(z, w, 2 * pi * m / n));
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("resonance modules") {
  FrequencyVector a = make_frequency(v2(1, 1));
  CHECK(a.d_omega == 1);
  REQUIRE(a.resonances.size() == 1);
  CHECK(std::abs(a.resonances[0][0]) == 1);
  CHECK(a.resonances[0][0] == -a.resonances[0][1]);
  FrequencyVector b = make_frequency(v2(1, 2));
  CHECK(b.d_omega == 1);
  CHECK(b.resonances[0][0] == -2 * b.resonances[0][1]);
  FrequencyVector c = make_frequency(v2(1, std::sqrt(2.0)));
  CHECK(c.d_omega == 2);
  CHECK(c.resonances.empty());
  CHECK(a.periodic());
  CHECK(!c.periodic());
  CHECK_THROWS_AS(make_frequency(v2(1, 0)), Error);
}

TEST_CASE("averages: examples") {
  std::mt19937 rng(5);
  const FrequencyVector w11 = make_frequency(v2(1, 1)), w12 = make_frequency(v2(1, 2));
  auto x1sq = [](const Vec& z) { return cplx(x(z, 0) * x(z, 0)); };
  auto H = [](const Vec& z) { return cplx(0.5 * z.squaredNorm()); };
  auto x1x2 = [](const Vec& z) { return cplx(x(z, 0) * x(z, 1)); };
  for (const Vec& z : ball_points(10, 2.0, rng)) {
    CHECK(std::abs(average(x1sq, z, w11) - action_vector(z)(0)) < 1e-12);
    CHECK(std::abs(average(H, z, w11) - H(z)) < 1e-12);
    CHECK(std::abs(average(x1x2, z, w12)) < 1e-12);
    CHECK(std::abs(riemann_average(x1x2, w12, z)) < 1e-12);
    // the non-periodic torus route agrees on the same question
    CHECK(std::abs(average(x1sq, z, make_frequency(v2(1, std::sqrt(2.0)), 8)) - action_vector(z)(0)) < 1e-12);
  }
}

TEST_CASE("averages: projection, invariance, polynomial route") {
  std::mt19937 rng(6);
  const FrequencyVector w = make_frequency(v2(1, 1));
  Polynomial p(4);
  std::normal_distribution<double> g;
  for (int k = 0; k <= 4; ++k)
    for (const MultiIndex& m : indices_of_order(4, k)) p.add_term(m, cplx(g(rng), g(rng)));
  const Polynomial Ip = average(p, w);
  const PhaseFunction pf = [&](const Vec& z) { return p(z); };
  const PhaseFunction If = [&](const Vec& z) { return Ip(z); };
  for (const Vec& z : ball_points(20, 2.0, rng)) {
    CHECK(std::abs(If(z) - average(pf, z, w)) < 1e-10);
    CHECK(std::abs(If(z) - riemann_average(pf, w, z)) < 1e-10);
    CHECK(std::abs(average(If, z, w) - If(z)) < 1e-8);
    CHECK(std::abs(flow_derivative_of(If, w, z)) < 1e-8);
  }
  CHECK((average(Ip, w) - Ip).chop(0.0).terms().size() <= Ip.terms().size());
  Polynomial diff = average(Ip, w) - Ip;
  double m = 0.0;
  for (const auto& [a, c] : diff.terms()) m = std::max(m, std::abs(c));
  CHECK(m < 1e-12);
}

TEST_CASE("cohomological equation") {
  std::mt19937 rng(7);
  const FrequencyVector w11 = make_frequency(v2(1, 1));
  const std::vector<Vec> pts = ball_points(100, 2.0, rng);
  CohomologicalSolution zero = solve_cohomological([](const Vec&) { return cplx(0.0); }, w11, pts);
  for (int i = 0; i < 5; ++i) CHECK(zero.f(pts[i]) == cplx(0.0));
  auto g = [](const Vec& z) { return cplx(x(z, 0) * x(z, 0) - 0.5 * (z(0) * z(0) + z(2) * z(2))); };
  CohomologicalSolution s = solve_cohomological(g, w11, pts);
  CHECK(s.removed_mean < 1e-12);
  double worst = 0.0, mean = 0.0;
  for (const Vec& z : pts) {
    worst = std::max(worst, std::abs(flow_derivative_of(s.f, w11, z) - g(z)));
    mean = std::max(mean, std::abs(average(s.f, z, w11)));
  }
  CHECK(worst <= 1e-8);
  CHECK(mean <= 1e-8);
  // partially Diophantine frequencies with the torus Fourier route
  const FrequencyVector wd = make_frequency(v2(1, std::sqrt(2.0)), 12);
  auto g2 = [](const Vec& z) { return cplx(x(z, 0) * x(z, 1) + z(0) * x(z, 1) * x(z, 1) * z(1)); };
  CohomologicalSolution s2 = solve_cohomological(g2, wd, std::vector<Vec>(pts.begin(), pts.begin() + 20));
  const Vec z = pts[3];
  const cplx ig = average(g2, z, wd);
  for (int i = 0; i < 20; ++i)
    CHECK(std::abs(flow_derivative_of(s2.f, wd, pts[i]) - (g2(pts[i]) - average(g2, pts[i], wd))) <= 1e-8);
  CHECK(std::abs(ig) < 10.0);
  // a nonzero mean is removed and reported
  auto g3 = [](const Vec& z) { return cplx(x(z, 0) * x(z, 1)); };
  CohomologicalSolution s3 = solve_cohomological(g3, w11, pts);
  CHECK(s3.removed_mean > 1e-3);
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(flow_derivative_of(s3.f, w11, pts[i]) - (g3(pts[i]) - average(g3, pts[i], w11))) <= 1e-8);
}

TEST_CASE("Diophantine scan") {
  for (const DiophantineFit& f : diophantine_check(make_frequency(v2(1, 1)), 10))
    if (f.gamma == 0) CHECK(f.varsigma == doctest::Approx(1.0));
  for (int kmax : {5, 20})
    for (const DiophantineFit& f : diophantine_check(make_frequency(v2(1, 2)), kmax))
      if (f.gamma == 0) CHECK(f.varsigma == doctest::Approx(1.0));
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  const std::vector<int> fib{1, 1, 2, 3, 5, 8, 13, 21, 34};
  for (const DiophantineFit& f : diophantine_check(make_frequency(v2(1, phi), 30), 30)) {
    // with weights |k|^gamma, gamma >= 1, the unit vectors bind; the best approximations show at gamma = 0
    if (f.gamma != 0) continue;
    const int a = std::abs(f.binding[0]), b = std::abs(f.binding[1]);
    bool consecutive = false;
    for (std::size_t i = 0; i + 1 < fib.size(); ++i) consecutive = consecutive || (b == fib[i] && a == fib[i + 1]);
    CHECK(consecutive);
    CHECK(f.binding[0] * f.binding[1] < 0);
  }
}

TEST_CASE("energy lattice") {
  Vec z(2);
  z << 0.0, 1.0;  // H = 1/2
  EnergyLattice e = energy_lattice(z, 0.1);
  CHECK(e.N[0] == 5);
  CHECK(e.E(0) == doctest::Approx(0.55));
  EnergyLattice g = energy_lattice(Vec::Zero(4), 0.02);
  CHECK(g.N == std::vector<int>{0, 0});
  CHECK(g.E(1) == doctest::Approx(0.01));
  // M_H = (0.5, 0.5)
  Vec z2(4);
  z2 << 0.0, 0.0, 1.0, 1.0;
  for (double h : {0.04, 0.01, 0.003}) {
    EnergyLattice l = energy_lattice(z2, h);
    CHECK(std::abs(l.E.sum() - 1.0) <= h + 1e-14);
    CHECK(!l.clipped);
  }
  std::mt19937 rng(3);
  for (const Vec& p : ball_points(20, 2.0, rng)) {
    EnergyLattice l = energy_lattice(p, 0.013);
    if (!l.clipped) CHECK(std::abs(l.E.sum() - action_vector(p).sum()) <= 2 * 0.013 + 1e-14);
    CHECK((l.E - action_vector(p)).cwiseAbs().maxCoeff() <= 0.013 / 2 + (l.clipped ? 0.013 : 0.0) + 1e-14);
  }
}
