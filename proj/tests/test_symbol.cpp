#include "doctest.h"
#include "hq/symbol.hpp"
#include "test_util.hpp"

using namespace hq;

TEST_CASE("polynomial arithmetic and evaluation") {
  Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  Polynomial p = (x + y).pow(3) - x * y * cplx(2.0);
  CHECK(p.degree() == 3);
  Vec z(2);
  z << 0.3, -1.2;
  const double expect = std::pow(0.3 - 1.2, 3) - 2.0 * 0.3 * -1.2;
  CHECK(std::abs(p(z) - expect) < 1e-14);
  CHECK((p - p).is_zero());
  CHECK(p.graded(3, 3).terms().size() == 4);
}

TEST_CASE("derivatives and laplacian of a cubic") {
  Polynomial x = Polynomial::variable(2, 0), y = Polynomial::variable(2, 1);
  Polynomial p = x.pow(3) + x * y * y * cplx(I_unit);
  Vec z(2);
  z << 0.7, 0.4;
  CHECK(std::abs(p.derivative(0)(z) - (3 * 0.49 + I_unit * 0.16)) < 1e-14);
  CHECK(std::abs(p.derivative(MultiIndex{1, 1})(z) - 2.0 * I_unit * 0.4) < 1e-14);
  CHECK(std::abs(p.laplacian()(z) - (6 * 0.7 + 2.0 * I_unit * 0.7)) < 1e-14);
}

TEST_CASE("affine and linear composition agree with direct evaluation") {
  std::mt19937 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Polynomial p(3);
  for (int k = 0; k < 10; ++k) {
    MultiIndex m{int(rng() % 3), int(rng() % 3), int(rng() % 2)};
    p.add_term(m, cplx(n(rng), n(rng)));
  }
  Mat F = Mat::Random(3, 2);
  Vec c = Vec::Random(3), w = Vec::Random(2);
  Polynomial pa = p.compose_affine(c, F);
  CHECK(std::abs(pa(w) - p(Vec(c + F * w))) < 1e-12);
  CMat Fc = F.cast<cplx>() * cplx(0.5, 0.25);
  Polynomial pl = p.compose_linear(Fc);
  CHECK(std::abs(pl(w) - p.eval(Fc * w.cast<cplx>())) < 1e-12);
}

TEST_CASE("public to internal variable order") {
  // V = x, A = xi in d = 1; internal order is (p, q)
  Polynomial x = Polynomial::variable(2, 0), xi = Polynomial::variable(2, 1);
  auto s = PolySymbol::from_public(x, xi);
  Vec z(2);
  z << 2.0, 5.0;  // p = 2, q = 5
  CHECK(std::abs(s->value(z) - cplx(5.0, 2.0)) < 1e-15);
  CHECK(s->dim() == 1);
  CMat H = s->hessian(z);
  CHECK(H.norm() == 0.0);
  CVec g = s->gradient(z);
  CHECK(std::abs(g(0) - I_unit) < 1e-15);
  CHECK(std::abs(g(1) - 1.0) < 1e-15);
}

TEST_CASE("function symbol respects its order") {
  FunctionSymbol f(1, 2, [](const Vec& z, const MultiIndex& g) -> cplx {
    return order(g) == 0 ? cplx(z.squaredNorm()) : cplx(0.0);
  });
  Vec z = Vec::Ones(2);
  CHECK(f.value(z) == cplx(2.0));
  CHECK_THROWS_AS(f.derivative(z, MultiIndex{3, 0}), Error);
}

TEST_CASE("indices of fixed order") {
  CHECK(indices_of_order(2, 3).size() == 4);
  CHECK(indices_of_order(4, 2).size() == 10);
}
