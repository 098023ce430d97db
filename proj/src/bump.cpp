#include "hq/bump.hpp"

#include <cmath>

namespace hq {

Jet Jet::variable(int order, double x0) {
  Jet j(order, x0);
  if (order >= 1) j.c[1] = 1.0;
  return j;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet r(a.order());
  for (int k = 0; k <= a.order(); ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

Jet operator-(const Jet& a, const Jet& b) { return a + (-1.0) * b; }

Jet operator*(double s, const Jet& a) {
  Jet r = a;
  for (double& v : r.c) v *= s;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.order());
  for (int k = 0; k <= a.order(); ++k)
    for (int j = 0; j <= k; ++j) r.c[k] += a.c[j] * b.c[k - j];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  Jet r(a.order());
  for (int k = 0; k <= a.order(); ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

Jet exp(const Jet& a) {
  Jet r(a.order());
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= a.order(); ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}

namespace {

// e^{-1/x} for x > 0, flat zero otherwise
Jet flat(const Jet& x) {
  if (x.c[0] <= 0.0) return Jet(x.order());
  Jet one(x.order(), 1.0);
  return exp((-1.0) * (one / x));
}

}  // namespace

Jet smooth_step(const Jet& x) {
  if (x.c[0] <= 0.0) return Jet(x.order());
  if (x.c[0] >= 1.0) return Jet(x.order(), 1.0);
  Jet one(x.order(), 1.0);
  Jet f = flat(x), g = flat(one - x);
  return f / (f + g);
}

std::vector<double> bump_derivatives(double s, int k) {
  std::vector<double> out(k + 1, 0.0);
  if (s <= -1.0 || s >= 3.0) return out;
  Jet x = Jet::variable(k, s);
  Jet one(k, 1.0);
  Jet left = smooth_step(2.0 * (x + one));
  Jet right = smooth_step(Jet(k, 3.0) - x);
  Jet chi = left * right;
  double fact = 1.0;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) fact *= j;
    out[j] = chi.c[j] * fact;
  }
  return out;
}

double bump(double s) { return bump_derivatives(s, 0)[0]; }

}  // namespace hq
