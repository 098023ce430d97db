#pragma once

#include <vector>

namespace hq {

// Truncated Taylor series: c[k] = f^(k)(x0)/k!.
struct Jet {
  std::vector<double> c;
  explicit Jet(int order, double value = 0.0) : c(order + 1, 0.0) { c[0] = value; }
  static Jet variable(int order, double x0);
  int order() const { return static_cast<int>(c.size()) - 1; }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator*(double s, const Jet& a);
Jet operator/(const Jet& a, const Jet& b);
Jet exp(const Jet& a);

// Smooth step: 0 for x <= 0, 1 for x >= 1.
Jet smooth_step(const Jet& x);

// Bump chi with support (-1, 3), identically 1 on [-1/2, 2].
double bump(double s);
// chi^(j)(s) for j = 0..k
std::vector<double> bump_derivatives(double s, int k);

}  // namespace hq
