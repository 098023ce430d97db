#pragma once

#include <functional>
#include <vector>

namespace hq {

struct Rule {
  std::vector<double> x, w;
  int size() const { return static_cast<int>(x.size()); }
};

// Gauss-Legendre on [a, b].
Rule gauss_legendre(int n, double a, double b);
// Gauss-Hermite for weight exp(-x^2).
Rule gauss_hermite(int n);
// Generalized Gauss-Laguerre for weight x^alpha exp(-x) on [0, inf).
Rule gauss_laguerre(int n, double alpha);
// Trapezoid on the circle [0, 2pi), weights sum to 2pi.
Rule circle_trapezoid(int n);

// Adaptive Gauss-Kronrod on [a, b]; throws QuadratureFailure on non-convergence.
double integrate(const std::function<double(double)>& f, double a, double b, double epsabs = 1e-13,
                 double epsrel = 1e-12, double* abserr = nullptr);

// Composite Gauss-Legendre over a partition, used where the integrand is piecewise smooth.
double integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks, int n_per_panel);

}  // namespace hq
