#include "hq/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "hq/core.hpp"

namespace hq {

namespace {

Rule fixed_rule(const gsl_integration_fixed_type* type, int n, double a, double b, double alpha) {
  gsl_integration_fixed_workspace* ws = gsl_integration_fixed_alloc(type, n, a, b, alpha, 0.0);
  if (!ws) throw Error(ErrorKind::QuadratureFailure, "cannot build fixed rule");
  Rule r;
  const double* nodes = gsl_integration_fixed_nodes(ws);
  const double* weights = gsl_integration_fixed_weights(ws);
  r.x.assign(nodes, nodes + n);
  r.w.assign(weights, weights + n);
  gsl_integration_fixed_free(ws);
  return r;
}

// rules are cached by (kind, n, alpha); callers copy and rescale
const Rule& cached(int kind, int n, double alpha) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(kind, n, alpha);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Rule r;
  if (kind == 0) r = fixed_rule(gsl_integration_fixed_legendre, n, -1.0, 1.0, 0.0);
  if (kind == 1) r = fixed_rule(gsl_integration_fixed_hermite, n, 0.0, 1.0, 0.0);
  if (kind == 2) r = fixed_rule(gsl_integration_fixed_laguerre, n, 0.0, 1.0, alpha);
  return cache.emplace(key, std::move(r)).first->second;
}

}  // namespace

Rule gauss_legendre(int n, double a, double b) {
  Rule r = cached(0, n, 0.0);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.x[i] = m + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

Rule gauss_hermite(int n) { return cached(1, n, 0.0); }

Rule gauss_laguerre(int n, double alpha) { return cached(2, n, alpha); }

Rule circle_trapezoid(int n) {
  Rule r;
  const double h = 2.0 * std::numbers::pi / n;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(i * h);
    r.w.push_back(h);
  }
  return r;
}

double integrate(const std::function<double(double)>& f, double a, double b, double epsabs, double epsrel,
                 double* abserr) {
  gsl_set_error_handler_off();
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  gsl_function F;
  F.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
  F.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qag(&F, a, b, epsabs, epsrel, 2000, GSL_INTEG_GAUSS61, ws, &result, &err);
  gsl_integration_workspace_free(ws);
  if (status != GSL_SUCCESS && err > 1e3 * std::max(epsabs, epsrel * std::abs(result)))
    throw Error(ErrorKind::QuadratureFailure, "adaptive quadrature did not converge", err);
  if (abserr) *abserr = err;
  return result;
}

double integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks, int n_per_panel) {
  double s = 0.0;
  for (size_t k = 0; k + 1 < breaks.size(); ++k) {
    Rule r = gauss_legendre(n_per_panel, breaks[k], breaks[k + 1]);
    for (int i = 0; i < r.size(); ++i) s += r.w[i] * f(r.x[i]);
  }
  return s;
}

}  // namespace hq
