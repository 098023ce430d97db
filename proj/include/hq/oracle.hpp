#pragma once

#include <functional>

#include "hq/core.hpp"
#include "hq/symbol.hpp"

namespace hq {

// Uniform tensor grid in position space, axis 0 slowest.
struct Grid {
  int d = 1;
  std::vector<int> n;
  std::vector<double> lo, dx;

  static Grid centered(const Vec& center, const Vec& half_width, const std::vector<int>& n);
  std::size_t size() const;
  double cell() const;
  Vec point(std::size_t i) const;
  double coord(int axis, int k) const { return lo[axis] + k * dx[axis]; }
};

struct GridFunction {
  Grid grid;
  double hbar = 1.0;
  CVec values;

  double norm() const;
};

GridFunction sample_grid(const Grid& g, double hbar, const std::function<cplx(const Vec&)>& f);
// sum conj(f) g dx
cplx grid_inner(const GridFunction& f, const GridFunction& g);
CMat gram_grid(const std::vector<GridFunction>& fs);

// Spacing must be at most sqrt(hbar)/6 on every axis.
void check_resolution(const Grid& g, double hbar);

// Weyl quantization of a polynomial symbol (internal (p, q) variables) on the grid.
// The xi-dependence is handled exactly through symmetric ordering with spectral derivatives.
GridFunction weyl_apply_grid(const SymbolModel& P, const GridFunction& psi);
GridFunction weyl_apply_grid(const Polynomial& P, const GridFunction& psi);

struct WeylCheck {
  GridFunction value;
  // max deviation from the same application on the grid with doubled spacing, at shared points
  double error_estimate = 0.0;
};
WeylCheck weyl_apply_grid_checked(const SymbolModel& P, const GridFunction& psi);

// Matrix of Op(P) on a d = 1 grid (columns are images of grid unit vectors).
CMat weyl_matrix_grid(const SymbolModel& P, const Grid& g, double hbar);

// W[psi, phi](x_j, xi) = (2 pi)^{-d} int e^{i xi v} psi(x - hbar v/2) conj(phi(x + hbar v/2)) dv
// by the lag sum with v_k = 2 k dx / hbar. d = 1: rows are grid points, columns the xi values.
CMat wigner_grid(const GridFunction& psi, const GridFunction& phi, const std::vector<double>& xi);
// any d, at the grid point with flat index i
cplx wigner_point(const GridFunction& psi, const GridFunction& phi, std::size_t i, const Vec& xi);

// exp(t A) c0 by scaling and squaring
CVec dense_propagate(const CMat& A, const CVec& c0, double t);
// c' = A(t) c from t0 to t1 by an adaptive 7(8) Runge-Kutta-Fehlberg method
CVec dense_propagate(const std::function<CMat(double)>& A, const CVec& c0, double t0, double t1,
                     double tol = 1e-12);
CoefficientVector dense_propagate(const CMat& A, const CoefficientVector& c0, double t);

}  // namespace hq
