#pragma once

#include "hq/core.hpp"

namespace hq {

inline double tol_frame_default = 1e-10;

class LagrangianFrame {
 public:
  LagrangianFrame() = default;
  int dim() const { return static_cast<int>(P_.rows()); }
  const CMat& P() const { return P_; }
  const CMat& Q() const { return Q_; }
  CMat Z() const;
  // B = P Q^{-1}, symmetric with Im B > 0
  CMat B() const;
  double isotropy_residual() const { return iso_; }
  double normalization_residual() const { return norm_; }

  friend LagrangianFrame make_frame(const CMat& P, const CMat& Q, double tol);
  friend LagrangianFrame frame_unchecked(const CMat& Z);

 private:
  CMat P_, Q_;
  double iso_ = 0.0, norm_ = 0.0;
};

struct FrameGeometry {
  Mat G, J;
  CMat pi_L, pi_Lbar;
};

LagrangianFrame make_frame(const CMat& P, const CMat& Q, double tol = tol_frame_default);
LagrangianFrame make_frame(const CMat& Z, double tol = tol_frame_default);
// skips the invariant check; residuals are still recorded
LagrangianFrame frame_unchecked(const CMat& Z);

// Z0 = (i I, I)
LagrangianFrame standard_frame(int d);

// Z = F Z0 for real symplectic F; F = [Im Z | Re Z] inverts it.
LagrangianFrame frame_from_symplectic(const Mat& F, double tol = tol_frame_default);
Mat symplectic_of(const LagrangianFrame& Z);

struct Normalized {
  LagrangianFrame frame;
  CMat N;
};
// N = ((1/2i) W* Omega W)^{-1/2}
Normalized normalize_frame(const CMat& W, double tol = tol_frame_default);

// principal inverse square root of a Hermitian positive matrix; throws NotPositive below floor
CMat hermitian_inv_sqrt(const CMat& C, double floor = 1e-14);

FrameGeometry geometry_of(const LagrangianFrame& Z);

double symplectic_defect(const Mat& F);

}  // namespace hq
