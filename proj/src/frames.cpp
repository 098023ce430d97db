#include "hq/frames.hpp"

#include <Eigen/Eigenvalues>

namespace hq {

CMat LagrangianFrame::Z() const {
  const int d = dim();
  CMat z(2 * d, d);
  z.topRows(d) = P_;
  z.bottomRows(d) = Q_;
  return z;
}

CMat LagrangianFrame::B() const { return P_ * Q_.inverse(); }

LagrangianFrame frame_unchecked(const CMat& Z) {
  const int d = static_cast<int>(Z.cols());
  LagrangianFrame f;
  f.P_ = Z.topRows(d);
  f.Q_ = Z.bottomRows(d);
  const CMat W = omega(d).cast<cplx>();
  f.iso_ = (Z.transpose() * W * Z).cwiseAbs().maxCoeff();
  f.norm_ = (Z.adjoint() * W * Z - 2.0 * I_unit * CMat::Identity(d, d)).cwiseAbs().maxCoeff();
  return f;
}

LagrangianFrame make_frame(const CMat& P, const CMat& Q, double tol) {
  if (P.rows() != P.cols() || Q.rows() != Q.cols() || P.rows() != Q.rows())
    throw Error(ErrorKind::Singular, "frame blocks must be square and of equal size");
  const int d = static_cast<int>(P.rows());
  CMat Z(2 * d, d);
  Z.topRows(d) = P;
  Z.bottomRows(d) = Q;
  LagrangianFrame f = frame_unchecked(Z);
  if (f.iso_ > tol) throw Error(ErrorKind::NotIsotropic, "Z^T Omega Z != 0", f.iso_);
  if (f.norm_ > tol) throw Error(ErrorKind::NotNormalized, "Z* Omega Z != 2i", f.norm_);
  Eigen::FullPivLU<CMat> lq(Q), lp(P);
  if (!lq.isInvertible() || !lp.isInvertible()) throw Error(ErrorKind::Singular, "P or Q block not invertible");
  return f;
}

LagrangianFrame make_frame(const CMat& Z, double tol) {
  const int d = static_cast<int>(Z.cols());
  return make_frame(CMat(Z.topRows(d)), CMat(Z.bottomRows(d)), tol);
}

LagrangianFrame standard_frame(int d) {
  return make_frame(CMat(I_unit * CMat::Identity(d, d)), CMat(CMat::Identity(d, d)));
}

double symplectic_defect(const Mat& F) {
  const int d = static_cast<int>(F.rows()) / 2;
  const Mat W = omega(d);
  return (F.transpose() * W * F - W).cwiseAbs().maxCoeff();
}

LagrangianFrame frame_from_symplectic(const Mat& F, double tol) {
  const double def = symplectic_defect(F);
  if (def > tol) throw Error(ErrorKind::NotSymplectic, "F^T Omega F != Omega", def);
  const int d = static_cast<int>(F.rows()) / 2;
  CMat Z = F.rightCols(d).cast<cplx>() + I_unit * F.leftCols(d).cast<cplx>();
  return make_frame(Z, std::max(tol, 10 * def + 1e-14));
}

Mat symplectic_of(const LagrangianFrame& Z) {
  const int d = Z.dim();
  const CMat z = Z.Z();
  Mat F(2 * d, 2 * d);
  F.leftCols(d) = z.imag();
  F.rightCols(d) = z.real();
  return F;
}

CMat hermitian_inv_sqrt(const CMat& C, double floor) {
  const CMat H = 0.5 * (C + C.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() <= floor) throw Error(ErrorKind::NotPositive, "Hermitian matrix not positive", ev.minCoeff());
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Normalized normalize_frame(const CMat& W, double tol) {
  const int d = static_cast<int>(W.cols());
  const CMat C = (W.adjoint() * omega(d).cast<cplx>() * W) / (2.0 * I_unit);
  CMat N = hermitian_inv_sqrt(C);
  CMat Z = W * N;
  return {make_frame(Z, tol), N};
}

FrameGeometry geometry_of(const LagrangianFrame& Z) {
  const int d = Z.dim();
  const Mat W = omega(d);
  const CMat z = Z.Z();
  const CMat zz = z * z.adjoint();
  FrameGeometry g;
  g.G = W.transpose() * zz.real() * W;
  g.G = 0.5 * (g.G + g.G.transpose());
  g.J = -W * g.G;
  const CMat Wt = W.transpose().cast<cplx>();
  g.pi_L = (0.5 * I_unit) * zz * Wt;
  g.pi_Lbar = (-0.5 * I_unit) * z.conjugate() * z.transpose() * Wt;
  return g;
}

}  // namespace hq
