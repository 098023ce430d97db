#pragma once

#include <optional>

#include "hq/core.hpp"
#include "hq/frames.hpp"

namespace hq {

struct WavePacketBasis {
  LagrangianFrame frame;
  Vec center;  // (p, q)
  double hbar = 1.0;
  int K = 0;
  // log det Q on a continuously tracked branch; principal branch when empty
  std::optional<cplx> log_det_Q;
};

WavePacketBasis make_basis(const LagrangianFrame& Z, const Vec& center, double hbar, int K);

// log det of a complex matrix on the principal branch of each LU pivot product
cplx principal_log_det(const CMat& A);

// Evaluates phi_alpha[Z, z] for all |alpha| <= K at a point via the three-term recurrence
//   sqrt(a_j+1) phi_{a+e_j} = sqrt(2/h) (Q^{-1}(x-q))_j phi_a - sum_k (Q^{-1} conj Q)_{jk} sqrt(a_k) phi_{a-e_k}.
class PacketEvaluator {
 public:
  explicit PacketEvaluator(const WavePacketBasis& b);
  const IndexSetPtr& index() const { return index_; }
  cplx ground(const Vec& x) const;
  CVec all(const Vec& x) const;
  cplx value(const MultiIndex& a, const Vec& x) const;
  // sum_alpha c_alpha phi_alpha(x)
  cplx synthesize(const CVec& c, const Vec& x) const;

 private:
  WavePacketBasis b_;
  IndexSetPtr index_;
  CMat Qinv_, B_, M_;
  cplx pref_;
  std::vector<int> parent_axis_;
};

std::vector<cplx> eval_ground_state(const WavePacketBasis& b, const std::vector<Vec>& points);
std::vector<cplx> eval_excited_state(const WavePacketBasis& b, const MultiIndex& a, const std::vector<Vec>& points);

enum class Ladder { Raise, Lower };
CoefficientVector ladder_apply(Ladder kind, int j, const CoefficientVector& c);

// Coefficients b_{alpha beta} of p_alpha(y) = sum_beta b_{alpha beta} y^beta with
// p_{alpha+e_j} = 2 y_j p_alpha - e_j . M grad p_alpha.
class HermitePolynomialTable {
 public:
  HermitePolynomialTable(const CMat& M, int K);
  const CMat& M() const { return M_; }
  cplx coeff(const MultiIndex& a, const MultiIndex& b) const;
  const IndexSetPtr& index() const { return index_; }
  // phi_alpha through the polynomial prefactor; y = Q^{-1}(x - q)/sqrt(h)
  cplx poly(const MultiIndex& a, const CVec& y) const;
  // max over stored entries of |b| / bound; the bound holds when this is <= 1
  double bound_ratio() const;

 private:
  CMat M_;
  IndexSetPtr index_;
  CMat table_;  // rows alpha, columns beta
};

// phi_alpha via the polynomial prefactor route (reference for the recurrence evaluator)
cplx eval_excited_polynomial(const WavePacketBasis& b, const HermitePolynomialTable& tab, const MultiIndex& a,
                             const Vec& x);

// phi-hat(xi) = (2 pi h)^{-d/2} int phi(x) e^{-i x.xi/h} dx. The transform of phi_alpha[Z,(p,q)]
// equals c * phi_alpha[(-Q; P), (-q, p)] with |c| = 1 fixed by the ground-state transform.
class FourierEvaluator {
 public:
  explicit FourierEvaluator(const WavePacketBasis& b);
  cplx value(const MultiIndex& a, const Vec& xi) const;
  cplx ground_closed_form(const Vec& xi) const;

 private:
  WavePacketBasis b_;
  std::unique_ptr<PacketEvaluator> dual_;
  cplx c_;
};

struct LiftedFrame {
  LagrangianFrame Zcal;  // doubled dimension
  CMat G;                // mixed metric, 2i G = Pcal Qcal^{-1}
};

LiftedFrame lift_frames(const LagrangianFrame& Z1, const LagrangianFrame& Z2);

// W_h[phi_alpha[Z1,z1], phi_beta[Z2,z2]] at phase-space points given as (p, q).
std::vector<cplx> wigner_lift_eval(const WavePacketBasis& b1, const WavePacketBasis& b2, const MultiIndex& a,
                                   const MultiIndex& bidx, const std::vector<Vec>& points);

}  // namespace hq
