#include "hq/hagedorn.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace hq {

namespace {

// sum of principal logs of eigenvalues; used for matrices with spectrum in the right half plane
cplx log_det_right_half(const CMat& A) {
  Eigen::ComplexEigenSolver<CMat> es(A);
  cplx s = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) s += std::log(es.eigenvalues()(i));
  return s;
}

std::vector<int> parent_axes(const IndexSet& idx) {
  std::vector<int> p(idx.size(), -1);
  for (int i = 1; i < idx.size(); ++i) {
    const MultiIndex& a = idx.at(i);
    for (int j = 0; j < idx.dim(); ++j)
      if (a[j] > 0) {
        p[i] = j;
        break;
      }
  }
  return p;
}

}  // namespace

cplx principal_log_det(const CMat& A) { return std::log(A.determinant()); }

WavePacketBasis make_basis(const LagrangianFrame& Z, const Vec& center, double hbar, int K) {
  WavePacketBasis b;
  b.frame = Z;
  b.center = center;
  b.hbar = hbar;
  b.K = K;
  return b;
}

PacketEvaluator::PacketEvaluator(const WavePacketBasis& b) : b_(b) {
  const int d = b.frame.dim();
  Eigen::FullPivLU<CMat> lu(b.frame.Q());
  if (!lu.isInvertible()) throw Error(ErrorKind::Singular, "Q block not invertible");
  index_ = std::make_shared<IndexSet>(d, b.K);
  Qinv_ = lu.inverse();
  B_ = b.frame.P() * Qinv_;
  M_ = Qinv_ * b.frame.Q().conjugate();
  const cplx ld = b.log_det_Q ? *b.log_det_Q : principal_log_det(b.frame.Q());
  pref_ = std::pow(std::numbers::pi * b.hbar, -0.25 * d) * std::exp(-0.5 * ld);
  parent_axis_ = parent_axes(*index_);
}

cplx PacketEvaluator::ground(const Vec& x) const {
  const int d = b_.frame.dim();
  const Vec p = b_.center.head(d), q = b_.center.tail(d);
  const Vec y = x - q;
  const CVec yc = y.cast<cplx>();
  const cplx quad = yc.dot(B_ * yc);  // dot conjugates the first argument, y is real
  const double lin = p.dot(x - 0.5 * q);
  return pref_ * std::exp(I_unit / b_.hbar * (0.5 * quad + lin));
}

CVec PacketEvaluator::all(const Vec& x) const {
  const IndexSet& idx = *index_;
  const int d = idx.dim();
  CVec phi(idx.size());
  phi(0) = ground(x);
  if (idx.size() == 1) return phi;
  const CVec s = std::sqrt(2.0 / b_.hbar) * (Qinv_ * (x - b_.center.tail(d)).cast<cplx>());
  for (int i = 1; i < idx.size(); ++i) {
    const int j = parent_axis_[i];
    const int par = idx.shifted(i, j, -1);
    const MultiIndex& a = idx.at(par);
    cplx v = s(j) * phi(par);
    for (int k = 0; k < d; ++k) {
      if (a[k] == 0) continue;
      v -= M_(j, k) * std::sqrt(double(a[k])) * phi(idx.shifted(par, k, -1));
    }
    phi(i) = v / std::sqrt(a[j] + 1.0);
  }
  return phi;
}

cplx PacketEvaluator::value(const MultiIndex& a, const Vec& x) const {
  const int i = index_->find(a);
  if (i < 0) throw Error(ErrorKind::IndexOutOfRange, "multi-index beyond K");
  return all(x)(i);
}

cplx PacketEvaluator::synthesize(const CVec& c, const Vec& x) const {
  if (c.size() == 1) return c(0) * ground(x);
  return all(x).cwiseProduct(c).sum();
}

std::vector<cplx> eval_ground_state(const WavePacketBasis& b, const std::vector<Vec>& points) {
  WavePacketBasis b0 = b;
  b0.K = 0;
  PacketEvaluator ev(b0);
  std::vector<cplx> out;
  out.reserve(points.size());
  for (const Vec& x : points) out.push_back(ev.ground(x));
  return out;
}

std::vector<cplx> eval_excited_state(const WavePacketBasis& b, const MultiIndex& a, const std::vector<Vec>& points) {
  if (order(a) > b.K) throw Error(ErrorKind::IndexOutOfRange, "|alpha| > K");
  WavePacketBasis bb = b;
  bb.K = order(a);
  PacketEvaluator ev(bb);
  const int i = ev.index()->find(a);
  std::vector<cplx> out;
  out.reserve(points.size());
  for (const Vec& x : points) out.push_back(ev.all(x)(i));
  return out;
}

CoefficientVector ladder_apply(Ladder kind, int j, const CoefficientVector& c) {
  CoefficientVector out(c.index);
  out.leakage = c.leakage;
  const IndexSet& idx = *c.index;
  for (int i = 0; i < idx.size(); ++i) {
    const int aj = idx.at(i)[j];
    if (kind == Ladder::Raise) {
      const int t = idx.shifted(i, j, 1);
      const cplx v = std::sqrt(aj + 1.0) * c.values(i);
      if (t < 0)
        out.leakage += std::abs(v);
      else
        out.values(t) += v;
    } else if (aj > 0) {
      out.values(idx.shifted(i, j, -1)) += std::sqrt(double(aj)) * c.values(i);
    }
  }
  return out;
}

HermitePolynomialTable::HermitePolynomialTable(const CMat& M, int K)
    : M_(M), index_(std::make_shared<IndexSet>(static_cast<int>(M.rows()), K)) {
  const IndexSet& idx = *index_;
  const int d = idx.dim();
  table_ = CMat::Zero(idx.size(), idx.size());
  table_(0, 0) = 1.0;
  const std::vector<int> par = parent_axes(idx);
  for (int i = 1; i < idx.size(); ++i) {
    const int j = par[i];
    const int a = idx.shifted(i, j, -1);
    for (int bi = 0; bi < idx.size(); ++bi) {
      cplx v = 0.0;
      const int lower = idx.shifted(bi, j, -1);
      if (lower >= 0) v += 2.0 * table_(a, lower);
      for (int k = 0; k < d; ++k) {
        const int up = idx.shifted(bi, k, 1);
        if (up >= 0) v -= M_(j, k) * double(idx.at(bi)[k] + 1) * table_(a, up);
      }
      table_(i, bi) = v;
    }
  }
}

cplx HermitePolynomialTable::coeff(const MultiIndex& a, const MultiIndex& b) const {
  const int i = index_->find(a), j = index_->find(b);
  if (i < 0 || j < 0) return 0.0;
  return table_(i, j);
}

cplx HermitePolynomialTable::poly(const MultiIndex& a, const CVec& y) const {
  const int i = index_->find(a);
  cplx s = 0.0;
  for (int bi = 0; bi < index_->size(); ++bi) {
    if (table_(i, bi) == cplx(0.0)) continue;
    cplx m = 1.0;
    const MultiIndex& b = index_->at(bi);
    for (int k = 0; k < index_->dim(); ++k) m *= std::pow(y(k), b[k]);
    s += table_(i, bi) * m;
  }
  return s;
}

double HermitePolynomialTable::bound_ratio() const {
  const int d = index_->dim();
  const double md = 2.0 * d * M_.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int i = 0; i < index_->size(); ++i) {
    const int na = order(index_->at(i));
    for (int j = 0; j < index_->size(); ++j) {
      const double v = std::abs(table_(i, j));
      if (v == 0.0) continue;
      const int nb = order(index_->at(j));
      const double bound =
          std::pow(md, na) * factorial(na) / (factorial((na - nb) / 2) * multi_factorial(index_->at(j)));
      worst = std::max(worst, v / bound);
    }
  }
  return worst;
}

cplx eval_excited_polynomial(const WavePacketBasis& b, const HermitePolynomialTable& tab, const MultiIndex& a,
                             const Vec& x) {
  const int d = b.frame.dim();
  const CVec y = b.frame.Q().inverse() * (x - b.center.tail(d)).cast<cplx>() / std::sqrt(b.hbar);
  const double norm = std::sqrt(std::pow(2.0, order(a)) * multi_factorial(a));
  return tab.poly(a, y) / norm * eval_ground_state(b, {x})[0];
}

FourierEvaluator::FourierEvaluator(const WavePacketBasis& b) : b_(b) {
  const int d = b.frame.dim();
  CMat Zd(2 * d, d);
  Zd.topRows(d) = -b.frame.Q();
  Zd.bottomRows(d) = b.frame.P();
  Vec cd(2 * d);
  cd.head(d) = -b.center.tail(d);
  cd.tail(d) = b.center.head(d);
  WavePacketBasis dual = make_basis(frame_unchecked(Zd), cd, b.hbar, b.K);
  dual_ = std::make_unique<PacketEvaluator>(dual);
  const cplx ldQ = b.log_det_Q ? *b.log_det_Q : principal_log_det(b.frame.Q());
  const CMat B = b.frame.B();
  c_ = std::exp(-0.5 * ldQ - 0.5 * log_det_right_half(-I_unit * B) + 0.5 * principal_log_det(b.frame.P()));
}

cplx FourierEvaluator::value(const MultiIndex& a, const Vec& xi) const { return c_ * dual_->value(a, xi); }

cplx FourierEvaluator::ground_closed_form(const Vec& xi) const {
  const int d = b_.frame.dim();
  const Vec p = b_.center.head(d), q = b_.center.tail(d);
  const cplx ldQ = b_.log_det_Q ? *b_.log_det_Q : principal_log_det(b_.frame.Q());
  const CMat B = b_.frame.B();
  const CVec u = (xi - p).cast<cplx>();
  const cplx quad = u.dot(B.inverse() * u);
  const double h = b_.hbar;
  return std::pow(std::numbers::pi * h, -0.25 * d) * std::exp(-0.5 * ldQ - 0.5 * log_det_right_half(-I_unit * B)) *
         std::exp(-I_unit / (2.0 * h) * quad - I_unit / h * q.dot(xi - 0.5 * p));
}

LiftedFrame lift_frames(const LagrangianFrame& Z1, const LagrangianFrame& Z2) {
  const int d = Z1.dim();
  const CMat W = omega(d).cast<cplx>();
  // the conjugate sits on the second (antilinear) slot of W[f, g]
  const CMat z1 = Z1.Z(), z2 = Z2.Z().conjugate();
  CMat Zc(4 * d, 2 * d);
  Zc.block(0, 0, 2 * d, d) = W * z1;
  Zc.block(0, d, 2 * d, d) = -W * z2;
  Zc.block(2 * d, 0, 2 * d, d) = 0.5 * z1;
  Zc.block(2 * d, d, 2 * d, d) = 0.5 * z2;
  LiftedFrame L;
  L.Zcal = frame_unchecked(Zc);
  L.G = L.Zcal.B() / (2.0 * I_unit);
  return L;
}

std::vector<cplx> wigner_lift_eval(const WavePacketBasis& b1, const WavePacketBasis& b2, const MultiIndex& a,
                                   const MultiIndex& bidx, const std::vector<Vec>& points) {
  const int d = b1.frame.dim();
  const double h = b1.hbar;
  LiftedFrame L = lift_frames(b1.frame, b2.frame);
  MultiIndex ab(a);
  ab.insert(ab.end(), bidx.begin(), bidx.end());
  WavePacketBasis lb = make_basis(L.Zcal, Vec::Zero(4 * d), h, order(ab));
  PacketEvaluator ev(lb);
  const int slot = ev.index()->find(ab);

  // exact cross Wigner of the two centered ground states at the origin
  const cplx ld1 = b1.log_det_Q ? *b1.log_det_Q : principal_log_det(b1.frame.Q());
  const cplx ld2 = b2.log_det_Q ? *b2.log_det_Q : principal_log_det(b2.frame.Q());
  const CMat Kmat = -(I_unit * h / 4.0) * (b1.frame.B() - b2.frame.B().conjugate());
  const double pi = std::numbers::pi;
  const cplx w00 = std::pow(2 * pi, -0.5 * d) * std::pow(pi * h, -0.5 * d) * std::exp(-0.5 * ld1) *
                   std::conj(std::exp(-0.5 * ld2)) * std::exp(-0.5 * log_det_right_half(Kmat));
  const cplx scale = w00 / ev.ground(Vec::Zero(2 * d));

  const Vec p1 = b1.center.head(d), q1 = b1.center.tail(d);
  const Vec p2 = b2.center.head(d), q2 = b2.center.tail(d);
  const Vec m = 0.5 * (q1 + q2), n = 0.5 * (p1 + p2);
  std::vector<cplx> out;
  out.reserve(points.size());
  for (const Vec& z : points) {
    const Vec xi = z.head(d), x = z.tail(d);
    Vec zs(2 * d);
    zs.head(d) = xi - n;
    zs.tail(d) = x - m;
    const double phase = ((p1 - p2).dot(x) + (q2 - q1).dot(xi - n) - 0.5 * (p1.dot(q1) - p2.dot(q2))) / h;
    out.push_back(scale * ev.all(zs)(slot) * std::exp(I_unit * phase));
  }
  return out;
}

}  // namespace hq
