#include "hq/core.hpp"

#include <cmath>
#include <functional>

namespace hq {

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotIsotropic: return "NotIsotropic";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NotSymplectic: return "NotSymplectic";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::PositivityLost: return "PositivityLost";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::OrderUnavailable: return "OrderUnavailable";
    case ErrorKind::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorKind::SmallDivisor: return "SmallDivisor";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::BandOverflow: return "BandOverflow";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorKind::OracleUnavailable: return "OracleUnavailable";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::ComputeFailed: return "ComputeFailed";
    case ErrorKind::FitUnavailable: return "FitUnavailable";
  }
  return "Unknown";
}

Mat omega(int d) {
  Mat w = Mat::Zero(2 * d, 2 * d);
  w.topRightCorner(d, d) = -Mat::Identity(d, d);
  w.bottomLeftCorner(d, d) = Mat::Identity(d, d);
  return w;
}

Vec to_internal(const Vec& x_xi) {
  const int d = static_cast<int>(x_xi.size()) / 2;
  Vec z(2 * d);
  z.head(d) = x_xi.tail(d);
  z.tail(d) = x_xi.head(d);
  return z;
}

Vec to_public(const Vec& pq) { return to_internal(pq); }

Mat to_public_matrix(const Mat& m) {
  const int d = static_cast<int>(m.rows()) / 2;
  Mat perm = Mat::Zero(2 * d, 2 * d);
  perm.topRightCorner(d, d) = Mat::Identity(d, d);
  perm.bottomLeftCorner(d, d) = Mat::Identity(d, d);
  return perm * m * perm;
}

int order(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

double multi_factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int v : a) f *= factorial(v);
  return f;
}

MultiIndex unit_index(int d, int j) {
  MultiIndex e(d, 0);
  e[j] = 1;
  return e;
}

IndexSet::IndexSet(int d, int K) : d_(d), K_(K) {
  MultiIndex cur(d, 0);
  for (int n = 0; n <= K; ++n) {
    // compositions of n into d parts, lexicographically descending in the first entry
    std::function<void(int, int)> rec = [&](int j, int rest) {
      if (j == d - 1) {
        cur[j] = rest;
        pos_[cur] = static_cast<int>(list_.size());
        list_.push_back(cur);
        return;
      }
      for (int v = rest; v >= 0; --v) {
        cur[j] = v;
        rec(j + 1, rest - v);
      }
    };
    rec(0, n);
  }
  up_.assign(list_.size(), std::vector<int>(d, -1));
  down_.assign(list_.size(), std::vector<int>(d, -1));
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < d; ++j) {
      MultiIndex a = list_[i];
      a[j] += 1;
      up_[i][j] = find(a);
      a[j] -= 2;
      down_[i][j] = find(a);
    }
  }
}

int IndexSet::find(const MultiIndex& a) const {
  auto it = pos_.find(a);
  return it == pos_.end() ? -1 : it->second;
}

int IndexSet::shifted(int i, int j, int delta) const {
  if (delta == 1) return up_[i][j];
  if (delta == -1) return down_[i][j];
  MultiIndex a = list_[i];
  a[j] += delta;
  return find(a);
}

CoefficientVector CoefficientVector::unit(IndexSetPtr idx, const MultiIndex& a) {
  CoefficientVector c(idx);
  const int i = c.index->find(a);
  if (i < 0) throw Error(ErrorKind::IndexOutOfRange, "unit vector outside index set");
  c.values(i) = 1.0;
  return c;
}

cplx CoefficientVector::operator[](const MultiIndex& a) const {
  const int i = index->find(a);
  return i < 0 ? cplx{} : values(i);
}

}  // namespace hq
