#pragma once

#include <Eigen/Dense>

#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hq {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr cplx I_unit{0.0, 1.0};

enum class ErrorKind {
  NotIsotropic,
  NotNormalized,
  Singular,
  NotSymplectic,
  NotPositive,
  IndexOutOfRange,
  PositivityLost,
  StepFailure,
  OrderUnavailable,
  ResolutionTooLow,
  SmallDivisor,
  QuadratureFailure,
  BandOverflow,
  NoContraction,
  NotConverged,
  ScenarioInvalid,
  OracleUnavailable,
  GridTooCoarse,
  ConfigInvalid,
  ComputeFailed,
  FitUnavailable,
};

const char* kind_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& what, double value = 0.0)
      : std::runtime_error(std::string(kind_name(k)) + ": " + what), kind_(k), value_(value) {}
  ErrorKind kind() const { return kind_; }
  // residual, time of failure, or other scalar attached to the error
  double value() const { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

// Omega = [[0,-I],[I,0]] in momentum-first order z = (p, q).
Mat omega(int d);

// Public coordinates are (x, xi) = (q, p); internal are (p, q).
Vec to_internal(const Vec& x_xi);
Vec to_public(const Vec& pq);
// same permutation applied to a 2d x 2d matrix on both sides
Mat to_public_matrix(const Mat& m);

using MultiIndex = std::vector<int>;

int order(const MultiIndex& a);
double factorial(int n);
double multi_factorial(const MultiIndex& a);
MultiIndex unit_index(int d, int j);

// All multi-indices with |alpha| <= K, ordered by total degree then lexicographically.
class IndexSet {
 public:
  IndexSet(int d, int K);
  int dim() const { return d_; }
  int max_order() const { return K_; }
  int size() const { return static_cast<int>(list_.size()); }
  const MultiIndex& at(int i) const { return list_[i]; }
  // -1 when alpha has a negative entry or |alpha| > K
  int find(const MultiIndex& a) const;
  int shifted(int i, int j, int delta) const;

 private:
  int d_, K_;
  std::vector<MultiIndex> list_;
  std::map<MultiIndex, int> pos_;
  std::vector<std::vector<int>> up_, down_;
};

using IndexSetPtr = std::shared_ptr<const IndexSet>;

// c_alpha over a truncated index set. leakage collects mass dropped above K.
struct CoefficientVector {
  IndexSetPtr index;
  CVec values;
  double leakage = 0.0;

  CoefficientVector() = default;
  explicit CoefficientVector(IndexSetPtr idx) : index(std::move(idx)), values(CVec::Zero(index->size())) {}
  static CoefficientVector unit(IndexSetPtr idx, const MultiIndex& a);
  cplx operator[](const MultiIndex& a) const;
};

}  // namespace hq
