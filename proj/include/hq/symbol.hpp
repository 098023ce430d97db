#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>

#include "hq/core.hpp"

namespace hq {

// Complex polynomial in n real variables.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : n_(nvars) {}
  static Polynomial constant(int nvars, cplx c);
  static Polynomial variable(int nvars, int i);
  static Polynomial monomial(int nvars, const MultiIndex& m, cplx c = 1.0);

  int nvars() const { return n_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<MultiIndex, cplx>& terms() const { return terms_; }
  void add_term(const MultiIndex& m, cplx c);

  cplx operator()(const Vec& z) const;
  cplx eval(const CVec& z) const;
  Polynomial derivative(const MultiIndex& g) const;
  Polynomial derivative(int i) const;
  Polynomial laplacian() const;
  // p(c + F w) as a polynomial in w (F is n x m)
  Polynomial compose_affine(const Vec& c, const Mat& F) const;
  // p(F w) for a complex linear map
  Polynomial compose_linear(const CMat& F) const;
  // sum of terms with degree in [lo, hi]
  Polynomial graded(int lo, int hi) const;
  Polynomial real_part() const;
  Polynomial imag_part() const;
  // permute variables: new variable perm[i] is old variable i
  Polynomial permuted(const std::vector<int>& perm) const;
  // drops terms with |c| <= tol * max |c|
  Polynomial chop(double tol) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(cplx s) const;
  Polynomial pow(int k) const;

 private:
  int n_ = 0;
  std::map<MultiIndex, cplx> terms_;
};

// Symbol P = V + iA on R^{2d}, internal (p, q) order.
class SymbolModel {
 public:
  virtual ~SymbolModel() = default;
  virtual int dim() const = 0;
  virtual int max_order() const = 0;
  // d^g P(z); g has length 2d
  virtual cplx derivative(const Vec& z, const MultiIndex& g) const = 0;
  // exact polynomial form when available (used by grid quantization and Taylor splitting)
  virtual std::optional<Polynomial> polynomial() const { return std::nullopt; }

  cplx value(const Vec& z) const;
  double V(const Vec& z) const { return value(z).real(); }
  double A(const Vec& z) const { return value(z).imag(); }
  CVec gradient(const Vec& z) const;
  CMat hessian(const Vec& z) const;
};

using SymbolPtr = std::shared_ptr<const SymbolModel>;

class PolySymbol : public SymbolModel {
 public:
  // polynomial in internal (p, q) variables
  explicit PolySymbol(Polynomial p);
  // V, A given in public (x, xi) variable order
  static std::shared_ptr<PolySymbol> from_public(const Polynomial& V, const Polynomial& A);
  int dim() const override { return p_.nvars() / 2; }
  int max_order() const override { return 1 << 20; }
  cplx derivative(const Vec& z, const MultiIndex& g) const override;
  std::optional<Polynomial> polynomial() const override { return p_; }

 private:
  Polynomial p_;
  mutable std::map<MultiIndex, Polynomial> cache_;
  std::shared_ptr<std::mutex> mu_;
};

class FunctionSymbol : public SymbolModel {
 public:
  using Fn = std::function<cplx(const Vec&, const MultiIndex&)>;
  FunctionSymbol(int d, int max_order, Fn f) : d_(d), order_(max_order), f_(std::move(f)) {}
  int dim() const override { return d_; }
  int max_order() const override { return order_; }
  cplx derivative(const Vec& z, const MultiIndex& g) const override;

 private:
  int d_, order_;
  Fn f_;
};

// variable permutation between public (x, xi) and internal (p, q)
std::vector<int> public_to_internal_perm(int d);

// all multi-indices of length n with |g| = k
std::vector<MultiIndex> indices_of_order(int n, int k);

}  // namespace hq
