#include "hq/symbol.hpp"

#include <cmath>
#include <functional>

namespace hq {

Polynomial Polynomial::constant(int nvars, cplx c) {
  Polynomial p(nvars);
  p.add_term(MultiIndex(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  Polynomial p(nvars);
  p.add_term(unit_index(nvars, i), 1.0);
  return p;
}

Polynomial Polynomial::monomial(int nvars, const MultiIndex& m, cplx c) {
  Polynomial p(nvars);
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, order(m));
  return d;
}

void Polynomial::add_term(const MultiIndex& m, cplx c) {
  if (c == cplx(0.0)) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second += c;
  if (it->second == cplx(0.0)) terms_.erase(it);
}

cplx Polynomial::operator()(const Vec& z) const { return eval(z.cast<cplx>()); }

cplx Polynomial::eval(const CVec& z) const {
  cplx s = 0.0;
  for (const auto& [m, c] : terms_) {
    cplx t = c;
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < m[i]; ++k) t *= z(i);
    s += t;
  }
  return s;
}

Polynomial Polynomial::derivative(int i) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) {
    if (m[i] == 0) continue;
    MultiIndex mm = m;
    mm[i] -= 1;
    r.add_term(mm, c * double(m[i]));
  }
  return r;
}

Polynomial Polynomial::derivative(const MultiIndex& g) const {
  Polynomial r = *this;
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < g[i]; ++k) r = r.derivative(i);
  return r;
}

Polynomial Polynomial::laplacian() const {
  Polynomial r(n_);
  for (int i = 0; i < n_; ++i) r = r + derivative(i).derivative(i);
  return r;
}

Polynomial Polynomial::compose_linear(const CMat& F) const {
  const int m = static_cast<int>(F.cols());
  std::vector<Polynomial> lin;
  for (int i = 0; i < n_; ++i) {
    Polynomial l(m);
    for (int j = 0; j < m; ++j) l.add_term(unit_index(m, j), F(i, j));
    lin.push_back(l);
  }
  Polynomial r(m);
  for (const auto& [mono, c] : terms_) {
    Polynomial t = constant(m, c);
    for (int i = 0; i < n_; ++i)
      if (mono[i] > 0) t = t * lin[i].pow(mono[i]);
    r = r + t;
  }
  return r;
}

Polynomial Polynomial::compose_affine(const Vec& c, const Mat& F) const {
  const int m = static_cast<int>(F.cols());
  std::vector<Polynomial> lin;
  for (int i = 0; i < n_; ++i) {
    Polynomial l = constant(m, c(i));
    for (int j = 0; j < m; ++j) l.add_term(unit_index(m, j), F(i, j));
    lin.push_back(l);
  }
  Polynomial r(m);
  for (const auto& [mono, coef] : terms_) {
    Polynomial t = constant(m, coef);
    for (int i = 0; i < n_; ++i)
      if (mono[i] > 0) t = t * lin[i].pow(mono[i]);
    r = r + t;
  }
  return r;
}

Polynomial Polynomial::graded(int lo, int hi) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_)
    if (order(m) >= lo && order(m) <= hi) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::real_part() const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) r.add_term(m, c.real());
  return r;
}

Polynomial Polynomial::imag_part() const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) r.add_term(m, c.imag());
  return r;
}

Polynomial Polynomial::permuted(const std::vector<int>& perm) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) {
    MultiIndex mm(n_, 0);
    for (int i = 0; i < n_; ++i) mm[perm[i]] = m[i];
    r.add_term(mm, c);
  }
  return r;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  if (r.n_ == 0) r.n_ = o.n_;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * cplx(-1.0); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r(n_);
  for (const auto& [m1, c1] : terms_)
    for (const auto& [m2, c2] : o.terms_) {
      MultiIndex m(n_);
      for (int i = 0; i < n_; ++i) m[i] = m1[i] + m2[i];
      r.add_term(m, c1 * c2);
    }
  return r;
}

Polynomial Polynomial::operator*(cplx s) const {
  Polynomial r(n_);
  for (const auto& [m, c] : terms_) r.add_term(m, c * s);
  return r;
}

Polynomial Polynomial::chop(double tol) const {
  double m = 0.0;
  for (const auto& [a, c] : terms_) m = std::max(m, std::abs(c));
  Polynomial out(n_);
  for (const auto& [a, c] : terms_)
    if (std::abs(c) > tol * m) out.terms_[a] = c;
  return out;
}

Polynomial Polynomial::pow(int k) const {
  Polynomial r = constant(n_, 1.0);
  for (int i = 0; i < k; ++i) r = r * *this;
  return r;
}

cplx SymbolModel::value(const Vec& z) const { return derivative(z, MultiIndex(2 * dim(), 0)); }

CVec SymbolModel::gradient(const Vec& z) const {
  const int n = 2 * dim();
  CVec g(n);
  for (int i = 0; i < n; ++i) g(i) = derivative(z, unit_index(n, i));
  return g;
}

CMat SymbolModel::hessian(const Vec& z) const {
  const int n = 2 * dim();
  CMat H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      MultiIndex g(n, 0);
      g[i] += 1;
      g[j] += 1;
      H(i, j) = H(j, i) = derivative(z, g);
    }
  return H;
}

PolySymbol::PolySymbol(Polynomial p) : p_(std::move(p)), mu_(std::make_shared<std::mutex>()) {}

std::shared_ptr<PolySymbol> PolySymbol::from_public(const Polynomial& V, const Polynomial& A) {
  const int n = V.nvars();
  Polynomial P = V + A * I_unit;
  return std::make_shared<PolySymbol>(P.permuted(public_to_internal_perm(n / 2)));
}

cplx PolySymbol::derivative(const Vec& z, const MultiIndex& g) const {
  const Polynomial* dp;
  {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = cache_.find(g);
    if (it == cache_.end()) it = cache_.emplace(g, p_.derivative(g)).first;
    dp = &it->second;
  }
  return (*dp)(z);
}

cplx FunctionSymbol::derivative(const Vec& z, const MultiIndex& g) const {
  if (order(g) > order_) throw Error(ErrorKind::OrderUnavailable, "derivative order exceeds symbol order");
  return f_(z, g);
}

std::vector<int> public_to_internal_perm(int d) {
  // public variable i (x_1..x_d, xi_1..xi_d) goes to internal slot (p first)
  std::vector<int> perm(2 * d);
  for (int i = 0; i < d; ++i) {
    perm[i] = d + i;
    perm[d + i] = i;
  }
  return perm;
}

std::vector<MultiIndex> indices_of_order(int n, int k) {
  std::vector<MultiIndex> out;
  MultiIndex cur(n, 0);
  std::function<void(int, int)> rec = [&](int j, int rest) {
    if (j == n - 1) {
      cur[j] = rest;
      out.push_back(cur);
      return;
    }
    for (int v = rest; v >= 0; --v) {
      cur[j] = v;
      rec(j + 1, rest - v);
    }
  };
  if (n > 0) rec(0, k);
  return out;
}

}  // namespace hq
