#pragma once

// Sparse multivariate polynomials in the ambient coordinates of S^d, their
// Laplacian, decomposition into spherical harmonics, and exact integration
// over the sphere through monomial moments.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "belab/constants.hpp"
#include "belab/error.hpp"

namespace belab {

inline constexpr int kMaxPolynomialDegree = 12;

class Polynomial {
 public:
  using Terms = std::map<MultiIndex, double>;

  explicit Polynomial(int ambient_dim) : ambient_dim_(ambient_dim) {
    if (ambient_dim < 1) throw validation_error("polysphere", "ambient_dim", "must be >= 1");
  }

  static Polynomial constant(int ambient_dim, double c) {
    Polynomial q(ambient_dim);
    q.add_term(MultiIndex::zero(ambient_dim), c);
    return q;
  }
  /// Single coordinate w_i (0-based).
  static Polynomial coordinate(int ambient_dim, int i) {
    Polynomial q(ambient_dim);
    q.add_term(MultiIndex::unit(ambient_dim, i), 1.0);
    return q;
  }
  static Polynomial monomial(MultiIndex alpha, double c = 1.0) {
    Polynomial q(static_cast<int>(alpha.size()));
    q.add_term(std::move(alpha), c);
    return q;
  }
  /// |w|^2 = sum_i w_i^2.
  static Polynomial norm_squared(int ambient_dim) {
    Polynomial q(ambient_dim);
    for (int i = 0; i < ambient_dim; ++i) q.add_term(MultiIndex::unit(ambient_dim, i, 2), 1.0);
    return q;
  }

  int ambient_dim() const noexcept { return ambient_dim_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Highest total degree; -1 for the zero polynomial.
  int degree() const noexcept {
    int deg = -1;
    for (const auto& [alpha, c] : terms_) deg = std::max(deg, alpha.degree());
    return deg;
  }

  double coefficient(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
  }

  /// Adds c * w^alpha, dropping the term if the coefficient cancels to zero.
  void add_term(MultiIndex alpha, double c) {
    if (static_cast<int>(alpha.size()) != ambient_dim_)
      throw validation_error("polysphere", "alpha", "multi-index length differs from ambient dimension");
    if (alpha.degree() > kMaxPolynomialDegree)
      throw validation_error("polysphere", "degree",
                             "degree " + std::to_string(alpha.degree()) + " exceeds the cap of " +
                                 std::to_string(kMaxPolynomialDegree));
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(std::move(alpha), c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  /// Homogeneous part of total degree n.
  Polynomial homogeneous_part(int n) const {
    Polynomial out(ambient_dim_);
    for (const auto& [alpha, c] : terms_)
      if (alpha.degree() == n) out.terms_.emplace(alpha, c);
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_same_space(o);
    for (const auto& [alpha, c] : o.terms_) add_term(alpha, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_same_space(o);
    for (const auto& [alpha, c] : o.terms_) add_term(alpha, -c);
    return *this;
  }
  Polynomial& operator*=(double t) {
    if (t == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [alpha, c] : terms_) c *= t;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double t) { return a *= t; }
  friend Polynomial operator*(double t, Polynomial a) { return a *= t; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_same_space(b);
    Polynomial out(a.ambient_dim_);
    for (const auto& [x, cx] : a.terms_)
      for (const auto& [y, cy] : b.terms_) out.add_term(x + y, cx * cy);
    return out;
  }

  Polynomial pow(int n) const {
    if (n < 0) throw validation_error("polysphere", "n", "negative power");
    Polynomial out = constant(ambient_dim_, 1.0);
    for (int i = 0; i < n; ++i) out = out * *this;
    return out;
  }

  /// Direct sparse evaluation; terms are visited in index order.
  double operator()(std::span<const double> w) const {
    if (static_cast<int>(w.size()) != ambient_dim_)
      throw validation_error("polysphere", "omega", "point dimension differs from ambient dimension");
    double sum = 0.0;
    for (const auto& [alpha, c] : terms_) {
      double term = c;
      for (int i = 0; i < ambient_dim_; ++i)
        for (int k = 0; k < alpha.exponents[i]; ++k) term *= w[i];
      sum += term;
    }
    return sum;
  }

  /// Largest absolute coefficient.
  double max_abs_coefficient() const noexcept {
    double m = 0.0;
    for (const auto& [alpha, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  void check_same_space(const Polynomial& o) const {
    if (o.ambient_dim_ != ambient_dim_)
      throw validation_error("polysphere", "ambient_dim", "polynomials live in different spaces");
  }

  int ambient_dim_;
  Terms terms_;
};

/// True when every coefficient of a - b is within tol.
inline bool coefficients_close(const Polynomial& a, const Polynomial& b, double tol) {
  return (a - b).max_abs_coefficient() <= tol;
}

/// w1 w2 + w2 w3 + w3 w1, a degree-2 spherical harmonic on S^d for d >= 2.
inline Polynomial v2_harmonic(int d) {
  if (d < 2) throw validation_error("polysphere", "d", "v2 needs three ambient coordinates (d >= 2)");
  const int n = d + 1;
  Polynomial q(n);
  for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 0}}) {
    MultiIndex a = MultiIndex::zero(n);
    a.exponents[i] = 1;
    a.exponents[j] = 1;
    q.add_term(std::move(a), 1.0);
  }
  return q;
}

inline Polynomial laplacian(const Polynomial& q) {
  const int n = q.ambient_dim();
  Polynomial out(n);
  for (const auto& [alpha, c] : q.terms()) {
    for (int i = 0; i < n; ++i) {
      const int a = alpha.exponents[i];
      if (a < 2) continue;
      MultiIndex beta = alpha;
      beta.exponents[i] -= 2;
      out.add_term(std::move(beta), c * a * (a - 1));
    }
  }
  return out;
}

/// d q / d w_i in the ambient space.
inline Polynomial partial_derivative(const Polynomial& q, int i) {
  const int n = q.ambient_dim();
  if (i < 0 || i >= n) throw validation_error("polysphere", "i", "coordinate index out of range");
  Polynomial out(n);
  for (const auto& [alpha, c] : q.terms()) {
    const int a = alpha.exponents[i];
    if (a == 0) continue;
    MultiIndex beta = alpha;
    beta.exponents[i] -= 1;
    out.add_term(std::move(beta), c * a);
  }
  return out;
}

/// Components h_ell of a polynomial restricted to S^d, each harmonic in the
/// ambient space, keyed by degree. Zero components are omitted.
struct HarmonicDecomposition {
  int ambient_dim = 0;
  std::map<int, Polynomial> components;

  /// Component of degree ell (zero polynomial if absent).
  Polynomial component(int ell) const {
    auto it = components.find(ell);
    return it == components.end() ? Polynomial(ambient_dim) : it->second;
  }

  Polynomial sum() const {
    Polynomial out(ambient_dim);
    for (const auto& [ell, h] : components) out += h;
    return out;
  }
};

namespace detail {

// For p homogeneous of degree m in N variables the harmonic part is
//   h = sum_j a_j |w|^{2j} Lap^j p,   a_0 = 1,
//   a_{j+1} = -a_j / (2 (j+1) (N + 2m - 2j - 4)),
// and p - h = |w|^2 r with r homogeneous of degree m-2.
inline void decompose_homogeneous(const Polynomial& p, int m, std::map<int, Polynomial>& out) {
  if (p.is_zero()) return;
  const int n = p.ambient_dim();
  if (m < 2) {
    out.try_emplace(m, n).first->second += p;
    return;
  }
  const Polynomial r2 = Polynomial::norm_squared(n);
  Polynomial harmonic = p;
  Polynomial remainder(n);  // r, so that p = h + |w|^2 r
  Polynomial lap_j = p;
  Polynomial r2_pow = Polynomial::constant(n, 1.0);  // |w|^{2(j-1)}
  double a = 1.0;
  for (int j = 0; 2 * (j + 1) <= m; ++j) {
    lap_j = laplacian(lap_j);
    if (lap_j.is_zero()) break;
    a = -a / (2.0 * (j + 1) * (n + 2.0 * m - 2.0 * j - 4.0));
    Polynomial term = a * (r2_pow * lap_j);  // a_{j+1} |w|^{2j} Lap^{j+1} p
    remainder -= term;
    harmonic += r2 * term;
    r2_pow = r2_pow * r2;
  }
  if (!harmonic.is_zero()) out.try_emplace(m, n).first->second += harmonic;
  decompose_homogeneous(remainder, m - 2, out);
}

}  // namespace detail

/// Splits q|_{S^d} into harmonic components of degree <= deg(q).
inline HarmonicDecomposition harmonic_decompose(const Polynomial& q) {
  HarmonicDecomposition dec;
  dec.ambient_dim = q.ambient_dim();
  for (int m = q.degree(); m >= 0; --m) detail::decompose_homogeneous(q.homogeneous_part(m), m, dec.components);
  for (auto it = dec.components.begin(); it != dec.components.end();) {
    if (it->second.is_zero())
      it = dec.components.erase(it);
    else
      ++it;
  }
  return dec;
}

/// Canonical representative of q modulo |w|^2 - 1: the sum of its harmonic
/// components. Two polynomials agree on S^d iff their normal forms agree.
inline Polynomial sphere_normal_form(const Polynomial& q) { return harmonic_decompose(q).sum(); }

/// Exact integral of q over S^d, sum of coefficient * monomial moment.
inline double integrate_exact(const Polynomial& q, int d) {
  if (q.ambient_dim() != d + 1)
    throw validation_error("polysphere", "d", "polynomial ambient dimension must equal d+1");
  double sum = 0.0;
  for (const auto& [alpha, c] : q.terms()) sum += c * monomial_moment(alpha, d);
  return sum;
}

/// L^2(S^d) inner product of two polynomials.
inline double l2_inner_exact(const Polynomial& a, const Polynomial& b, int d) { return integrate_exact(a * b, d); }

}  // namespace belab
