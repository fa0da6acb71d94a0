#pragma once

// Closed-form constants: the sharp Sobolev constant, the spectral-gap
// constant, the conformal eigenvalue ladder on S^d, sphere areas and
// monomial moments. All gamma quotients go through log-gamma and are
// exponentiated once.

#include <cmath>
#include <compare>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "belab/error.hpp"

namespace belab {

/// Dimension d and fractional order s of the Sobolev inequality, with
/// 0 < s < d/2 and d >= 2.
class Params {
 public:
  Params(int d, double s) : d_(d), s_(s) {
    if (d < 2) throw validation_error("constants", "d", "dimension must be >= 2, got " + std::to_string(d));
    if (!(s > 0.0) || !(s < 0.5 * d) || !std::isfinite(s)) {
      std::ostringstream os;
      os << "order must satisfy 0 < s < d/2 = " << 0.5 * d << ", got " << s;
      throw validation_error("constants", "s", os.str());
    }
  }

  int d() const noexcept { return d_; }
  double s() const noexcept { return s_; }

  /// Critical exponent 2* = 2d/(d-2s).
  double two_star() const noexcept { return 2.0 * d_ / (d_ - 2.0 * s_); }

  /// 4s/(d+2s+2).
  double gap() const noexcept { return 4.0 * s_ / (d_ + 2.0 * s_ + 2.0); }

  /// (d-2s)/2, the decay exponent of the bubble (1+|x|^2)^{-(d-2s)/2}.
  double bubble_exponent() const noexcept { return 0.5 * (d_ - 2.0 * s_); }

  /// Number of ambient coordinates of S^d in R^{d+1}.
  int ambient_dim() const noexcept { return d_ + 1; }

 private:
  int d_;
  double s_;
};

/// Exponents of a monomial in the ambient coordinates w_1..w_{d+1}.
struct MultiIndex {
  std::vector<int> exponents;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : exponents(std::move(e)) {
    for (int v : exponents)
      if (v < 0) throw validation_error("constants", "alpha", "negative exponent in multi-index");
  }
  static MultiIndex zero(int ambient_dim) { return MultiIndex(std::vector<int>(ambient_dim, 0)); }
  static MultiIndex unit(int ambient_dim, int i, int power = 1) {
    MultiIndex m = zero(ambient_dim);
    m.exponents.at(i) = power;
    return m;
  }

  std::size_t size() const noexcept { return exponents.size(); }
  int degree() const noexcept {
    int total = 0;
    for (int v : exponents) total += v;
    return total;
  }
  int operator[](std::size_t i) const { return exponents[i]; }

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;
};

inline MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size()) throw validation_error("constants", "alpha", "multi-index length mismatch");
  MultiIndex out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out.exponents[i] += b.exponents[i];
  return out;
}

/// S_{d,s} = 2^{2s} pi^s Gamma((d+2s)/2)/Gamma((d-2s)/2) (Gamma(d/2)/Gamma(d))^{2s/d}.
inline double sobolev_constant(const Params& p) {
  const double d = p.d(), s = p.s();
  const double log_value = 2.0 * s * std::numbers::ln2 + s * std::log(std::numbers::pi) +
                           std::lgamma(0.5 * (d + 2.0 * s)) - std::lgamma(0.5 * (d - 2.0 * s)) +
                           (2.0 * s / d) * (std::lgamma(0.5 * d) - std::lgamma(d));
  return std::exp(log_value);
}

/// Same constant through direct gamma quotients. Only usable while the
/// arguments stay small (d below ~150); kept as a cross-check path.
inline double sobolev_constant_direct(const Params& p) {
  const double d = p.d(), s = p.s();
  return std::pow(2.0, 2.0 * s) * std::pow(std::numbers::pi, s) * std::tgamma(0.5 * (d + 2.0 * s)) /
         std::tgamma(0.5 * (d - 2.0 * s)) * std::pow(std::tgamma(0.5 * d) / std::tgamma(d), 2.0 * s / d);
}

inline double gap_constant(const Params& p) { return p.gap(); }

/// Eigenvalue of the conformally covariant operator of order 2s on the
/// degree-ell spherical harmonics of S^d:
///   E_ell = Gamma(ell + d/2 + s) / Gamma(ell + d/2 - s).
inline double conformal_eigenvalue(int ell, const Params& p) {
  if (ell < 0) throw validation_error("constants", "ell", "harmonic degree must be >= 0");
  const double base = ell + 0.5 * p.d();
  return std::exp(std::lgamma(base + p.s()) - std::lgamma(base - p.s()));
}

/// |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2).
inline double sphere_area(int d) {
  if (d < 1) throw validation_error("constants", "d", "sphere dimension must be >= 1");
  const double h = 0.5 * (d + 1);
  return 2.0 * std::exp(h * std::log(std::numbers::pi) - std::lgamma(h));
}

/// Integral of w^alpha over S^d (alpha has d+1 entries). Zero when any
/// exponent is odd, else 2 prod_i Gamma((a_i+1)/2) / Gamma((|a|+d+1)/2).
inline double monomial_moment(const MultiIndex& alpha, int d) {
  if (static_cast<int>(alpha.size()) != d + 1)
    throw validation_error("constants", "alpha", "multi-index length must equal d+1");
  double log_num = 0.0;
  for (int a : alpha.exponents) {
    if (a % 2 != 0) return 0.0;
    log_num += std::lgamma(0.5 * (a + 1));
  }
  return 2.0 * std::exp(log_num - std::lgamma(0.5 * (alpha.degree() + d + 1)));
}

/// The (d, s) grid used by invariant checks: d in 2..8, s in
/// {0.25, 0.5, 1, 1.5, 2} restricted to s < d/2.
inline std::vector<Params> validation_grid() {
  std::vector<Params> grid;
  for (int d = 2; d <= 8; ++d)
    for (double s : {0.25, 0.5, 1.0, 1.5, 2.0})
      if (s < 0.5 * d) grid.emplace_back(d, s);
  return grid;
}

}  // namespace belab
