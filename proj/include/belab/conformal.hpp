#pragma once

// Stereographic dictionary between R^d and S^d: projection, Jacobian,
// norm-preserving pullback, the bubble family on both sides and the tangent
// space of the bubble manifold at the standard bubble U.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "belab/constants.hpp"
#include "belab/error.hpp"
#include "belab/polysphere.hpp"

namespace belab {

using Point = std::vector<double>;
using RdFunction = std::function<double(std::span<const double>)>;

inline constexpr double kSouthPoleGuard = 1e-12;

enum class Provenance { pullback, bubble, synthetic };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::pullback: return "pullback";
    case Provenance::bubble: return "bubble";
    case Provenance::synthetic: return "synthetic";
  }
  return "unknown";
}

/// Bubble c (a + |x-b|^2)^{-(d-2s)/2} on R^d.
struct BubbleParamsRd {
  double c = 1.0;
  double a = 1.0;
  Point b;
};

/// Sphere-side chart of the bubble manifold:
///   G(w) = c ((1-|z|^2) / (1 - 2 z.w + |z|^2))^{(d-2s)/2},  |z| < 1.
struct BubbleParamsSphere {
  double c = 1.0;
  Point zeta;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(std::span<const double> a) { return dot(a, a); }

/// A function on S^d. `poly` is present when the function is a polynomial
/// on the sphere; `bubble` when it is exactly c G_zeta.
struct SphereFunction {
  RdFunction call;
  std::optional<Polynomial> poly;
  Provenance meta = Provenance::synthetic;
  std::optional<BubbleParamsSphere> bubble;

  double operator()(std::span<const double> w) const { return call(w); }

  static SphereFunction from_polynomial(Polynomial q, Provenance meta = Provenance::synthetic) {
    SphereFunction f;
    f.poly = std::move(q);
    f.call = [q = *f.poly](std::span<const double> w) { return q(w); };
    f.meta = meta;
    return f;
  }

  /// t * f, keeping the exact forms.
  SphereFunction scaled(double t) const {
    SphereFunction out;
    out.call = [inner = call, t](std::span<const double> w) { return t * inner(w); };
    if (poly) out.poly = *poly * t;
    if (bubble) out.bubble = BubbleParamsSphere{bubble->c * t, bubble->zeta};
    out.meta = meta;
    return out;
  }
};

/// Inverse stereographic projection R^d -> S^d.
inline Point stereo(std::span<const double> x) {
  const double r2 = norm2(x);
  const double denom = 1.0 + r2;
  Point w(x.size() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = 2.0 * x[i] / denom;
  w[x.size()] = (1.0 - r2) / denom;
  return w;
}

/// S^d minus the south pole -> R^d, x_i = w_i / (1 + w_{d+1}).
inline Point stereo_inverse(std::span<const double> w, double guard = kSouthPoleGuard) {
  if (w.size() < 2) throw validation_error("conformal", "omega", "need at least two coordinates");
  const double last = w[w.size() - 1];
  if (!(last > -1.0 + guard))
    throw numerical_error("conformal", "omega", "point at the south pole has no preimage in R^d");
  Point x(w.size() - 1);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = w[i] / (1.0 + last);
  return x;
}

/// |det D stereo(x)| = (2 / (1+|x|^2))^d.
inline double jacobian(std::span<const double> x) {
  return std::pow(2.0 / (1.0 + norm2(x)), static_cast<double>(x.size()));
}

/// U(x) = (1+|x|^2)^{-(d-2s)/2}.
inline double talenti_bubble(std::span<const double> x, const Params& p) {
  return std::pow(1.0 + norm2(x), -p.bubble_exponent());
}

inline double bubble_rd(std::span<const double> x, const BubbleParamsRd& bp, const Params& p) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - bp.b[i]) * (x[i] - bp.b[i]);
  return bp.c * std::pow(bp.a + r2, -p.bubble_exponent());
}

/// Dilation generator d/dlambda|_1 lambda^{(d-2s)/2} U(lambda x)
///   = k (1-|x|^2) (1+|x|^2)^{-k-1},  k = (d-2s)/2.
inline double tangent_dilation(std::span<const double> x, const Params& p) {
  const double k = p.bubble_exponent();
  const double r2 = norm2(x);
  return k * (1.0 - r2) * std::pow(1.0 + r2, -k - 1.0);
}

/// Translation generator d/dx_i|_0 U(y - x) = 2k y_i (1+|y|^2)^{-k-1}.
inline double tangent_translation(std::span<const double> y, int i, const Params& p) {
  const double k = p.bubble_exponent();
  return 2.0 * k * y[i] * std::pow(1.0 + norm2(y), -k - 1.0);
}

/// rho(x) = J(x)^{1/2*} v(stereo(x)) for a sphere-side function v.
inline RdFunction pushforward(RdFunction v, const Params& p) {
  const double k = p.bubble_exponent();
  return [v = std::move(v), k](std::span<const double> x) {
    const Point w = stereo(x);
    return std::pow(2.0 / (1.0 + norm2(x)), k) * v(w);
  };
}

/// F(w) = J(x)^{-1/2*} f(x) with x = stereo_inverse(w). Preserves the
/// L^{2*} norm. An exact sphere-side polynomial can be attached when known.
inline SphereFunction pullback(RdFunction f, const Params& p, std::optional<Polynomial> exact = std::nullopt) {
  const double k = p.bubble_exponent();
  SphereFunction out;
  out.call = [f = std::move(f), k](std::span<const double> w) {
    const Point x = stereo_inverse(w);
    return std::pow(0.5 * (1.0 + norm2(x)), k) * f(x);
  };
  out.poly = std::move(exact);
  out.meta = Provenance::pullback;
  return out;
}

/// Constant value of the pulled-back standard bubble, 2^{-(d-2s)/2}.
inline double bubble_sphere_level(const Params& p) { return std::pow(2.0, -p.bubble_exponent()); }

inline void check_zeta(const BubbleParamsSphere& bp, const Params& p) {
  if (static_cast<int>(bp.zeta.size()) != p.ambient_dim())
    throw validation_error("conformal", "zeta", "must have d+1 coordinates");
  if (!(norm2(bp.zeta) < 1.0)) throw validation_error("conformal", "zeta", "must lie in the open unit ball");
  if (bp.c == 0.0) throw validation_error("conformal", "c", "bubble amplitude must be nonzero");
}

/// G(w) = c ((1-|z|^2)/(1 - 2 z.w + |z|^2))^{(d-2s)/2}.
inline double bubble_sphere_value(std::span<const double> w, const BubbleParamsSphere& bp, const Params& p) {
  const double z2 = norm2(bp.zeta);
  return bp.c * std::pow((1.0 - z2) / (1.0 - 2.0 * dot(bp.zeta, w) + z2), p.bubble_exponent());
}

inline SphereFunction bubble_sphere(const BubbleParamsSphere& bp, const Params& p) {
  check_zeta(bp, p);
  SphereFunction out;
  out.call = [bp, p](std::span<const double> w) { return bubble_sphere_value(w, bp, p); };
  if (norm2(bp.zeta) == 0.0) out.poly = Polynomial::constant(p.ambient_dim(), bp.c);
  out.meta = Provenance::bubble;
  out.bubble = bp;
  return out;
}

/// (c, a, b) such that J^{1/2*} G_zeta(stereo(x)) = c (a + |x-b|^2)^{-(d-2s)/2}.
/// With alpha = |z'|^2 + (1+z_{d+1})^2: b = 2z'/alpha, a = (1-|z|^2)^2/alpha^2,
/// c = c_G (2(1-|z|^2)/alpha)^k.
inline BubbleParamsRd bubble_to_rd(const BubbleParamsSphere& bp, const Params& p) {
  check_zeta(bp, p);
  const int d = p.d();
  const double z2 = norm2(bp.zeta);
  const double last = bp.zeta[d];
  double head2 = 0.0;
  for (int i = 0; i < d; ++i) head2 += bp.zeta[i] * bp.zeta[i];
  const double alpha = head2 + (1.0 + last) * (1.0 + last);
  BubbleParamsRd out;
  out.b.resize(d);
  for (int i = 0; i < d; ++i) out.b[i] = 2.0 * bp.zeta[i] / alpha;
  out.a = (1.0 - z2) * (1.0 - z2) / (alpha * alpha);
  out.c = bp.c * std::pow(2.0 * (1.0 - z2) / alpha, p.bubble_exponent());
  return out;
}

/// Pullbacks of U, V_0, V_1..V_d. Sphere side they are 2^{-k}, k 2^{-k} w_{d+1}
/// and k 2^{-k} w_i; the evaluators go through the R^d closed forms.
inline std::vector<SphereFunction> tangent_basis(const Params& p) {
  const int n = p.ambient_dim();
  const double k = p.bubble_exponent();
  const double level = bubble_sphere_level(p);
  std::vector<SphereFunction> basis;
  basis.push_back(pullback([p](std::span<const double> x) { return talenti_bubble(x, p); }, p,
                           Polynomial::constant(n, level)));
  basis.push_back(pullback([p](std::span<const double> x) { return tangent_dilation(x, p); }, p,
                           Polynomial::coordinate(n, n - 1) * (k * level)));
  for (int i = 0; i < p.d(); ++i)
    basis.push_back(pullback([p, i](std::span<const double> x) { return tangent_translation(x, i, p); }, p,
                             Polynomial::coordinate(n, i) * (k * level)));
  return basis;
}

/// Perturbation rho(x) = J(x)^{1/2*} v2(stereo(x)) = 2^{(d-2s)/2} U(x) v2(stereo(x)).
inline RdFunction perturbation_rd(const Params& p) {
  Polynomial v2 = v2_harmonic(p.d());
  return pushforward([v2](std::span<const double> w) { return v2(w); }, p);
}

/// Sphere side of f_eps = U + eps rho: the polynomial 2^{-(d-2s)/2} + eps v2.
inline SphereFunction test_family(double eps, const Params& p) {
  Polynomial q = Polynomial::constant(p.ambient_dim(), bubble_sphere_level(p)) + v2_harmonic(p.d()) * eps;
  return SphereFunction::from_polynomial(std::move(q), Provenance::pullback);
}

}  // namespace belab
