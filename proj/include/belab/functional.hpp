#pragma once

// The stability functional on the sphere side. For a sphere function F the
// H^s energy is sum_ell E_ell ||F_ell||^2 over harmonic components, the
// Lebesgue norm is computed by quadrature, and the distance to the bubble
// manifold reduces to
//   dist^2 = ||F||^2_{H^s} - (E_0/|S^d|) max_z ( int G_z^{2*-1} F )^2,
// the amplitude of the nearest bubble being eliminated by projection.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "belab/conformal.hpp"
#include "belab/constants.hpp"
#include "belab/error.hpp"
#include "belab/parallel.hpp"
#include "belab/polysphere.hpp"
#include "belab/quadrature.hpp"

namespace belab {

/// A quadrature rule together with one of twice its exactness degree; the
/// discrepancy between the two is the reported quadrature error.
struct QuadraturePair {
  SphereQuadrature base;
  SphereQuadrature refined;

  static QuadraturePair make(int d, int degree, std::size_t node_budget = kDefaultNodeBudget) {
    return {build_rule(d, degree, node_budget), build_rule(d, 2 * degree, node_budget)};
  }
  int d() const noexcept { return base.d(); }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // |base - refined|
};

// ---------------------------------------------------------------------------
// Quadratic forms

namespace detail {

inline const Polynomial& require_poly(const SphereFunction& f, const char* name) {
  if (!f.poly)
    throw validation_error("functional", name, "exact polynomial form required for the H^s quadratic form");
  return *f.poly;
}

inline void require_dim(const Polynomial& q, const Params& p, const char* name) {
  if (q.ambient_dim() != p.ambient_dim())
    throw validation_error("functional", name, "polynomial ambient dimension must equal d+1");
}

}  // namespace detail

/// sum_ell E_ell <F_ell, G_ell>_{L^2(S^d)}.
inline double hs_form(const Polynomial& f, const Polynomial& g, const Params& p) {
  detail::require_dim(f, p, "F");
  detail::require_dim(g, p, "G");
  const HarmonicDecomposition df = harmonic_decompose(f);
  const HarmonicDecomposition dg = harmonic_decompose(g);
  double sum = 0.0;
  for (const auto& [ell, h] : df.components) {
    auto it = dg.components.find(ell);
    if (it == dg.components.end()) continue;
    sum += conformal_eigenvalue(ell, p) * l2_inner_exact(h, it->second, p.d());
  }
  return sum;
}

inline double hs_form(const SphereFunction& f, const SphereFunction& g, const Params& p) {
  return hs_form(detail::require_poly(f, "F"), detail::require_poly(g, "G"), p);
}

/// ||F||^2_{H^s}: exact for polynomials; for c G_z it is c^2 E_0 |S^d| by
/// conformal invariance.
inline double hs_norm2(const SphereFunction& f, const Params& p) {
  if (f.poly) return hs_form(*f.poly, *f.poly, p);
  if (f.bubble) return f.bubble->c * f.bubble->c * conformal_eigenvalue(0, p) * sphere_area(p.d());
  throw validation_error("functional", "F", "H^s norm needs a polynomial or bubble form");
}

/// ||rho||^2_{H^s} - (2*-1) E_0 ||rho||^2_{L^2}
///   = sum_ell (E_ell - (2*-1) E_0) ||rho_ell||^2_{L^2}.
inline double gap_form(const Polynomial& rho, const Params& p) {
  detail::require_dim(rho, p, "rho");
  const double e0 = conformal_eigenvalue(0, p);
  const double shift = (p.two_star() - 1.0) * e0;
  double sum = 0.0;
  for (const auto& [ell, h] : harmonic_decompose(rho).components)
    sum += (conformal_eigenvalue(ell, p) - shift) * l2_inner_exact(h, h, p.d());
  return sum;
}

inline double gap_form(const SphereFunction& rho, const Params& p) { return gap_form(detail::require_poly(rho, "rho"), p); }

// ---------------------------------------------------------------------------
// Closed forms tied to U

/// ||U||_{2*}^{2*} = 2^{-d} |S^d|.
inline double bubble_lebesgue_mass(const Params& p) { return std::ldexp(sphere_area(p.d()), -p.d()); }

/// ||U||_{2*}.
inline double bubble_lebesgue_norm(const Params& p) { return std::pow(bubble_lebesgue_mass(p), 1.0 / p.two_star()); }

/// S_{d,s} ||U||_{2*}^{2-2*} 2^{-(d-2s)(2*-2)/2}; equals E_0.
inline double potential_coefficient(const Params& p) {
  const double ts = p.two_star();
  return sobolev_constant(p) * std::pow(bubble_lebesgue_norm(p), 2.0 - ts) *
         std::pow(2.0, -p.bubble_exponent() * (ts - 2.0));
}

/// int_{R^d} U^{2*-3} rho^3 dx = 2^{3(d-2s)/2 - d} * 6 |S^d| / ((d+1)(d+3)(d+5)).
inline double cubic_integral(const Params& p) {
  const double d = p.d();
  return std::pow(2.0, 3.0 * p.bubble_exponent() - d) * 6.0 * sphere_area(p.d()) /
         ((d + 1.0) * (d + 3.0) * (d + 5.0));
}

/// Same integral through 2^{-(d-2s)(2*-3)/2} int_{S^d} v2^3.
inline double cubic_integral_via_polynomial(const Params& p) {
  return std::pow(2.0, -p.bubble_exponent() * (p.two_star() - 3.0)) * integrate_exact(v2_harmonic(p.d()).pow(3), p.d());
}

/// eps^3 coefficient of the numerator along U + eps rho:
///   -S_{d,s} (2*-1)(2*-2)/3 ||U||_{2*}^{2-2*} int U^{2*-3} rho^3.
inline double numerator_cubic_coefficient(const Params& p) {
  const double ts = p.two_star();
  return -sobolev_constant(p) * (ts - 1.0) * (ts - 2.0) / 3.0 * std::pow(bubble_lebesgue_norm(p), 2.0 - ts) *
         cubic_integral(p);
}

/// ||rho||^2_{H^s} = E_2 ||v2||^2_{L^2(S^d)}.
inline double perturbation_energy(const Params& p) {
  const Polynomial v2 = v2_harmonic(p.d());
  return conformal_eigenvalue(2, p) * l2_inner_exact(v2, v2, p.d());
}

// ---------------------------------------------------------------------------
// Lebesgue norm

/// (int |F|^q)^{1/q} with a single rule.
inline double lq_norm(const SphereFunction& f, double q, const SphereQuadrature& rule) {
  if (!(q > 0.0)) throw validation_error("functional", "q", "exponent must be positive");
  const double mass = integrate(rule, [&](std::span<const double> w) { return std::pow(std::abs(f(w)), q); });
  return std::pow(mass, 1.0 / q);
}

inline Estimate lq_norm(const SphereFunction& f, double q, const QuadraturePair& quad) {
  const double base = lq_norm(f, q, quad.base);
  const double refined = lq_norm(f, q, quad.refined);
  return {base, std::abs(base - refined)};
}

/// ||F||^2_{H^s} - S_{d,s} ||F||^2_{2*}.
inline Estimate be_numerator(const SphereFunction& f, const Params& p, const QuadraturePair& quad) {
  const double energy = hs_norm2(f, p);
  const double sob = sobolev_constant(p);
  const double ts = p.two_star();
  const double base = lq_norm(f, ts, quad.base);
  const double refined = lq_norm(f, ts, quad.refined);
  return {energy - sob * base * base, sob * std::abs(base * base - refined * refined)};
}

// ---------------------------------------------------------------------------
// Distance to the bubble manifold

struct SolverOptions {
  int multistarts = 16;
  double tol = 1e-10;          // gradient norm target for the polish
  double start_radius = 0.8;   // quasi-random starts lie in |z| <= start_radius
  std::uint64_t seed = 0;      // offset into the Halton sequence
  double simplex_size = 0.1;
  int max_simplex_evals = 0;   // 0 -> 150 (d+1)
  int max_newton_iters = 60;
};

struct SolverStatus {
  bool converged = false;
  int iterations = 0;        // simplex evaluations + Newton iterations of the winning start
  int multistart_index = 0;  // 0 is the start z = 0
  double gradient_norm = 0.0;
};

struct DistanceResult {
  double dist2 = 0.0;
  BubbleParamsSphere minimizer;  // nearest bubble c G_z
  SolverStatus status;
  double hs_norm2 = 0.0;
  double quad_error = 0.0;    // |dist2(base) - dist2(refined)| at the minimizer
  double solver_error = 0.0;  // predicted remaining decrease (Newton decrement)
};

/// Largest admissible |z| for iterates; anything beyond is retracted.
inline constexpr double kBallLimit = 1.0 - 1e-6;

inline Point retract_to_ball(Point z) {
  const double r = std::sqrt(norm2(z));
  if (r > kBallLimit)
    for (double& v : z) v *= kBallLimit / r;
  return z;
}

/// First `count` points of a Halton sequence mapped into the ball of the given
/// radius (by rejection), starting at index 1 + seed.
inline std::vector<Point> halton_ball_points(int dim, int count, double radius, std::uint64_t seed) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (dim > static_cast<int>(std::size(kPrimes)))
    throw validation_error("functional", "d", "quasi-random starts support at most 16 ambient dimensions");
  std::vector<Point> out;
  for (std::uint64_t index = 1 + seed; static_cast<int>(out.size()) < count; ++index) {
    Point u(dim);
    for (int j = 0; j < dim; ++j) {
      double f = 1.0, r = 0.0;
      for (std::uint64_t i = index; i > 0; i /= kPrimes[j]) {
        f /= kPrimes[j];
        r += f * static_cast<double>(i % kPrimes[j]);
      }
      u[j] = 2.0 * r - 1.0;
    }
    if (norm2(u) <= 1.0) {
      for (double& v : u) v *= radius;
      out.push_back(std::move(u));
    }
  }
  return out;
}

/// Relative deviation of int G_z^{2*} from |S^d| beyond which the rule no
/// longer resolves the bubble G_z; such z are treated as infeasible.
inline constexpr double kBubbleMassTolerance = 1e-8;

/// I(z) = int G_z^{2*-1} F for polynomial F through the Funk-Hecke formula:
/// with F = sum h_ell and x = |z|^2,
///   I(z) = sum_ell q_ell(x) h_ell(z),
///   q_ell(x) = |S^d| a (m)_ell / (a)_{ell+1} (1-x)^m 2F1(m+ell, m-a; ell+a+1; x),
/// where m = (d+2s)/2 and a = (d-1)/2. The series is summed for x <= 1/4;
/// beyond, q_ell = mu_ell(r) / r^ell with the zonal integral
///   mu_ell(r) = |S^{d-1}| int_0^pi t^m C_ell(cos th) sin^{d-1} th dth
/// on panels that double in width away from the peak of width 1 - r.
class ZonalProjection {
 public:
  ZonalProjection(const Polynomial& f, const Params& p, int points_per_panel)
      : n_(p.ambient_dim()), d_(p.d()), m_(0.5 * (p.d() + 2.0 * p.s())), alpha_(0.5 * (p.d() - 1.0)),
        rule_(gauss_gegenbauer(points_per_panel, 0.0)) {
    area_ = sphere_area(p.d());
    slice_area_ = sphere_area(p.d() - 1);
    for (const auto& [ell, h] : harmonic_decompose(f).components) {
      Term t{ell, h, {}, {}};
      for (int i = 0; i < n_; ++i) t.grad.push_back(partial_derivative(h, i));
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j <= i; ++j) t.hess.push_back(partial_derivative(t.grad[i], j));
      terms_.push_back(std::move(t));
    }
  }

  int dim() const noexcept { return n_; }

  double value(std::span<const double> z) const {
    const double x = norm2(z);
    double sum = 0.0;
    for (const Term& t : terms_) sum += radial(t.ell, x, false).q * t.h(z);
    return sum;
  }

  void derivatives(std::span<const double> z, double& val, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    const double x = norm2(z);
    val = 0.0;
    grad.setZero(n_);
    hess.setZero(n_, n_);
    Eigen::Map<const Eigen::VectorXd> zv(z.data(), n_);
    Eigen::VectorXd dh(n_);
    Eigen::MatrixXd hh(n_, n_);
    for (const Term& t : terms_) {
      const Radial q = radial(t.ell, x, true);
      const double h = t.h(z);
      for (int i = 0, k = 0; i < n_; ++i) {
        dh[i] = t.grad[i](z);
        for (int j = 0; j <= i; ++j, ++k) hh(i, j) = hh(j, i) = t.hess[k](z);
      }
      val += q.q * h;
      grad += 2.0 * q.dq * h * zv + q.q * dh;
      hess += 4.0 * q.d2q * h * zv * zv.transpose() + 2.0 * q.dq * h * Eigen::MatrixXd::Identity(n_, n_) +
              2.0 * q.dq * (zv * dh.transpose() + dh * zv.transpose()) + q.q * hh;
    }
  }

 private:
  struct Term {
    int ell;
    Polynomial h;
    std::vector<Polynomial> grad;
    std::vector<Polynomial> hess;  // lower triangle, row-major
  };
  struct Radial {
    double q = 0.0, dq = 0.0, d2q = 0.0;  // derivatives in x = |z|^2
  };

  static constexpr double kSeriesLimit = 0.25;

  Radial radial(int ell, double x, bool with_derivatives) const {
    return x <= kSeriesLimit ? series(ell, x) : zonal(ell, x, with_derivatives);
  }

  Radial series(int ell, double x) const {
    // |S^d| a (m)_ell / (a)_{ell+1} = |S^d| (m)_ell / (a+1)_ell
    double pre = area_;
    for (int j = 0; j < ell; ++j) pre *= (m_ + j) / (alpha_ + 1.0 + j);
    // s = sum c_k x^k and its first two x-derivatives
    double s = 0.0, s1 = 0.0, s2 = 0.0, c = 1.0;
    double pk = 1.0, pk1 = 0.0, pk2 = 0.0;  // x^k, x^{k-1}, x^{k-2}
    for (int k = 0; k < 4000; ++k) {
      s += c * pk;
      s1 += k * c * pk1;
      s2 += k * (k - 1.0) * c * pk2;
      if (k >= 2 && c * (k * k * pk2 + pk) <= 1e-18 * s) break;
      c *= (m_ + ell + k) * (m_ - alpha_ + k) / ((ell + alpha_ + 1.0 + k) * (k + 1.0));
      pk2 = pk1;
      pk1 = pk;
      pk *= x;
    }
    const double a = 1.0 - x;
    const double am = std::pow(a, m_);
    Radial r;
    r.q = pre * am * s;
    r.dq = pre * (am * s1 - m_ * am / a * s);
    r.d2q = pre * (am * s2 - 2.0 * m_ * am / a * s1 + m_ * (m_ - 1.0) * am / (a * a) * s);
    return r;
  }

  Radial zonal(int ell, double x, bool with_derivatives) const {
    const double r = std::sqrt(x);
    const double one_minus_r = 1.0 - r;
    const double a = one_minus_r * (1.0 + r);
    const double pi = std::numbers::pi;
    double mu = 0.0, mu_r = 0.0, mu_rr = 0.0;
    double lo = 0.0, width = std::max(one_minus_r, 1e-12);
    std::vector<double> cg(ell + 1);
    while (lo < pi) {
      const double hi = std::min(pi, lo + width);
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (std::size_t i = 0; i < rule_.nodes.size(); ++i) {
        const double th = mid + half * rule_.nodes[i];
        const double sh = std::sin(0.5 * th);
        const double c = std::cos(th);
        const double b = one_minus_r * one_minus_r + 4.0 * r * sh * sh;
        const double tm = std::exp(m_ * (std::log(a) - std::log(b)));
        const double g = half * rule_.weights[i] * tm * gegenbauer_normalized(ell, c, cg) * std::pow(std::sin(th), d_ - 1);
        mu += g;
        if (with_derivatives) {
          const double br = 2.0 * (r - c);
          const double lr = -2.0 * r / a - br / b;
          const double lrr = -2.0 * (1.0 + r * r) / (a * a) - (2.0 * b - br * br) / (b * b);
          mu_r += g * m_ * lr;
          mu_rr += g * (m_ * m_ * lr * lr + m_ * lrr);
        }
      }
      lo = hi;
      width *= 2.0;
    }
    mu *= slice_area_;
    mu_r *= slice_area_;
    mu_rr *= slice_area_;
    const double rl = std::pow(r, ell);
    Radial out;
    out.q = mu / rl;
    if (with_derivatives) {
      const double q_r = mu_r / rl - ell * mu / (rl * r);
      const double q_rr = mu_rr / rl - 2.0 * ell * mu_r / (rl * r) + ell * (ell + 1.0) * mu / (rl * r * r);
      out.dq = q_r / (2.0 * r);
      out.d2q = (q_rr - q_r / r) / (4.0 * x);
    }
    return out;
  }

  // C_ell^{(a)}(c) / C_ell^{(a)}(1); scratch holds the recurrence
  double gegenbauer_normalized(int ell, double c, std::vector<double>& scratch) const {
    if (ell == 0) return 1.0;
    // normalized three-term recurrence
    scratch[0] = 1.0;
    scratch[1] = c;
    for (int k = 1; k < ell; ++k)
      scratch[k + 1] = ((2.0 * k + 2.0 * alpha_) * c * scratch[k] - k * scratch[k - 1]) / (k + 2.0 * alpha_);
    return scratch[ell];
  }

  int n_;
  int d_;
  double m_;
  double alpha_;
  GaussRule1D rule_;
  double area_ = 0.0;
  double slice_area_ = 0.0;
  std::vector<Term> terms_;
};

/// dist^2(z) = ||F||^2 - (E_0/|S^d|) I(z)^2 with I(z) = int G_z^{2*-1} F, its
/// gradient and Hessian. With t = (1-|z|^2)/(1-2z.w+|z|^2),
/// G_z^{2*-1} = t^{(d+2s)/2} and G_z^{2*} = t^d.
class DistanceObjective {
 public:
  /// Polynomial F uses the zonal reduction with the given Gauss points per
  /// panel; other F use the product rule.
  DistanceObjective(const SphereFunction& f, const Params& p, const SphereQuadrature& rule, int points_per_panel = 24)
      : rule_(&rule), n_(p.ambient_dim()), d_(p.d()), power_(0.5 * (p.d() + 2.0 * p.s())) {
    energy_ = hs_norm2(f, p);
    area_ = sphere_area(p.d());
    scale_ = conformal_eigenvalue(0, p) / area_;
    if (f.poly) {
      zonal_.emplace(*f.poly, p, points_per_panel);
      return;
    }
    weighted_.resize(rule.size());
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double v = f(rule.node(k));
      if (!std::isfinite(v)) throw numerical_error("functional", "F", "non-finite value at quadrature node");
      weighted_[k] = rule.weight(k) * v;
    }
  }

  double energy() const noexcept { return energy_; }
  int dim() const noexcept { return n_; }

  struct Sample {
    double projection = 0.0;  // I(z)
    double mass = 0.0;        // int G_z^{2*}, exactly |S^d|
  };

  Sample sample(std::span<const double> z) const {
    const double z2 = norm2(z);
    const double a = 1.0 - z2;
    const auto nodes = rule_->node_data();
    const auto weights = rule_->weights();
    CompensatedSum proj, mass;
    for (std::size_t k = 0; k < weighted_.size(); ++k) {
      const double* w = nodes.data() + k * n_;
      double zw = 0.0;
      for (int i = 0; i < n_; ++i) zw += z[i] * w[i];
      const double lt = std::log(a / (1.0 - 2.0 * zw + z2));
      proj.add(weighted_[k] * std::exp(power_ * lt));
      mass.add(weights[k] * std::exp(d_ * lt));
    }
    return {proj.value(), mass.value()};
  }

  bool resolved(const Sample& s) const noexcept { return std::abs(s.mass / area_ - 1.0) <= kBubbleMassTolerance; }

  double projection(std::span<const double> z) const { return zonal_ ? zonal_->value(z) : sample(z).projection; }

  /// dist^2 at z, +inf where the rule does not resolve G_z.
  double value(std::span<const double> z) const {
    if (zonal_) {
      const double i = zonal_->value(z);
      return energy_ - scale_ * i * i;
    }
    const Sample s = sample(z);
    if (!resolved(s)) return std::numeric_limits<double>::infinity();
    return energy_ - scale_ * s.projection * s.projection;
  }

  /// value, gradient and Hessian of dist^2 at z (value +inf if unresolved).
  void derivatives(std::span<const double> z, double& val, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
    if (zonal_) {
      double i = 0.0;
      Eigen::VectorXd gi(n_);
      Eigen::MatrixXd hi(n_, n_);
      zonal_->derivatives(z, i, gi, hi);
      val = energy_ - scale_ * i * i;
      grad = -2.0 * scale_ * i * gi;
      hess = -2.0 * scale_ * (gi * gi.transpose() + i * hi);
      return;
    }
    const double z2 = norm2(z);
    const double a = 1.0 - z2;
    const auto nodes = rule_->node_data();
    const auto weights = rule_->weights();
    double proj = 0.0;
    CompensatedSum mass;
    Eigen::VectorXd dproj = Eigen::VectorXd::Zero(n_);
    Eigen::MatrixXd hproj = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::VectorXd dlog(n_);
    for (std::size_t k = 0; k < weighted_.size(); ++k) {
      const double* w = nodes.data() + k * n_;
      double zw = 0.0;
      for (int i = 0; i < n_; ++i) zw += z[i] * w[i];
      const double b = 1.0 - 2.0 * zw + z2;
      const double lt = std::log(a / b);
      const double term = weighted_[k] * std::exp(power_ * lt);
      mass.add(weights[k] * std::exp(d_ * lt));
      // log g = m (log a - log b)
      for (int i = 0; i < n_; ++i) dlog[i] = power_ * (-2.0 * z[i] / a - 2.0 * (z[i] - w[i]) / b);
      proj += term;
      dproj += term * dlog;
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j <= i; ++j) {
          double second = 4.0 * (z[i] - w[i]) * (z[j] - w[j]) / (b * b) - 4.0 * z[i] * z[j] / (a * a);
          if (i == j) second -= 2.0 / a + 2.0 / b;
          hproj(i, j) += term * (dlog[i] * dlog[j] + power_ * second);
        }
      }
    }
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) hproj(i, j) = hproj(j, i);
    val = resolved({proj, mass.value()}) ? energy_ - scale_ * proj * proj : std::numeric_limits<double>::infinity();
    grad = -2.0 * scale_ * proj * dproj;
    hess = -2.0 * scale_ * (dproj * dproj.transpose() + proj * hproj);
  }

 private:
  const SphereQuadrature* rule_;
  int n_;
  int d_;
  double power_;
  double energy_ = 0.0;
  double area_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> weighted_;
  std::optional<ZonalProjection> zonal_;
};

namespace detail {

struct LocalResult {
  Point z;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double gradient_norm = std::numeric_limits<double>::infinity();
  double decrement = 0.0;
};

// Nelder-Mead on z with retraction into the ball.
inline LocalResult nelder_mead(const DistanceObjective& obj, Point start, const SolverOptions& opts) {
  const int n = obj.dim();
  const int max_evals = opts.max_simplex_evals > 0 ? opts.max_simplex_evals : 150 * n;
  auto eval = [&](Point& z) {
    z = retract_to_ball(std::move(z));
    return obj.value(z);
  };
  std::vector<Point> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += (start[i] > 0 ? -1.0 : 1.0) * opts.simplex_size;
  int evals = 0;
  for (int i = 0; i <= n; ++i, ++evals) values[i] = eval(simplex[i]);

  std::vector<int> order(n + 1);
  while (evals < max_evals) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return values[x] < values[y]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    double diameter = 0.0;
    for (int i = 1; i <= n; ++i) {
      double d2 = 0.0;
      for (int j = 0; j < n; ++j) d2 += std::pow(simplex[order[i]][j] - simplex[best][j], 2);
      diameter = std::max(diameter, d2);
    }
    if (!std::isfinite(values[best]) || std::sqrt(diameter) < 1e-7 || values[worst] - values[best] <= 1e-15 * (1.0 + std::abs(values[best]))) break;

    Point centroid(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j] / n;
    auto along = [&](double t) {
      Point z(n);
      for (int j = 0; j < n; ++j) z[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      return z;
    };
    Point reflected = along(-1.0);
    const double fr = eval(reflected);
    ++evals;
    if (fr < values[best]) {
      Point expanded = along(-2.0);
      const double fe = eval(expanded);
      ++evals;
      if (fe < fr) {
        simplex[worst] = std::move(expanded);
        values[worst] = fe;
      } else {
        simplex[worst] = std::move(reflected);
        values[worst] = fr;
      }
    } else if (fr < values[second]) {
      simplex[worst] = std::move(reflected);
      values[worst] = fr;
    } else {
      Point contracted = fr < values[worst] ? along(-0.5) : along(0.5);
      const double fc = eval(contracted);
      ++evals;
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = std::move(contracted);
        values[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          Point& z = simplex[order[i]];
          for (int j = 0; j < n; ++j) z[j] = simplex[best][j] + 0.5 * (z[j] - simplex[best][j]);
          values[order[i]] = eval(z);
          ++evals;
        }
      }
    }
  }
  const int best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  LocalResult out;
  out.z = simplex[best];
  out.value = values[best];
  out.iterations = evals;
  return out;
}

// Newton iteration with the analytic gradient and Hessian; falls back to a
// steepest-descent step when the Hessian is not positive definite.
inline void newton_polish(const DistanceObjective& obj, LocalResult& r, const SolverOptions& opts) {
  const int n = obj.dim();
  double val = 0.0;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  Eigen::Map<const Eigen::VectorXd> z0(r.z.data(), n);
  Eigen::VectorXd z = z0;
  obj.derivatives(std::span<const double>(z.data(), n), val, grad, hess);
  for (int it = 0; it < opts.max_newton_iters; ++it) {
    r.gradient_norm = grad.norm();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const bool pd = ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all();
    Eigen::VectorXd step = pd ? Eigen::VectorXd(-ldlt.solve(grad)) : Eigen::VectorXd(-grad / std::max(1.0, hess.norm()));
    r.decrement = pd ? 0.5 * std::max(0.0, -grad.dot(step)) : std::numeric_limits<double>::infinity();
    if (r.gradient_norm <= opts.tol) {
      r.converged = true;
      break;
    }
    // backtracking on dist^2, staying inside the ball
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Eigen::VectorXd trial = z + t * step;
      if (trial.norm() > kBallLimit) continue;
      double tv = 0.0;
      Eigen::VectorXd tg(n);
      Eigen::MatrixXd th(n, n);
      obj.derivatives(std::span<const double>(trial.data(), n), tv, tg, th);
      if (std::isfinite(tv) && (tv <= val || tg.norm() < grad.norm())) {
        z = trial;
        val = tv;
        grad = tg;
        hess = th;
        moved = true;
        break;
      }
    }
    ++r.iterations;
    if (!moved) {
      r.gradient_norm = grad.norm();
      r.converged = r.gradient_norm <= opts.tol;
      break;
    }
  }
  r.z.assign(z.data(), z.data() + n);
  r.value = val;
  r.gradient_norm = grad.norm();
  if (r.gradient_norm <= opts.tol) r.converged = true;
}

}  // namespace detail

/// Squared H^s distance from F to the bubble manifold and the nearest bubble.
inline DistanceResult dist_to_manifold(const SphereFunction& f, const Params& p, const QuadraturePair& quad,
                                       const SolverOptions& opts = {}) {
  if (quad.d() != p.d()) throw validation_error("functional", "rule", "quadrature dimension differs from d");
  if (opts.multistarts < 1) throw validation_error("functional", "multistarts", "need at least one start");
  const DistanceObjective obj(f, p, quad.base);
  const int n = p.ambient_dim();

  std::vector<Point> starts;
  starts.emplace_back(n, 0.0);
  for (auto& z : halton_ball_points(n, opts.multistarts - 1, opts.start_radius, opts.seed)) starts.push_back(std::move(z));

  std::vector<detail::LocalResult> local(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    local[i] = detail::nelder_mead(obj, starts[i], opts);
    detail::newton_polish(obj, local[i], opts);
  });

  // deterministic winner: smallest value, ties to the lowest start index
  std::size_t best = 0;
  for (std::size_t i = 1; i < local.size(); ++i)
    if (local[i].value < local[best].value) best = i;
  const detail::LocalResult& win = local[best];

  DistanceResult out;
  out.hs_norm2 = obj.energy();
  out.dist2 = win.value;
  out.status = {win.converged, win.iterations, static_cast<int>(best), win.gradient_norm};
  out.solver_error = win.decrement;
  // optimal amplitude <F, G_z>_{H^s} / ||G_z||^2_{H^s} = I(z) / |S^d|
  out.minimizer = {obj.projection(win.z) / sphere_area(p.d()), win.z};

  const DistanceObjective fine(f, p, quad.refined, 48);
  out.quad_error = std::abs(fine.value(win.z) - win.value);
  return out;
}

// ---------------------------------------------------------------------------
// Quotient

struct QuotientReport {
  double numerator = 0.0;
  double dist2 = 0.0;
  double quotient = 0.0;
  BubbleParamsSphere minimizer;
  SolverStatus solver_status;
  double quad_error_estimate = 0.0;    // quotient-level, from the two rules
  double solver_error_estimate = 0.0;  // quotient-level, from the Newton decrement
  double numerator_error = 0.0;
  double dist2_quad_error = 0.0;
  double hs_norm2 = 0.0;

  double error_estimate() const noexcept { return quad_error_estimate + solver_error_estimate; }
};

inline constexpr double kOnManifoldRatio = 1e-12;

/// Deficit divided by squared distance.
inline QuotientReport be_quotient(const SphereFunction& f, const Params& p, const QuadraturePair& quad,
                                  const SolverOptions& opts = {}) {
  const Estimate num = be_numerator(f, p, quad);
  const DistanceResult dist = dist_to_manifold(f, p, quad, opts);
  if (!(dist.dist2 > kOnManifoldRatio * dist.hs_norm2)) {
    std::ostringstream os;
    os << "input is on the bubble manifold (dist2 = " << dist.dist2 << ", ||F||^2 = " << dist.hs_norm2 << ")";
    throw numerical_error("functional", "F", os.str());
  }
  QuotientReport r;
  r.numerator = num.value;
  r.dist2 = dist.dist2;
  r.quotient = num.value / dist.dist2;
  r.minimizer = dist.minimizer;
  r.solver_status = dist.status;
  r.numerator_error = num.error;
  r.dist2_quad_error = dist.quad_error;
  r.hs_norm2 = dist.hs_norm2;
  const double q = std::abs(r.quotient);
  // rounding floor of the cancellation in numerator and dist2
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * dist.hs_norm2;
  r.quad_error_estimate = (num.error + floor + q * (dist.quad_error + floor)) / dist.dist2;
  r.solver_error_estimate = q * dist.solver_error / dist.dist2;
  return r;
}

}  // namespace belab
