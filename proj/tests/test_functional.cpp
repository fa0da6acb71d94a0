#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>

#include "belab/conformal.hpp"
#include "belab/functional.hpp"
#include "oracles.hpp"

using namespace belab;
constexpr double pi = std::numbers::pi;

namespace {

const QuadraturePair& quad_for(int d) {
  static std::map<int, QuadraturePair> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, QuadraturePair::make(d, default_quadrature_degree(d))).first;
  return it->second;
}

Polynomial random_polynomial(int n, int max_degree, int terms, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Polynomial q(n);
  for (int t = 0; t < terms; ++t) {
    MultiIndex a = MultiIndex::zero(n);
    const int deg = static_cast<int>(rng() % (max_degree + 1));
    for (int k = 0; k < deg; ++k) ++a.exponents[rng() % n];
    q.add_term(a, coef(rng));
  }
  return q;
}

/// min over a zeta lattice of ||F||^2 - (E_0/|S|) (int t^{(d+2s)/2} F)^2, with
/// t = (1-|z|^2)/(1-2z.w+|z|^2); lattice points the rule cannot resolve
/// (int t^d off |S| by more than 1e-6) are skipped.
double brute_force_dist2(const SphereFunction& f, const Params& p, const SphereQuadrature& rule, int per_axis,
                         double radius) {
  const int n = p.ambient_dim();
  const int axes = std::min(n, 4);
  const double energy = hs_form(*f.poly, *f.poly, p);
  const double area = sphere_area(p.d());
  const double e0 = conformal_eigenvalue(0, p);
  std::vector<double> fv(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) fv[k] = f(rule.node(k));
  double best = energy;
  std::vector<int> idx(axes, 0);
  std::vector<double> z(n, 0.0);
  for (;;) {
    double z2 = 0.0;
    for (int i = 0; i < axes; ++i) {
      z[i] = -radius + 2.0 * radius * idx[i] / (per_axis - 1);
      z2 += z[i] * z[i];
    }
    if (z2 <= radius * radius + 1e-12) {
      double proj = 0.0, mass = 0.0;
      for (std::size_t k = 0; k < rule.size(); ++k) {
        const auto w = rule.node(k);
        double zw = 0.0;
        for (int i = 0; i < axes; ++i) zw += z[i] * w[i];
        const double t = (1.0 - z2) / (1.0 - 2.0 * zw + z2);
        proj += rule.weight(k) * std::pow(t, 0.5 * (p.d() + 2.0 * p.s())) * fv[k];
        mass += rule.weight(k) * std::pow(t, p.d());
      }
      if (std::abs(mass / area - 1.0) <= 1e-9) best = std::min(best, energy - e0 / area * proj * proj);
    }
    int i = 0;
    while (i < axes && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == axes) break;
  }
  return best;
}

struct ThreadEnv {
  explicit ThreadEnv(const char* value) { setenv("BE_LAB_THREADS", value, 1); }
  ~ThreadEnv() { unsetenv("BE_LAB_THREADS"); }
};

}  // namespace

TEST(HsForm, Examples) {
  const Params p(3, 1.0);
  const Polynomial u = *tangent_basis(p)[0].poly;
  const Polynomial v2 = v2_harmonic(3);
  const double uu = hs_form(u, u, p);
  EXPECT_NEAR(uu, 3.0 * pi * pi / 4.0, 1e-13);
  EXPECT_NEAR(uu, sobolev_constant(p) * std::pow(pi * pi / 4.0, 1.0 / 3.0), 1e-12 * uu);
  EXPECT_NEAR(hs_form(v2, v2, p), 35.0 * pi * pi / 16.0, 1e-13);
  EXPECT_EQ(hs_form(u, v2, p), 0.0);
}

TEST(HsForm, SymmetricPositiveDefinite) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 20; ++t) {
    const Params p(2 + static_cast<int>(rng() % 3), 0.5);
    const Polynomial a = random_polynomial(p.ambient_dim(), 5, 8, rng);
    const Polynomial b = random_polynomial(p.ambient_dim(), 5, 8, rng);
    EXPECT_NEAR(hs_form(a, b, p), hs_form(b, a, p), 1e-12 * (1.0 + std::abs(hs_form(a, b, p))));
    if (!sphere_normal_form(a).is_zero()) {
      EXPECT_GT(hs_form(a, a, p), 0.0);
    }
  }
}

TEST(HsForm, RejectsNonPolynomial) {
  const Params p(3, 1.0);
  const SphereFunction u = pullback([p](std::span<const double> x) { return talenti_bubble(x, p); }, p);
  try {
    hs_form(u, u, p);
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_EQ(e.module(), "functional");
  }
  EXPECT_THROW(hs_form(v2_harmonic(4), v2_harmonic(4), p), LabError);
}

TEST(HsNorm, BubbleClosedForm) {
  const Params p(4, 1.5);
  const auto G = bubble_sphere({2.0, {0.1, -0.2, 0.0, 0.3, 0.05}}, p);
  EXPECT_NEAR(hs_norm2(G, p), 4.0 * conformal_eigenvalue(0, p) * sphere_area(4), 1e-12);
  const auto G0 = bubble_sphere({2.0, {0.0, 0.0, 0.0, 0.0, 0.0}}, p);
  EXPECT_NEAR(hs_norm2(G0, p), hs_form(*G0.poly, *G0.poly, p), 1e-12);
}

TEST(LqNorm, Examples) {
  const Params p(3, 1.0);
  const auto& quad = quad_for(3);
  const auto one = SphereFunction::from_polynomial(Polynomial::constant(4, 1.0));
  EXPECT_NEAR(lq_norm(one, 6.0, quad.base), std::pow(2.0 * pi * pi, 1.0 / 6.0), 1e-14);

  const auto rho = perturbation_rd(p);
  const RdFunction u = [p](std::span<const double> x) { return talenti_bubble(x, p); };
  const RdFunction u_eps0 = [p, rho](std::span<const double> x) { return talenti_bubble(x, p) + 0.0 * rho(x); };
  const Estimate a = lq_norm(pullback(u, p), 6.0, quad);
  EXPECT_NEAR(a.value, std::pow(pi * pi / 4.0, 1.0 / 6.0), 1e-13);
  EXPECT_LE(a.error, 1e-13);
  EXPECT_EQ(lq_norm(pullback(u_eps0, p), 6.0, quad).value, a.value);
  EXPECT_THROW(lq_norm(one, 0.0, quad.base), LabError);
}

TEST(GapForm, Examples) {
  for (const Params& p : validation_grid()) {
    const int n = p.ambient_dim();
    const Polynomial v2 = v2_harmonic(p.d());
    const double v2sq = integrate_exact(v2 * v2, p.d());
    const double want = p.gap() * conformal_eigenvalue(2, p) * v2sq;
    EXPECT_NEAR(gap_form(v2, p), want, 1e-12 * want);
    EXPECT_NEAR(gap_form(v2, p) / hs_form(v2, v2, p), gap_constant(p), 1e-12);
    EXPECT_LE(std::abs(gap_form(Polynomial::coordinate(n, 0), p)), 1e-12 * conformal_eigenvalue(1, p));
    const double c = 0.7;
    const double neg = -(p.two_star() - 2.0) * conformal_eigenvalue(0, p) * c * c * sphere_area(p.d());
    EXPECT_NEAR(gap_form(Polynomial::constant(n, c), p), neg, 1e-12 * std::abs(neg));
    EXPECT_LT(gap_form(Polynomial::constant(n, c), p), 0.0);
  }
}

TEST(GapForm, TangentAnnihilation) {
  std::mt19937_64 rng(42);
  for (const Params& p : validation_grid()) {
    for (const auto& t : tangent_basis(p)) {
      if (t.poly->degree() != 1) continue;
      EXPECT_LE(std::abs(gap_form(t, p)), 1e-12 * hs_form(*t.poly, *t.poly, p));
    }
    Polynomial lin(p.ambient_dim());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < p.ambient_dim(); ++i) lin += Polynomial::coordinate(p.ambient_dim(), i) * u(rng);
    EXPECT_LE(std::abs(gap_form(lin, p)), 1e-12 * hs_form(lin, lin, p));
  }
}

TEST(GapForm, CoerciveOnHigherHarmonics) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 30; ++t) {
    const Params p(2 + static_cast<int>(rng() % 4), 0.25 + 0.25 * static_cast<int>(rng() % 4));
    auto dec = harmonic_decompose(random_polynomial(p.ambient_dim(), 6, 10, rng));
    dec.components.erase(0);
    dec.components.erase(1);
    const Polynomial rho = dec.sum();
    if (rho.is_zero()) continue;
    EXPECT_GE(gap_form(rho, p), p.gap() * hs_form(rho, rho, p) - 1e-10);
  }
}

TEST(CubicIntegral, Examples) {
  EXPECT_NEAR(cubic_integral(Params(3, 1.0)), std::pow(2.0, -1.5) * pi * pi / 16.0, 1e-15);
  EXPECT_NEAR(cubic_integral(Params(3, 1.0)), 0.21809, 1e-5);
  EXPECT_NEAR(cubic_integral(Params(2, 0.5)), std::pow(2.0, -0.5) * 6.0 * 4.0 * pi / 105.0, 1e-15);
  for (const Params& p : validation_grid()) {
    EXPECT_GT(cubic_integral(p), 0.0);
    EXPECT_NEAR(cubic_integral_via_polynomial(p), cubic_integral(p), 1e-12 * cubic_integral(p));
  }
}

TEST(CubicIntegral, MatchesPlaneQuadrature) {
  // int_{R^2} U^{2*-3} rho^3 dx for d = 2, s = 1/2 (2* = 4)
  const Params p(2, 0.5);
  const auto rho = perturbation_rd(p);
  const double plane = oracle::integrate_plane([&](const std::vector<double>& x) {
    const double u = std::pow(1.0 + x[0] * x[0] + x[1] * x[1], -p.bubble_exponent());
    const double r = rho(x);
    return u * r * r * r;
  });
  EXPECT_NEAR(plane, cubic_integral(p), 1e-9 * cubic_integral(p));
}

TEST(PotentialIdentity, EqualsE0OnGrid) {
  for (const Params& p : validation_grid())
    EXPECT_NEAR(potential_coefficient(p), conformal_eigenvalue(0, p), 1e-12 * conformal_eigenvalue(0, p));
  EXPECT_NEAR(potential_coefficient(Params(3, 1.0)), 0.75, 1e-14);
}

TEST(BeNumerator, VanishesOnStandardBubble) {
  for (const Params& p : validation_grid()) {
    if (p.d() > 5) continue;
    const auto u = tangent_basis(p)[0];
    const auto F = SphereFunction::from_polynomial(*u.poly);
    const Estimate num = be_numerator(F, p, quad_for(p.d()));
    EXPECT_LE(std::abs(num.value), 1e-10 * hs_norm2(F, p)) << p.d() << "," << p.s();
  }
}

TEST(BeNumerator, VanishesOnRandomBubbles) {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> amp(0.3, 3.0);
  for (const Params& p : {Params(2, 0.5), Params(3, 1.0), Params(3, 0.25), Params(4, 1.0)}) {
    for (int t = 0; t < 10; ++t) {
      const double c = (t % 2 ? -1.0 : 1.0) * amp(rng);
      std::uniform_real_distribution<double> rad(0.0, 0.3);
      const auto G = bubble_sphere({c, oracle::random_ball_point(p.ambient_dim(), rad(rng), rng)}, p);
      const Estimate num = be_numerator(G, p, quad_for(p.d()));
      // the default rule resolves off-center bubbles to its own error estimate
      EXPECT_LE(std::abs(num.value), 1e-9 * hs_norm2(G, p) + 10.0 * num.error) << p.d() << "," << p.s();
      if (p.d() <= 3) EXPECT_LE(std::abs(num.value), 1e-9 * hs_norm2(G, p)) << p.d() << "," << p.s();
    }
  }
}

TEST(BeNumerator, NonNegativeNearBubble) {
  std::mt19937_64 rng(45);
  for (int t = 0; t < 10; ++t) {
    const Params p(3, 1.0);
    const Polynomial q = *tangent_basis(p)[0].poly + random_polynomial(4, 4, 6, rng) * 0.05;
    const auto F = SphereFunction::from_polynomial(q);
    EXPECT_GE(be_numerator(F, p, quad_for(3)).value, -1e-9 * hs_norm2(F, p));
  }
}

TEST(BeNumerator, SmallEpsilonWindow) {
  const Params p(3, 1.0);
  const double eps = 1e-3;
  const double ratio = be_numerator(test_family(eps, p), p, quad_for(3)).value / (eps * eps * 35.0 * pi * pi / 16.0);
  EXPECT_GT(ratio, 4.0 / 7.0 - 1e-3);
  EXPECT_LT(ratio, 4.0 / 7.0);
}

TEST(BeNumerator, CubicCoefficient) {
  for (const Params& p : {Params(3, 1.0), Params(2, 0.5)}) {
    const double energy = perturbation_energy(p);
    const double want = numerator_cubic_coefficient(p);
    std::vector<double> coef;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
      const double num = be_numerator(test_family(eps, p), p, quad_for(p.d())).value;
      coef.push_back((num - p.gap() * eps * eps * energy) / (eps * eps * eps));
    }
    const auto [lo, hi] = std::minmax_element(coef.begin(), coef.end());
    EXPECT_LE((*hi - *lo) / std::abs(*lo), 0.02);
    EXPECT_LE(std::abs(coef.back() - want), 0.01 * std::abs(want)) << coef.back() << " vs " << want;
  }
}

TEST(Distance, ZeroOnTheManifold) {
  std::mt19937_64 rng(46);
  for (const Params& p : {Params(3, 1.0), Params(2, 0.5)}) {
    for (int t = 0; t < 3; ++t) {
      const BubbleParamsSphere bp{0.8 + 0.4 * t, oracle::random_ball_point(p.ambient_dim(), 0.25, rng)};
      const auto G = bubble_sphere(bp, p);
      const DistanceResult r = dist_to_manifold(G, p, quad_for(p.d()));
      EXPECT_LE(std::abs(r.dist2), 1e-9 * hs_norm2(G, p));
      EXPECT_NEAR(r.minimizer.c, bp.c, 1e-6 * bp.c);
      for (int i = 0; i < p.ambient_dim(); ++i) EXPECT_NEAR(r.minimizer.zeta[i], bp.zeta[i], 1e-5);
      EXPECT_THROW(be_quotient(G, p, quad_for(p.d())), LabError);
    }
  }
}

TEST(Distance, SmallPerturbationAttainedAtU) {
  const Params p(3, 1.0);
  const double eps = 1e-3;
  const DistanceResult r = dist_to_manifold(test_family(eps, p), p, quad_for(3));
  const double want = eps * eps * 35.0 * pi * pi / 16.0;
  EXPECT_NEAR(r.dist2, want, 1e-6 * want);
  EXPECT_LE(std::sqrt(norm2(r.minimizer.zeta)), 1e-5);
  EXPECT_TRUE(r.status.converged);
  EXPECT_LE(r.status.gradient_norm, 1e-10);
  EXPECT_NEAR(r.minimizer.c, bubble_sphere_level(p), 1e-12);
}

TEST(Distance, RatioTendsToOne) {
  const Params p(3, 1.0);
  for (double eps : {1e-2, 1e-3}) {
    const double ratio = dist_to_manifold(test_family(eps, p), p, quad_for(3)).dist2 / (eps * eps * perturbation_energy(p));
    EXPECT_LE(std::abs(ratio - 1.0), 1e-6) << eps;
  }
}

TEST(Distance, BruteForceScanNeverWins) {
  for (const Params& p : {Params(2, 0.5), Params(3, 1.0)}) {
    const auto v2 = SphereFunction::from_polynomial(v2_harmonic(p.d()));
    const DistanceResult r = dist_to_manifold(v2, p, quad_for(p.d()));
    EXPECT_LE(r.dist2, hs_form(*v2.poly, *v2.poly, p));
    EXPECT_GE(r.dist2, 0.0);
    const double scan = brute_force_dist2(v2, p, quad_for(p.d()).base, 21, 0.95);
    EXPECT_LE(r.dist2, scan + 1e-6) << "scan " << scan;
    EXPECT_LT(std::sqrt(norm2(r.minimizer.zeta)), 1.0);
  }
}

TEST(Zonal, MatchesProductRuleWhereResolved) {
  for (const Params& p : {Params(2, 0.25), Params(3, 1.0), Params(4, 1.5), Params(5, 0.5)}) {
    const int n = p.ambient_dim();
    const Polynomial f = v2_harmonic(p.d()) + Polynomial::constant(n, 0.3) + Polynomial::coordinate(n, 0).pow(3);
    const ZonalProjection zonal(f, p, 24);
    const auto rule = build_rule(p.d(), p.d() <= 3 ? 60 : 30);
    std::mt19937_64 rng(50 + p.d());
    for (double r : {0.0, 0.2, 0.45, 0.55, 0.6}) {
      const Point z = oracle::random_ball_point(n, r, rng);
      double proj = 0.0, mass = 0.0;
      for (std::size_t k = 0; k < rule.size(); ++k) {
        const auto w = rule.node(k);
        double zw = 0.0;
        for (int i = 0; i < n; ++i) zw += z[i] * w[i];
        const double t = (1.0 - norm2(z)) / (1.0 - 2.0 * zw + norm2(z));
        proj += rule.weight(k) * std::pow(t, 0.5 * (p.d() + 2.0 * p.s())) * f(w);
        mass += rule.weight(k) * std::pow(t, p.d());
      }
      if (std::abs(mass / sphere_area(p.d()) - 1.0) > 1e-12) continue;
      EXPECT_NEAR(zonal.value(z), proj, 1e-11 * (1.0 + std::abs(proj))) << p.d() << " r=" << r;
    }
  }
}

TEST(Zonal, BranchesJoinAndResolutionConverges) {
  const Params p(3, 0.75);
  const Polynomial f = v2_harmonic(3) + Polynomial::coordinate(4, 1).pow(2) * 2.0;
  const ZonalProjection coarse(f, p, 24), fine(f, p, 48);
  Point lo(4, 0.0), hi(4, 0.0);
  lo[1] = 0.5 - 1e-9;
  hi[1] = 0.5 + 1e-9;
  double v = 0.0;
  Eigen::VectorXd g(4);
  Eigen::MatrixXd h(4, 4);
  coarse.derivatives(lo, v, g, h);
  // series below |z| = 1/2, panels above; the jump matches the slope
  EXPECT_NEAR(coarse.value(hi) - coarse.value(lo), 2e-9 * g[1], 1e-12 * std::abs(v));
  for (double r : {0.6, 0.9, 0.99, 0.9999}) {
    Point z(4, r / 2.0);
    EXPECT_NEAR(coarse.value(z), fine.value(z), 1e-13 * (1.0 + std::abs(fine.value(z)))) << r;
  }
}

TEST(Zonal, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(53);
  for (const Params& p : {Params(2, 0.5), Params(4, 1.0)}) {
    const int n = p.ambient_dim();
    const ZonalProjection zonal(v2_harmonic(p.d()) + Polynomial::coordinate(n, 0) * 0.4, p, 24);
    for (double r : {0.0, 0.3, 0.7, 0.9}) {
      const Point z = oracle::random_ball_point(n, r, rng);
      double v = 0.0;
      Eigen::VectorXd g(n), gp(n), gm(n);
      Eigen::MatrixXd h(n, n), scratch(n, n);
      zonal.derivatives(z, v, g, h);
      EXPECT_NEAR(v, zonal.value(z), 1e-14 * (1.0 + std::abs(v)));
      const double step = 1e-5;
      for (int i = 0; i < n; ++i) {
        Point zp = z, zm = z;
        zp[i] += step;
        zm[i] -= step;
        double vp = 0.0, vm = 0.0;
        zonal.derivatives(zp, vp, gp, scratch);
        zonal.derivatives(zm, vm, gm, scratch);
        EXPECT_NEAR((vp - vm) / (2.0 * step), g[i], 1e-7 * (1.0 + g.norm()));
        EXPECT_LE(((gp - gm) / (2.0 * step) - h.col(i)).norm(), 1e-6 * (1.0 + h.norm()));
      }
    }
  }
}

TEST(Distance, NearestBubbleToV2IsOffCenter) {
  // the product rule of degree 80 still resolves G_z at |z| ~ 0.8 in d = 3
  const Params p(3, 1.0);
  const auto v2 = SphereFunction::from_polynomial(v2_harmonic(3));
  const DistanceResult r = dist_to_manifold(v2, p, quad_for(3));
  EXPECT_TRUE(r.status.converged);
  const double radius = std::sqrt(norm2(r.minimizer.zeta));
  EXPECT_GT(radius, 0.5);
  const auto rule = build_rule(3, 80);
  double proj = 0.0, mass = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto w = rule.node(k);
    double zw = 0.0;
    for (int i = 0; i < 4; ++i) zw += r.minimizer.zeta[i] * w[i];
    const double t = (1.0 - radius * radius) / (1.0 - 2.0 * zw + radius * radius);
    proj += rule.weight(k) * std::pow(t, 2.5) * v2(w);
    mass += rule.weight(k) * std::pow(t, 3.0);
  }
  const double mass_error = std::abs(mass / sphere_area(3) - 1.0);
  EXPECT_LE(mass_error, 1e-5) << "radius " << radius;
  const double want = hs_norm2(v2, p) - conformal_eigenvalue(0, p) / sphere_area(3) * proj * proj;
  EXPECT_NEAR(r.dist2, want, 1e-9 * want + 10.0 * mass_error * want);
}

TEST(Distance, DeterministicAcrossThreadCounts) {
  const Params p(2, 0.5);
  const auto F = SphereFunction::from_polynomial(v2_harmonic(2) + Polynomial::constant(3, 0.3));
  DistanceResult a, b;
  {
    ThreadEnv env("1");
    a = dist_to_manifold(F, p, quad_for(2));
  }
  {
    ThreadEnv env("4");
    b = dist_to_manifold(F, p, quad_for(2));
  }
  EXPECT_EQ(a.dist2, b.dist2);
  EXPECT_EQ(a.minimizer.zeta, b.minimizer.zeta);
  EXPECT_EQ(a.status.multistart_index, b.status.multistart_index);
}

TEST(Distance, RejectsBadOptions) {
  const Params p(3, 1.0);
  SolverOptions opts;
  opts.multistarts = 0;
  EXPECT_THROW(dist_to_manifold(test_family(0.01, p), p, quad_for(3), opts), LabError);
  EXPECT_THROW(dist_to_manifold(test_family(0.01, p), p, quad_for(2)), LabError);
}

TEST(Quotient, SignOfTheCubicTerm) {
  const Params p(3, 1.0);
  EXPECT_LT(be_quotient(test_family(1e-2, p), p, quad_for(3)).quotient, 4.0 / 7.0);
  EXPECT_GT(be_quotient(test_family(-1e-2, p), p, quad_for(3)).quotient, 4.0 / 7.0);
}

TEST(Quotient, IncreasesTowardGap) {
  const Params p(3, 1.0);
  double prev = -std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const QuotientReport r = be_quotient(test_family(eps, p), p, quad_for(3));
    EXPECT_LT(r.quotient, p.gap());
    EXPECT_GT(r.quotient, prev);
    EXPECT_GE(r.numerator, -1e-9 * r.hs_norm2);
    EXPECT_GT(r.dist2, 0.0);
    EXPECT_EQ(r.quotient, r.numerator / r.dist2);
    prev = r.quotient;
  }
  EXPECT_GT(prev, p.gap() - 1e-4);
}

TEST(Quotient, ScaleInvariance) {
  for (const Params& p : {Params(3, 1.0), Params(2, 0.5)}) {
    const auto F = test_family(0.05, p);
    const double q = be_quotient(F, p, quad_for(p.d())).quotient;
    for (double t : {-1.0, 0.5, 3.0}) {
      const double qt = be_quotient(F.scaled(t), p, quad_for(p.d())).quotient;
      EXPECT_NEAR(qt, q, 1e-8 * std::abs(q)) << "t=" << t;
    }
  }
}
