#pragma once

// Quotient along f_eps = U + eps rho: sweeps over eps, the fit
//   E(eps) = A + B eps + C eps^2
// against the closed-form slope, certification that E(f_eps) falls strictly
// below the spectral-gap constant, and a grid search over larger eps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "belab/conformal.hpp"
#include "belab/constants.hpp"
#include "belab/error.hpp"
#include "belab/functional.hpp"

namespace belab {

inline constexpr double kMaxSweepEpsilon = 0.3;

inline std::vector<double> default_epsilon_grid() { return {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2.5e-3}; }

struct SweepRow {
  double epsilon = 0.0;
  double numerator = 0.0;
  double dist2 = 0.0;
  double quotient = 0.0;
  double quad_error = 0.0;    // quotient-level
  double solver_error = 0.0;  // quotient-level
  double minimizer_norm = 0.0;
  bool converged = false;
  bool ok = false;
  std::string failure;  // set when !ok
};

struct SweepResult {
  Params params;
  std::vector<SweepRow> rows;

  std::vector<const SweepRow*> successful() const {
    std::vector<const SweepRow*> out;
    for (const auto& r : rows)
      if (r.ok) out.push_back(&r);
    return out;
  }
};

inline void check_sweep_epsilons(const std::vector<double>& epsilons) {
  if (epsilons.empty()) throw validation_error("expansion", "eps", "empty epsilon list");
  for (double e : epsilons) {
    if (e == 0.0) throw validation_error("expansion", "eps", "eps = 0 gives a bubble; the quotient is undefined");
    if (!(std::abs(e) <= kMaxSweepEpsilon)) {
      std::ostringstream os;
      os << "|eps| = " << std::abs(e) << " is outside the perturbative range (0, " << kMaxSweepEpsilon << "]";
      throw validation_error("expansion", "eps", os.str());
    }
  }
}

inline SweepRow quotient_row(double eps, const Params& p, const QuadraturePair& quad, const SolverOptions& opts) {
  SweepRow row;
  row.epsilon = eps;
  try {
    const QuotientReport r = be_quotient(test_family(eps, p), p, quad, opts);
    row.numerator = r.numerator;
    row.dist2 = r.dist2;
    row.quotient = r.quotient;
    row.quad_error = r.quad_error_estimate;
    row.solver_error = r.solver_error_estimate;
    row.minimizer_norm = std::sqrt(norm2(r.minimizer.zeta));
    row.converged = r.solver_status.converged;
    row.ok = std::isfinite(r.quotient);
    if (!row.ok) row.failure = "non-finite quotient";
  } catch (const LabError& e) {
    if (e.kind() == ErrorKind::validation) throw;
    row.ok = false;
    row.failure = e.what();
  }
  return row;
}

/// One row per eps, in the given order. Numerical failures mark the row
/// instead of aborting the sweep.
inline SweepResult sweep(const Params& p, const std::vector<double>& epsilons, const QuadraturePair& quad,
                         const SolverOptions& opts = {}) {
  check_sweep_epsilons(epsilons);
  SweepResult res{p, {}};
  res.rows.reserve(epsilons.size());
  for (double e : epsilons) res.rows.push_back(quotient_row(e, p, quad, opts));
  return res;
}

struct ExpansionFit {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double residual = 0.0;  // weighted RMS of the fit residuals
  double B_theory = 0.0;
  int rows_used = 0;
};

/// Slope of E(f_eps) at eps = 0: the numerator's eps^3 coefficient over ||rho||^2_{H^s}.
inline double expansion_slope_theory(const Params& p) { return numerator_cubic_coefficient(p) / perturbation_energy(p); }

/// Relative floor on each row's uncertainty so that rows with a vanishing
/// quadrature error do not dominate the fit.
inline constexpr double kFitSigmaFloor = 1e-8;

/// Weighted least-squares fit of quotient = A + B eps + C eps^2.
inline ExpansionFit fit_expansion(const SweepResult& res) {
  const auto rows = res.successful();
  if (rows.size() < 3)
    throw validation_error("expansion", "eps", "fit needs at least 3 successful rows, got " + std::to_string(rows.size()));
  double lo = std::abs(rows.front()->epsilon), hi = lo;
  for (const auto* r : rows) {
    lo = std::min(lo, std::abs(r->epsilon));
    hi = std::max(hi, std::abs(r->epsilon));
  }
  if (hi < 10.0 * lo * (1.0 - 1e-12))
    throw validation_error("expansion", "eps", "fit rows must span at least a decade of eps");

  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double e = rows[i]->epsilon;
    const double sigma = std::max(rows[i]->quad_error, kFitSigmaFloor * std::max(1.0, std::abs(rows[i]->quotient)));
    design(i, 0) = 1.0 / sigma;
    design(i, 1) = e / sigma;
    design(i, 2) = e * e / sigma;
    rhs(i) = rows[i]->quotient / sigma;
  }
  // columns scaled to unit norm for conditioning
  Eigen::Vector3d col_scale;
  for (int j = 0; j < 3; ++j) {
    col_scale(j) = design.col(j).norm();
    design.col(j) /= col_scale(j);
  }
  Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
  coef.array() /= col_scale.array();

  ExpansionFit fit;
  fit.A = coef(0);
  fit.B = coef(1);
  fit.C = coef(2);
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = rows[i]->epsilon;
    const double r = rows[i]->quotient - (fit.A + fit.B * e + fit.C * e * e);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.B_theory = expansion_slope_theory(res.params);
  fit.rows_used = n;
  return fit;
}

struct TheoremReport {
  Params params;
  double gap = 0.0;
  double witness_eps = 0.0;
  double quotient = 0.0;
  double margin = 0.0;          // gap - quotient
  double error_estimate = 0.0;  // quadrature + solver, quotient-level
  double c_be_upper_bound = 0.0;
  bool certified = false;
  SweepResult sweep;
};

/// Required ratio between the margin and its error estimate.
inline constexpr double kCertificationFactor = 10.0;

/// Evaluates the default eps grid and keeps the row with the largest
/// certified margin gap - E(f_eps) > 10 x error estimate.
inline TheoremReport verify_theorem(const Params& p, const QuadraturePair& quad, const SolverOptions& opts = {},
                                    const std::vector<double>& epsilons = default_epsilon_grid()) {
  TheoremReport rep{p, p.gap(), 0.0, 0.0, 0.0, 0.0, 0.0, false, sweep(p, epsilons, quad, opts)};
  const SweepRow* best = nullptr;
  for (const auto& row : rep.sweep.rows) {
    if (!row.ok || !row.converged) continue;
    const double margin = p.gap() - row.quotient;
    const double err = row.quad_error + row.solver_error;
    if (margin > kCertificationFactor * err && (!best || margin > p.gap() - best->quotient)) best = &row;
  }
  if (!best) {
    std::ostringstream os;
    os << "no eps in the grid certifies E(f_eps) < " << p.gap() << " for d=" << p.d() << ", s=" << p.s();
    throw numerical_error("expansion", "eps", os.str());
  }
  rep.witness_eps = best->epsilon;
  rep.quotient = best->quotient;
  rep.margin = p.gap() - best->quotient;
  rep.error_estimate = best->quad_error + best->solver_error;
  rep.c_be_upper_bound = best->quotient;
  rep.certified = true;
  return rep;
}

struct BoundSearchOptions {
  double eps_min = 0.05;
  double eps_max = 1.0;
  int intervals = 19;  // uniform grid eps_min + i (eps_max - eps_min) / intervals
};

struct BoundReport {
  double bound = 0.0;
  double epsilon = 0.0;
  bool at_boundary = false;
  /// Smallest evaluated eps at which the nearest bubble leaves z = 0
  /// (|z| > 1e-5); empty when it never does.
  std::optional<double> minimizer_departure_eps;
  std::vector<SweepRow> rows;  // sorted by eps
};

inline constexpr double kMinimizerDepartureRadius = 1e-5;

/// Minimum of E(f_eps) over a uniform eps grid (plus the default sweep grid),
/// letting the nearest bubble move freely.
inline BoundReport best_upper_bound(const Params& p, const QuadraturePair& quad, const SolverOptions& opts = {},
                                    const BoundSearchOptions& search = {}) {
  if (!(search.eps_min > 0.0) || !(search.eps_max > search.eps_min) || search.intervals < 1)
    throw validation_error("expansion", "eps", "search interval must satisfy 0 < eps_min < eps_max");
  std::vector<double> grid;
  // i / intervals is the same double for every refinement of the grid
  for (int i = 0; i <= search.intervals; ++i)
    grid.push_back(search.eps_min +
                   (search.eps_max - search.eps_min) * (static_cast<double>(i) / search.intervals));
  for (double e : default_epsilon_grid()) grid.push_back(e);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  BoundReport rep;
  const SweepRow* best = nullptr;
  for (double e : grid) rep.rows.push_back(quotient_row(e, p, quad, opts));
  for (const auto& row : rep.rows) {
    if (!row.ok) continue;
    if (!best || row.quotient < best->quotient) best = &row;
    if (!rep.minimizer_departure_eps && row.minimizer_norm > kMinimizerDepartureRadius)
      rep.minimizer_departure_eps = row.epsilon;
  }
  if (!best) throw numerical_error("expansion", "eps", "no eps in the search grid produced a quotient");
  rep.bound = best->quotient;
  rep.epsilon = best->epsilon;
  rep.at_boundary = best == &rep.rows.front() || best == &rep.rows.back();
  return rep;
}

}  // namespace belab
