#pragma once

// Command dispatch for the be_lab tool. Every command builds an ordered JSON
// document; the json, csv and text writers all render from it so the three
// formats never disagree.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "belab/conformal.hpp"
#include "belab/constants.hpp"
#include "belab/error.hpp"
#include "belab/expansion.hpp"
#include "belab/functional.hpp"
#include "belab/polysphere.hpp"
#include "belab/quadrature.hpp"

namespace belab::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

enum class Command { constants, gap, moments, dist, sweep, fit, theorem, bound, selftest };
enum class Format { json, csv, text };

inline const std::vector<std::pair<std::string, Command>>& command_names() {
  static const std::vector<std::pair<std::string, Command>> names = {
      {"constants", Command::constants}, {"gap", Command::gap},         {"moments", Command::moments},
      {"dist", Command::dist},           {"sweep", Command::sweep},     {"fit", Command::fit},
      {"theorem", Command::theorem},     {"bound", Command::bound},     {"selftest", Command::selftest}};
  return names;
}

inline std::string to_string(Command c) {
  for (const auto& [name, cmd] : command_names())
    if (cmd == c) return name;
  return "unknown";
}

inline std::string to_string(Format f) {
  switch (f) {
    case Format::json: return "json";
    case Format::csv: return "csv";
    case Format::text: return "text";
  }
  return "unknown";
}

struct RunConfig {
  Command command = Command::selftest;
  std::optional<int> d;
  std::optional<double> s;
  std::optional<int> quad_degree;  // default_quadrature_degree(d) when unset
  std::vector<double> eps_list;    // command-specific default when empty
  int multistarts = 16;
  std::uint64_t seed = 0;
  Format format = Format::text;
  std::optional<std::string> output_path;
};

/// Parses "1e-2,5e-3" into doubles.
inline std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  if (!text.empty() && text.back() == ',') throw validation_error("cli", "eps", "trailing comma in epsilon list");
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw validation_error("cli", "eps", "empty item in epsilon list");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw validation_error("cli", "eps", "cannot parse '" + item + "' as a number");
    }
    if (used != item.size()) throw validation_error("cli", "eps", "cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  if (out.empty()) throw validation_error("cli", "eps", "empty epsilon list");
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const Json& j, int indent) {
  const std::string pad(indent + 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent + 2);
      }
      os << "\n" << std::string(indent, ' ') << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(os, j[i], indent + 2);
      }
      os << "\n" << std::string(indent, ' ') << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_double(x) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

inline std::string scalar_text(const Json& j) {
  if (j.is_number_float()) return format_double(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

inline void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) joined += (i ? "," : "") + scalar_text(j[i]);
    out.emplace_back(prefix, joined);
  } else {
    out.emplace_back(prefix, scalar_text(j));
  }
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace detail

inline std::string render_json(const Json& doc) {
  std::ostringstream os;
  detail::write_json(os, doc, 0);
  os << "\n";
  return os.str();
}

/// Tabular documents (those with a "rows" array of flat objects) become a
/// header plus one line per row; anything else becomes key,value pairs.
inline std::string render_csv(const Json& doc) {
  std::ostringstream os;
  if (doc.contains("csv_columns") && doc.contains("rows")) {
    std::vector<std::string> cols;
    for (const auto& c : doc["csv_columns"]) cols.push_back(c[0].get<std::string>());
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (const auto& row : doc["rows"]) {
      std::size_t i = 0;
      for (const auto& c : doc["csv_columns"]) {
        const std::string key = c[1].get<std::string>();
        os << (i++ ? "," : "") << detail::csv_quote(row.contains(key) ? detail::scalar_text(row[key]) : "");
      }
      os << "\n";
    }
    return os.str();
  }
  std::vector<std::pair<std::string, std::string>> flat;
  detail::flatten(doc, "", flat);
  os << "key,value\n";
  for (const auto& [k, v] : flat) os << detail::csv_quote(k) << "," << detail::csv_quote(v) << "\n";
  return os.str();
}

inline std::string render_text(const Json& doc) {
  std::vector<std::pair<std::string, std::string>> flat;
  Json body = doc;
  body.erase("csv_columns");
  detail::flatten(body, "", flat);
  std::ostringstream os;
  for (const auto& [k, v] : flat) os << k << ": " << v << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

inline Json config_echo(const RunConfig& c) {
  Json j;
  j["command"] = to_string(c.command);
  j["d"] = c.d ? Json(*c.d) : Json(nullptr);
  j["s"] = c.s ? Json(*c.s) : Json(nullptr);
  j["quad_degree"] = c.quad_degree ? Json(*c.quad_degree) : Json(nullptr);
  j["eps"] = c.eps_list;
  j["multistarts"] = c.multistarts;
  j["seed"] = c.seed;
  j["format"] = to_string(c.format);
  j["output"] = c.output_path ? Json(*c.output_path) : Json(nullptr);
  return j;
}

inline Params require_params(const RunConfig& c) {
  if (!c.d) throw validation_error("cli", "d", "--d is required for '" + to_string(c.command) + "'");
  if (!c.s) throw validation_error("cli", "s", "--s is required for '" + to_string(c.command) + "'");
  return Params(*c.d, *c.s);
}

inline QuadraturePair make_quadrature(const RunConfig& c, const Params& p) {
  const int degree = c.quad_degree ? *c.quad_degree : default_quadrature_degree(p.d());
  return QuadraturePair::make(p.d(), degree);
}

inline SolverOptions solver_options(const RunConfig& c) {
  if (c.multistarts < 1) throw validation_error("cli", "multistarts", "must be >= 1");
  SolverOptions o;
  o.multistarts = c.multistarts;
  o.seed = c.seed;
  return o;
}

inline Json zeta_json(const Point& z) {
  Json arr = Json::array();
  for (double v : z) arr.push_back(v);
  return arr;
}

inline Json sweep_row_json(const SweepRow& r) {
  Json j;
  j["eps"] = r.epsilon;
  j["numerator"] = r.numerator;
  j["dist2"] = r.dist2;
  j["quotient"] = r.quotient;
  j["quad_err"] = r.quad_error;
  j["solver_err"] = r.solver_error;
  j["minimizer_norm"] = r.minimizer_norm;
  j["converged"] = r.converged;
  j["ok"] = r.ok;
  if (!r.ok) j["failure"] = r.failure;
  return j;
}

inline Json sweep_columns() {
  return Json::array({Json::array({"eps", "eps"}), Json::array({"numerator", "numerator"}),
                      Json::array({"dist2", "dist2"}), Json::array({"quotient", "quotient"}),
                      Json::array({"quad_err", "quad_err"})});
}

/// Result of a command: the report document and its exit code.
struct Outcome {
  Json doc;
  int exit_code = 0;
};

inline Outcome cmd_constants(const RunConfig& c) {
  const Params p = require_params(c);
  Json j;
  j["two_star"] = p.two_star();
  j["gap"] = gap_constant(p);
  j["sobolev_constant"] = sobolev_constant(p);
  j["sobolev_constant_direct"] = sobolev_constant_direct(p);
  Json ladder = Json::array();
  for (int ell = 0; ell <= 4; ++ell) ladder.push_back(conformal_eigenvalue(ell, p));
  j["conformal_eigenvalues"] = ladder;
  j["sphere_area"] = sphere_area(p.d());
  j["bubble_norm_2star"] = bubble_lebesgue_norm(p);
  j["potential_coefficient"] = potential_coefficient(p);
  j["cubic_integral"] = cubic_integral(p);
  j["cubic_integral_polynomial"] = cubic_integral_via_polynomial(p);
  j["perturbation_energy"] = perturbation_energy(p);
  j["slope_theory"] = expansion_slope_theory(p);
  return {j, 0};
}

inline Outcome cmd_gap(const RunConfig& c) {
  const Params p = require_params(c);
  const double e0 = conformal_eigenvalue(0, p), e1 = conformal_eigenvalue(1, p), e2 = conformal_eigenvalue(2, p);
  const double spectral = (e2 - (p.two_star() - 1.0) * e0) / e2;
  const Polynomial v2 = v2_harmonic(p.d());
  Json j;
  j["E0"] = e0;
  j["E1"] = e1;
  j["E2"] = e2;
  j["spectral_gap"] = spectral;
  j["gap_constant"] = gap_constant(p);
  j["relative_difference"] = std::abs(spectral - p.gap()) / p.gap();
  j["tangent_residual"] = e1 - (p.two_star() - 1.0) * e0;
  j["operational_gap"] = gap_form(v2, p) / hs_form(v2, v2, p);
  return {j, 0};
}

inline Outcome cmd_moments(const RunConfig& c) {
  const Params p = require_params(c);
  const int d = p.d(), n = d + 1;
  MultiIndex alpha = MultiIndex::zero(n);
  alpha.exponents[0] = alpha.exponents[1] = alpha.exponents[2] = 2;
  const double gamma_formula = monomial_moment(alpha, d);
  const double expectation = sphere_area(d) / (static_cast<double>(n) * (n + 2) * (n + 4));
  const SphereQuadrature rule = build_rule(d, c.quad_degree ? *c.quad_degree : default_quadrature_degree(d));
  const Polynomial mono = Polynomial::monomial(alpha);
  const double quad = integrate(rule, [&](std::span<const double> w) { return mono(w); });
  const Polynomial v2 = v2_harmonic(d);
  Json j;
  j["w1w2w3_squared"] = {{"gamma_formula", gamma_formula}, {"expectation_formula", expectation}, {"quadrature", quad},
                         {"quadrature_error", std::abs(quad - gamma_formula)}};
  j["v2_mean"] = integrate_exact(v2, d);
  j["v2_squared"] = integrate_exact(v2 * v2, d);
  j["v2_cubed"] = integrate_exact(v2.pow(3), d);
  j["v2_cubed_closed_form"] = 6.0 * sphere_area(d) / ((d + 1.0) * (d + 3.0) * (d + 5.0));
  j["quad_degree"] = rule.exactness_degree();
  return {j, 0};
}

inline Outcome cmd_dist(const RunConfig& c) {
  const Params p = require_params(c);
  const auto quad = make_quadrature(c, p);
  const auto opts = solver_options(c);
  const std::vector<double> eps = c.eps_list.empty() ? std::vector<double>{1e-3} : c.eps_list;
  check_sweep_epsilons(eps);
  Json rows = Json::array();
  int code = 0;
  for (double e : eps) {
    const DistanceResult r = dist_to_manifold(test_family(e, p), p, quad, opts);
    Json row;
    row["eps"] = e;
    row["dist2"] = r.dist2;
    row["dist2_expected_at_U"] = e * e * perturbation_energy(p);
    row["minimizer_c"] = r.minimizer.c;
    row["minimizer_zeta"] = zeta_json(r.minimizer.zeta);
    row["minimizer_norm"] = std::sqrt(norm2(r.minimizer.zeta));
    row["converged"] = r.status.converged;
    row["iterations"] = r.status.iterations;
    row["multistart_index"] = r.status.multistart_index;
    row["gradient_norm"] = r.status.gradient_norm;
    row["quad_err"] = r.quad_error;
    row["solver_err"] = r.solver_error;
    if (!r.status.converged) code = 3;
    rows.push_back(row);
  }
  Json j;
  j["rows"] = rows;
  j["csv_columns"] = Json::array({Json::array({"eps", "eps"}), Json::array({"dist2", "dist2"}),
                                  Json::array({"minimizer_norm", "minimizer_norm"}),
                                  Json::array({"converged", "converged"}), Json::array({"quad_err", "quad_err"})});
  return {j, code};
}

inline Outcome cmd_sweep(const RunConfig& c) {
  const Params p = require_params(c);
  const auto quad = make_quadrature(c, p);
  const SweepResult res = sweep(p, c.eps_list.empty() ? default_epsilon_grid() : c.eps_list, quad, solver_options(c));
  Json rows = Json::array();
  int code = 0;
  for (const auto& r : res.rows) {
    rows.push_back(sweep_row_json(r));
    if (!r.ok || !r.converged) code = 3;
  }
  Json j;
  j["gap"] = p.gap();
  j["rows"] = rows;
  j["csv_columns"] = sweep_columns();
  return {j, code};
}

inline Outcome cmd_fit(const RunConfig& c) {
  const Params p = require_params(c);
  const auto quad = make_quadrature(c, p);
  const SweepResult res = sweep(p, c.eps_list.empty() ? default_epsilon_grid() : c.eps_list, quad, solver_options(c));
  const ExpansionFit fit = fit_expansion(res);
  Json j;
  j["gap"] = p.gap();
  j["A"] = fit.A;
  j["B"] = fit.B;
  j["B_theory"] = fit.B_theory;
  j["B_relative_error"] = std::abs(fit.B - fit.B_theory) / std::abs(fit.B_theory);
  j["A_minus_gap"] = fit.A - p.gap();
  j["residual"] = fit.residual;
  j["rows_used"] = fit.rows_used;
  Json rows = Json::array();
  for (const auto& r : res.rows) rows.push_back(sweep_row_json(r));
  j["rows"] = rows;
  return {j, 0};
}

inline Outcome cmd_theorem(const RunConfig& c) {
  const Params p = require_params(c);
  const auto quad = make_quadrature(c, p);
  const TheoremReport rep = c.eps_list.empty() ? verify_theorem(p, quad, solver_options(c))
                                               : verify_theorem(p, quad, solver_options(c), c.eps_list);
  Json j;
  j["gap"] = rep.gap;
  j["witness_eps"] = rep.witness_eps;
  j["quotient"] = rep.quotient;
  j["margin"] = rep.margin;
  j["error_estimate"] = rep.error_estimate;
  j["c_be_upper_bound"] = rep.c_be_upper_bound;
  j["certified"] = rep.certified;
  Json rows = Json::array();
  for (const auto& r : rep.sweep.rows) rows.push_back(sweep_row_json(r));
  j["rows"] = rows;
  return {j, 0};
}

inline Outcome cmd_bound(const RunConfig& c) {
  const Params p = require_params(c);
  const auto quad = make_quadrature(c, p);
  const BoundReport rep = best_upper_bound(p, quad, solver_options(c));
  Json j;
  j["gap"] = p.gap();
  j["bound"] = rep.bound;
  j["eps"] = rep.epsilon;
  j["at_boundary"] = rep.at_boundary;
  j["minimizer_departure_eps"] = rep.minimizer_departure_eps ? Json(*rep.minimizer_departure_eps) : Json(nullptr);
  Json rows = Json::array();
  for (const auto& r : rep.rows) rows.push_back(sweep_row_json(r));
  j["rows"] = rows;
  j["csv_columns"] = sweep_columns();
  return {j, 0};
}

// ---------------------------------------------------------------------------
// Self-test

using EigenvalueFn = std::function<double(int, const Params&)>;

struct Check {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double expected = 0.0;
};

namespace detail {

inline bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

inline std::string grid_tag(const Params& p) {
  std::ostringstream os;
  os << "d=" << p.d() << ",s=" << p.s();
  return os.str();
}

inline void add(std::vector<Check>& checks, std::string name, double observed, double expected, bool passed) {
  checks.push_back({std::move(name), passed, observed, expected});
}

// all monomials of degree <= max_degree in n variables
inline void for_each_monomial(int n, int max_degree, const std::function<void(const MultiIndex&)>& fn) {
  MultiIndex alpha = MultiIndex::zero(n);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n) {
      fn(alpha);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      alpha.exponents[i] = e;
      rec(i + 1, left - e);
    }
    alpha.exponents[i] = 0;
  };
  rec(0, max_degree);
}

}  // namespace detail

/// Invariant suite over the validation grid, or over the single (d, s) in
/// the config when both are given.
inline std::vector<Check> selftest_checks(const RunConfig& c, const EigenvalueFn& eigen) {
  std::vector<Params> grid;
  if (c.d || c.s)
    grid.push_back(require_params(c));
  else
    grid = validation_grid();

  std::vector<Check> checks;
  std::vector<int> quadrature_dims;
  for (const Params& p : grid) {
    const std::string tag = detail::grid_tag(p);
    const double e0 = eigen(0, p), e1 = eigen(1, p), e2 = eigen(2, p);
    const double ts = p.two_star();

    const double tangent = (e1 - (ts - 1.0) * e0) / e1;
    detail::add(checks, "tangent_degeneracy[" + tag + "]", tangent, 0.0, std::abs(tangent) <= 1e-12);
    const double spectral = (e2 - (ts - 1.0) * e0) / e2;
    detail::add(checks, "gap_identity[" + tag + "]", spectral, p.gap(), detail::rel_close(spectral, p.gap(), 1e-12));
    const double potential = potential_coefficient(p);
    detail::add(checks, "potential_identity[" + tag + "]", potential, e0, detail::rel_close(potential, e0, 1e-12));

    const double s_log = sobolev_constant(p), s_direct = sobolev_constant_direct(p);
    detail::add(checks, "sobolev_two_paths[" + tag + "]", s_log, s_direct,
                std::abs(s_log - s_direct) <= 1e-12 * s_direct);

    const double k_closed = cubic_integral(p), k_poly = cubic_integral_via_polynomial(p);
    detail::add(checks, "cubic_integral_two_forms[" + tag + "]", k_poly, k_closed,
                k_closed > 0.0 && std::abs(k_poly - k_closed) <= 1e-12 * k_closed);

    const Polynomial v2 = v2_harmonic(p.d());
    const double op_gap = gap_form(v2, p) / hs_form(v2, v2, p);
    detail::add(checks, "operational_gap[" + tag + "]", op_gap, p.gap(), detail::rel_close(op_gap, p.gap(), 1e-12));

    double worst_tangent = 0.0;
    for (const auto& t : tangent_basis(p)) {
      if (t.poly->degree() != 1) continue;
      worst_tangent = std::max(worst_tangent, std::abs(gap_form(*t.poly, p)) / hs_form(*t.poly, *t.poly, p));
    }
    detail::add(checks, "tangent_annihilation[" + tag + "]", worst_tangent, 0.0, worst_tangent <= 1e-12);

    const double mass_u = bubble_lebesgue_mass(p);
    const double mass_pullback = std::pow(bubble_sphere_level(p), ts) * sphere_area(p.d());
    detail::add(checks, "bubble_mass[" + tag + "]", mass_pullback, mass_u, detail::rel_close(mass_pullback, mass_u, 1e-12));

    if (p.d() <= 4) {
      const auto quad = QuadraturePair::make(p.d(), default_quadrature_degree(p.d()));
      const SphereFunction u = tangent_basis(p).front();
      const Estimate num = be_numerator(SphereFunction::from_polynomial(*u.poly), p, quad);
      const double unorm = hs_norm2(u, p);
      detail::add(checks, "numerator_vanishes_on_U[" + tag + "]", num.value, 0.0, std::abs(num.value) <= 1e-9 * unorm);
    }
    if (p.d() <= 3) {
      const auto quad = QuadraturePair::make(p.d(), default_quadrature_degree(p.d()));
      SolverOptions opts;
      opts.multistarts = c.multistarts;
      opts.seed = c.seed;
      const double eps = 1e-3;
      const DistanceResult r = dist_to_manifold(test_family(eps, p), p, quad, opts);
      const double expected = eps * eps * perturbation_energy(p);
      detail::add(checks, "distance_at_U[" + tag + "]", r.dist2, expected,
                  std::abs(r.dist2 - expected) <= 1e-6 * expected && std::sqrt(norm2(r.minimizer.zeta)) <= 1e-5);
    }
    if (std::find(quadrature_dims.begin(), quadrature_dims.end(), p.d()) == quadrature_dims.end())
      quadrature_dims.push_back(p.d());
  }

  for (int d : quadrature_dims) {
    const std::string tag = "d=" + std::to_string(d);
    const int n = d + 1;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) sum_sq += monomial_moment(MultiIndex::unit(n, i, 2), d);
    detail::add(checks, "moment_sphere_relation[" + tag + "]", sum_sq, sphere_area(d),
                detail::rel_close(sum_sq, sphere_area(d), 1e-12));

    const Polynomial q = v2_harmonic(d).pow(3) + Polynomial::monomial(MultiIndex::unit(n, 0, 4));
    const HarmonicDecomposition dec = harmonic_decompose(q);
    double worst_lap = 0.0;
    for (const auto& [ell, h] : dec.components) worst_lap = std::max(worst_lap, laplacian(h).max_abs_coefficient());
    detail::add(checks, "harmonic_components[" + tag + "]", worst_lap, 0.0, worst_lap <= 1e-12);

    if (d > 4) continue;
    const int degree = 12;
    const SphereQuadrature rule = build_rule(d, degree);
    double worst = 0.0;
    detail::for_each_monomial(n, degree, [&](const MultiIndex& alpha) {
      const double got = integrate(rule, [&](std::span<const double> w) {
        double v = 1.0;
        for (int i = 0; i < n; ++i)
          for (int e = 0; e < alpha.exponents[i]; ++e) v *= w[i];
        return v;
      });
      const double want = monomial_moment(alpha, d);
      worst = std::max(worst, std::abs(got - want) / (1.0 + std::abs(want)));
    });
    detail::add(checks, "quadrature_exactness_deg12[" + tag + "]", worst, 0.0, worst <= 1e-11);
  }
  return checks;
}

inline Outcome cmd_selftest(const RunConfig& c, const EigenvalueFn& eigen) {
  const std::vector<Check> checks = selftest_checks(c, eigen);
  Json list = Json::array();
  bool all = true;
  for (const auto& ch : checks) {
    list.push_back({{"name", ch.name}, {"passed", ch.passed}, {"observed", ch.observed}, {"expected", ch.expected}});
    all = all && ch.passed;
  }
  Json j;
  j["passed"] = all;
  j["checks"] = list;
  return {j, all ? 0 : 3};
}

/// One PASS/FAIL line per check; the first failure is followed by its values.
inline std::string render_selftest_text(const Json& doc) {
  std::ostringstream os;
  bool reported = false;
  for (const auto& ch : doc["checks"]) {
    const bool ok = ch["passed"].get<bool>();
    os << (ok ? "PASS " : "FAIL ") << ch["name"].get<std::string>() << "\n";
    if (!ok && !reported) {
      os << "  observed " << format_double(ch["observed"].get<double>()) << " expected "
         << format_double(ch["expected"].get<double>()) << "\n";
      reported = true;
    }
  }
  os << (doc["passed"].get<bool>() ? "selftest: all checks passed\n" : "selftest: FAILED\n");
  return os.str();
}

// ---------------------------------------------------------------------------

inline Outcome dispatch(const RunConfig& c, const EigenvalueFn& eigen) {
  switch (c.command) {
    case Command::constants: return cmd_constants(c);
    case Command::gap: return cmd_gap(c);
    case Command::moments: return cmd_moments(c);
    case Command::dist: return cmd_dist(c);
    case Command::sweep: return cmd_sweep(c);
    case Command::fit: return cmd_fit(c);
    case Command::theorem: return cmd_theorem(c);
    case Command::bound: return cmd_bound(c);
    case Command::selftest: return cmd_selftest(c, eigen);
  }
  throw validation_error("cli", "command", "unknown command");
}

inline std::string render(const RunConfig& c, const Json& body) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = config_echo(c);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  switch (c.format) {
    case Format::json: {
      Json out = doc;
      out.erase("csv_columns");
      return render_json(out);
    }
    case Format::csv: return render_csv(body);
    case Format::text: return c.command == Command::selftest ? render_selftest_text(body) : render_text(doc);
  }
  return {};
}

/// Runs one command. Exit codes: 0 success, 2 invalid input, 3 numerical
/// failure (non-convergence, uncertified theorem, failed self-test).
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err,
               const EigenvalueFn& eigen = [](int ell, const Params& p) { return conformal_eigenvalue(ell, p); }) {
  try {
    const Outcome o = dispatch(c, eigen);
    const std::string text = render(c, o.doc);
    if (c.output_path) {
      std::ofstream f(*c.output_path, std::ios::binary);
      if (!f) throw validation_error("cli", "output", "cannot open '" + *c.output_path + "' for writing");
      f << text;
    } else {
      out << text;
    }
    return o.exit_code;
  } catch (const LabError& e) {
    err << "error [" << e.module() << "/" << e.parameter() << "]: " << e.what() << "\n";
    if (e.kind() == ErrorKind::validation) err << "usage: be_lab <command> --d <int> --s <real> [options]; see be_lab --help\n";
    return e.kind() == ErrorKind::validation ? 2 : 3;
  }
}

}  // namespace belab::cli
