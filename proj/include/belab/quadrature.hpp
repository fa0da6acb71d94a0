#pragma once

// Product quadrature on S^d. Hyperspherical coordinates
//   w_{d+1} = t_1, w_d = sin(th_1) t_2, ..., w_3 = sin(th_1)...sin(th_{d-2}) t_{d-1},
//   w_1 = sin(th_1)...sin(th_{d-1}) cos(phi), w_2 = ... sin(phi),
// with t_j = cos(th_j). The surface measure carries (1-t_j^2)^{(d-j-1)/2} in
// each polar cosine; that density is the weight of a Gauss-Gegenbauer rule,
// so every polar factor is integrated exactly. The azimuth uses an even
// number of equispaced points.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "belab/constants.hpp"
#include "belab/error.hpp"
#include "belab/parallel.hpp"

namespace belab {

struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// m-point Gauss rule for the weight (1-t^2)^a on [-1, 1], a >= 0. Nodes
/// come from the Jacobi matrix and are then polished by Newton iteration on
/// the orthonormal recurrence; weights use the Christoffel formula.
inline GaussRule1D gauss_gegenbauer(int m, double a) {
  if (m < 1) throw validation_error("quadrature", "m", "need at least one node");
  if (a < 0.0) throw validation_error("quadrature", "a", "weight exponent must be >= 0");
  const double mu0 = std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(a + 1.0) - std::lgamma(a + 1.5));
  // off-diagonal entries sqrt(b_k), k = 1..m
  std::vector<double> sqrt_b(m + 1, 0.0);
  for (int k = 1; k <= m; ++k) {
    const double q = 2.0 * k + 2.0 * a;
    sqrt_b[k] = std::sqrt(k * (k + 2.0 * a) / (q * q - 1.0));
  }

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = sqrt_b[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);

  // p_0..p_m orthonormal at t; returns p_m and p_m', fills sum of p_k^2, k<m.
  auto evaluate = [&](double t, double& sum_sq) {
    double prev = 0.0, cur = 1.0 / std::sqrt(mu0);
    double dprev = 0.0, dcur = 0.0;
    sum_sq = 0.0;
    for (int k = 0; k < m; ++k) {
      sum_sq += cur * cur;
      const double next = (t * cur - sqrt_b[k] * prev) / sqrt_b[k + 1];
      const double dnext = (cur + t * dcur - sqrt_b[k] * dprev) / sqrt_b[k + 1];
      prev = cur;
      cur = next;
      dprev = dcur;
      dcur = dnext;
    }
    return std::pair{cur, dcur};
  };

  GaussRule1D rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double t = eig.eigenvalues()[i];
    double sum_sq = 0.0;
    for (int it = 0; it < 8; ++it) {
      auto [pm, dpm] = evaluate(t, sum_sq);
      const double step = pm / dpm;
      t -= step;
      if (std::abs(step) < 1e-17) break;
    }
    evaluate(t, sum_sq);
    rule.nodes[i] = t;
  }
  // Symmetrize: the weight is even, so nodes come in +- pairs.
  for (int i = 0; i < m / 2; ++i) {
    const double t = 0.5 * (rule.nodes[m - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -t;
    rule.nodes[m - 1 - i] = t;
  }
  if (m % 2 == 1) rule.nodes[m / 2] = 0.0;
  for (int i = 0; i < m; ++i) {
    double sum_sq = 0.0;
    evaluate(rule.nodes[i], sum_sq);
    rule.weights[i] = 1.0 / sum_sq;
  }
  for (int i = 0; i < m / 2; ++i) {
    const double w = 0.5 * (rule.weights[i] + rule.weights[m - 1 - i]);
    rule.weights[i] = rule.weights[m - 1 - i] = w;
  }
  return rule;
}

inline constexpr std::size_t kDefaultNodeBudget = 10'000'000;

/// Default exactness degree: 20 for d <= 3, 12 for d in 4..6, 8 beyond.
inline int default_quadrature_degree(int d) {
  if (d <= 3) return 20;
  if (d <= 6) return 12;
  return 8;
}

class SphereQuadrature {
 public:
  SphereQuadrature(int d, int exactness_degree, std::vector<double> nodes, std::vector<double> weights)
      : d_(d), degree_(exactness_degree), nodes_(std::move(nodes)), weights_(std::move(weights)) {}

  int d() const noexcept { return d_; }
  int ambient_dim() const noexcept { return d_ + 1; }
  int exactness_degree() const noexcept { return degree_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> node(std::size_t k) const {
    return {nodes_.data() + k * static_cast<std::size_t>(d_ + 1), static_cast<std::size_t>(d_ + 1)};
  }
  double weight(std::size_t k) const { return weights_[k]; }
  std::span<const double> weights() const noexcept { return weights_; }
  /// Row-major (size() x (d+1)) node coordinates.
  std::span<const double> node_data() const noexcept { return nodes_; }

 private:
  int d_;
  int degree_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Number of nodes build_rule(d, degree) would create.
inline std::size_t rule_node_count(int d, int exactness_degree) {
  const std::size_t m = static_cast<std::size_t>(exactness_degree / 2 + 1);
  std::size_t azimuth = static_cast<std::size_t>(exactness_degree + 1);
  if (azimuth % 2 == 1) ++azimuth;
  double count = static_cast<double>(azimuth);
  for (int j = 1; j < d; ++j) count *= static_cast<double>(m);
  return count > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(count);
}

/// Product rule on S^d exact for all polynomials of total degree <= exactness_degree.
inline SphereQuadrature build_rule(int d, int exactness_degree, std::size_t node_budget = kDefaultNodeBudget) {
  if (d < 2) throw validation_error("quadrature", "d", "sphere dimension must be >= 2");
  if (exactness_degree < 2) throw validation_error("quadrature", "quad_degree", "exactness degree must be >= 2");
  const std::size_t count = rule_node_count(d, exactness_degree);
  if (count > node_budget) {
    std::ostringstream os;
    os << "rule for d=" << d << " at degree " << exactness_degree << " needs " << count
       << " nodes, above the budget of " << node_budget;
    throw validation_error("quadrature", "quad_degree", os.str());
  }
  const int m = exactness_degree / 2 + 1;
  int azimuth = exactness_degree + 1;
  if (azimuth % 2 == 1) ++azimuth;

  // polar factor j = 1..d-1 has weight exponent (d-j-1)/2
  std::vector<GaussRule1D> polar;
  for (int j = 1; j < d; ++j) polar.push_back(gauss_gegenbauer(m, 0.5 * (d - j - 1)));

  const int n = d + 1;
  std::vector<double> nodes;
  std::vector<double> weights;
  nodes.reserve(count * n);
  weights.reserve(count);

  std::vector<int> idx(d - 1, 0);
  std::vector<double> w(n);
  const double dphi = 2.0 * std::numbers::pi / azimuth;
  for (;;) {
    double radius = 1.0;  // product of sines so far
    double weight = 1.0;
    for (int j = 0; j < d - 1; ++j) {
      const double t = polar[j].nodes[idx[j]];
      w[n - 1 - j] = radius * t;
      radius *= std::sqrt((1.0 - t) * (1.0 + t));
      weight *= polar[j].weights[idx[j]];
    }
    for (int k = 0; k < azimuth; ++k) {
      const double phi = dphi * (k + 0.5);
      w[0] = radius * std::cos(phi);
      w[1] = radius * std::sin(phi);
      nodes.insert(nodes.end(), w.begin(), w.end());
      weights.push_back(weight * dphi);
    }
    int j = d - 2;
    while (j >= 0 && ++idx[j] == m) idx[j--] = 0;
    if (j < 0) break;
  }
  return SphereQuadrature(d, exactness_degree, std::move(nodes), std::move(weights));
}

/// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      carry += (sum - t) + x;
    else
      carry += (x - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

inline constexpr std::size_t kIntegrationChunk = 4096;

/// sum_k w_k f(w_k). Nodes are split into fixed chunks summed with
/// compensation; the chunk totals are combined in chunk order, so the result
/// is bit-identical for any thread count.
template <typename F>
double integrate(const SphereQuadrature& rule, F&& f) {
  const std::size_t total = rule.size();
  const std::size_t chunks = (total + kIntegrationChunk - 1) / kIntegrationChunk;
  std::vector<CompensatedSum> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * kIntegrationChunk;
    const std::size_t end = std::min(total, begin + kIntegrationChunk);
    CompensatedSum acc;
    for (std::size_t k = begin; k < end; ++k) {
      const auto w = rule.node(k);
      const double v = f(w);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite integrand value " << v << " at node " << k << " (";
        for (std::size_t i = 0; i < w.size(); ++i) os << (i ? ", " : "") << w[i];
        os << ")";
        throw numerical_error("quadrature", "f", os.str());
      }
      acc.add(rule.weight(k) * v);
    }
    partial[c] = acc;
  });
  CompensatedSum acc;
  for (const auto& p : partial) {
    acc.add(p.sum);
    acc.add(p.carry);
  }
  return acc.value();
}

}  // namespace belab
