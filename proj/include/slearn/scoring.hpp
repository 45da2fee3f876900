#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "slearn/dataset.hpp"
#include "slearn/errors.hpp"
#include "slearn/graph.hpp"

namespace slearn {

/// Correlation matrix and sample count behind every score and test.
/// Immutable once built.
class SufficientStats {
 public:
  SufficientStats() = default;

  SufficientStats(Eigen::MatrixXd corr, Eigen::Index samples) : corr_(std::move(corr)), m_(samples) {
    if (corr_.rows() != corr_.cols()) throw std::invalid_argument("correlation matrix must be square");
    if (m_ < 1) throw std::invalid_argument("sample count must be positive");
    for (Eigen::Index i = 0; i < corr_.rows(); ++i) {
      if (std::abs(corr_(i, i) - 1.0) > 1e-9) throw std::invalid_argument("correlation matrix needs a unit diagonal");
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::abs(corr_(i, j) - corr_(j, i)) > 1e-12) throw std::invalid_argument("correlation matrix must be symmetric");
        if (std::abs(corr_(i, j)) > 1.0) throw std::invalid_argument("correlation entries must lie in [-1, 1]");
      }
    }
  }

  static SufficientStats from_data(const Dataset& d) { return {correlation_matrix(d), d.samples()}; }

  int variables() const noexcept { return static_cast<int>(corr_.rows()); }
  Eigen::Index samples() const noexcept { return m_; }
  const Eigen::MatrixXd& corr() const noexcept { return corr_; }
  double corr(Node i, Node j) const { return corr_(i, j); }

  /// Statistics of the listed variables, in the listed order.
  SufficientStats restrict(std::span<const Node> nodes) const {
    const auto k = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = corr_(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
    }
    SufficientStats out;
    out.corr_ = std::move(sub);
    out.m_ = m_;
    return out;
  }

 private:
  Eigen::MatrixXd corr_;
  Eigen::Index m_ = 0;
};

/// Residual variance below this counts as a singular regression.
inline constexpr double kSingularTolerance = 1e-12;

namespace detail {

inline void check_distinct(Node i, std::span<const Node> set, int n, const char* what) {
  check_node(i, n);
  for (std::size_t a = 0; a < set.size(); ++a) {
    check_node(set[a], n);
    if (set[a] == i) throw std::invalid_argument(std::string(what) + ": target appears in its own conditioning set");
    for (std::size_t b = a + 1; b < set.size(); ++b) {
      if (set[a] == set[b]) throw std::invalid_argument(std::string(what) + ": duplicate node in set");
    }
  }
}

// Cholesky factor of corr[set, set]; throws ConditioningError when the
// submatrix is not numerically positive definite.
inline Eigen::LLT<Eigen::MatrixXd> factor_block(const SufficientStats& s, std::span<const Node> set) {
  const auto k = static_cast<Eigen::Index>(set.size());
  Eigen::MatrixXd block(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) block(a, b) = s.corr(set[static_cast<std::size_t>(a)], set[static_cast<std::size_t>(b)]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success) throw ConditioningError("conditioning set correlation matrix is singular");
  const Eigen::MatrixXd& l = llt.matrixLLT();
  for (Eigen::Index a = 0; a < k; ++a) {
    if (l(a, a) * l(a, a) < kSingularTolerance) throw ConditioningError("conditioning set correlation matrix is singular");
  }
  return llt;
}

// L^-1 corr[set, i], with L the Cholesky factor of corr[set, set].
inline Eigen::VectorXd whitened_column(const SufficientStats& s, const Eigen::LLT<Eigen::MatrixXd>& llt,
                                       std::span<const Node> set, Node i) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(set.size()));
  for (std::size_t a = 0; a < set.size(); ++a) r(static_cast<Eigen::Index>(a)) = s.corr(set[a], i);
  return llt.matrixL().solve(r);
}

}  // namespace detail

/// Variance of standardized variable i left after regressing on `parents`.
inline double residual_variance(const SufficientStats& s, Node i, std::span<const Node> parents) {
  detail::check_distinct(i, parents, s.variables(), "residual_variance");
  if (parents.empty()) return 1.0;
  auto llt = detail::factor_block(s, parents);
  const Eigen::VectorXd a = detail::whitened_column(s, llt, parents, i);
  const double resid = 1.0 - a.squaredNorm();
  if (resid < kSingularTolerance) throw ConditioningError("target is a linear function of its parents");
  return resid;
}

/// Gaussian BIC of node i given `parents`, larger is better:
///   -m * log(residual variance) - lambda * |parents| * log(m).
/// Constant likelihood terms are dropped; only differences are meaningful.
inline double local_bic(const SufficientStats& s, Node i, std::span<const Node> parents, double lambda) {
  const double resid = residual_variance(s, i, parents);
  const auto m = static_cast<double>(s.samples());
  return -m * std::log(resid) - lambda * static_cast<double>(parents.size()) * std::log(m);
}

inline double total_bic(const SufficientStats& s, const Dag& g, double lambda) {
  if (g.size() != s.variables()) throw std::invalid_argument("graph and statistics disagree on variable count");
  double total = 0.0;
  for (Node i = 0; i < g.size(); ++i) total += local_bic(s, i, g.parents(i), lambda);
  return total;
}

/// Partial correlation of i and j given S, clamped to [-1, 1].
inline double partial_correlation(const SufficientStats& s, Node i, Node j, std::span<const Node> cond) {
  if (i == j) throw std::invalid_argument("partial_correlation: i == j");
  detail::check_distinct(i, cond, s.variables(), "partial_correlation");
  detail::check_distinct(j, cond, s.variables(), "partial_correlation");
  if (cond.empty()) return s.corr(i, j);
  auto llt = detail::factor_block(s, cond);
  const Eigen::VectorXd a = detail::whitened_column(s, llt, cond, i);
  const Eigen::VectorXd b = detail::whitened_column(s, llt, cond, j);
  const double vi = 1.0 - a.squaredNorm();
  const double vj = 1.0 - b.squaredNorm();
  if (vi < kSingularTolerance || vj < kSingularTolerance) {
    throw ConditioningError("variable is determined by the conditioning set");
  }
  return std::clamp((s.corr(i, j) - a.dot(b)) / std::sqrt(vi * vj), -1.0, 1.0);
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct CiTestResult {
  bool independent = false;
  double p_value = 0.0;
  double statistic = 0.0;
};

/// Fisher-z test of i _||_ j | S: z = sqrt(m - |S| - 3) * atanh(r),
/// two-sided p from the standard normal, independent iff p > alpha.
inline CiTestResult fisher_z_test(const SufficientStats& s, Node i, Node j, std::span<const Node> cond,
                                  double alpha) {
  const auto dof = static_cast<double>(s.samples()) - static_cast<double>(cond.size()) - 3.0;
  if (dof < 1.0) {
    throw TestError("Fisher-z test needs m - |S| - 3 >= 1 (m = " + std::to_string(s.samples()) +
                    ", |S| = " + std::to_string(cond.size()) + ")");
  }
  const double r = partial_correlation(s, i, j, cond);
  CiTestResult out;
  if (std::abs(r) >= 1.0) {
    out.statistic = std::copysign(std::numeric_limits<double>::infinity(), r);
    out.p_value = 0.0;
  } else {
    out.statistic = 0.5 * std::sqrt(dof) * std::log((1.0 + r) / (1.0 - r));
    out.p_value = std::erfc(std::abs(out.statistic) / std::numbers::sqrt2);
  }
  out.independent = out.p_value > alpha;
  return out;
}

/// Memoised local scores for search procedures. Singular regressions score
/// -infinity instead of throwing, so a search simply never selects them.
class LocalScoreCache {
 public:
  LocalScoreCache(const SufficientStats& stats, double lambda) : stats_(&stats), lambda_(lambda) {}

  /// `parents` must be sorted.
  double operator()(Node i, std::span<const Node> parents) {
    key_.assign(1, i);
    key_.insert(key_.end(), parents.begin(), parents.end());
    if (auto it = cache_.find(key_); it != cache_.end()) return it->second;
    double value;
    try {
      value = local_bic(*stats_, i, parents, lambda_);
    } catch (const ConditioningError&) {
      value = -std::numeric_limits<double>::infinity();
    }
    cache_.emplace(key_, value);
    return value;
  }

  double lambda() const noexcept { return lambda_; }
  const SufficientStats& stats() const noexcept { return *stats_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<Node>& v) const noexcept {
      std::size_t h = 1469598103934665603ULL;
      for (Node x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
      return h;
    }
  };

  const SufficientStats* stats_;
  double lambda_;
  std::vector<Node> key_;
  std::unordered_map<std::vector<Node>, double, KeyHash> cache_;
};

}  // namespace slearn
