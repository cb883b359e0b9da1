#pragma once

// Closed-form multi-output ridge regression.
//
// The objective is the mean squared error over training rows plus an
// unaveraged penalty,
//
//   J(W) = (1/n) * sum_i ||x_i^T W - y_i||^2 + alpha * ||W||_F^2,
//
// whose minimiser solves (X^T X + n*alpha*I) W = X^T Y. Code that expects the
// more common sum-of-squares convention should pass alpha' / n.

#include "decodekit/labeled_matrix.hpp"
#include "decodekit/random.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace decodekit::ridge {

enum class SolverPolicy {
  Auto,    ///< Primal when d_in <= n, dual otherwise.
  Primal,  ///< Cholesky of the d_in x d_in system.
  Dual,    ///< Cholesky of the n x n Gram system.
};

std::string_view to_string(SolverPolicy p);
SolverPolicy solver_policy_from_string(std::string_view s);

/// 10^-3 .. 10^6, ten log-spaced points.
std::vector<double> default_alpha_grid();

/// Penalty small enough that fits on full-rank data interpolate to ~1e-10.
inline constexpr double kMinimalAlpha = 1e-10;

struct RidgeConfig {
  std::vector<double> alpha_grid = default_alpha_grid();
  /// z-score input columns with statistics from the rows being fit.
  bool standardize = true;
  SolverPolicy solver = SolverPolicy::Auto;
  /// Folds used by select_alpha when it is driven from a config.
  int cv_folds = 10;

  /// Non-empty, positive, strictly increasing grid; cv_folds >= 2.
  void validate() const;

  /// Single-point grid at kMinimalAlpha.
  static RidgeConfig minimal(bool standardize = true);
};

struct RidgeFit {
  Matrix weights;  ///< d_in x d_out
  bool standardized = false;
  Eigen::RowVectorXd input_means;   ///< zeros when !standardized
  Eigen::RowVectorXd input_scales;  ///< ones when !standardized; always > 0
  double alpha_used = 0.0;
};

/// Solves the ridge normal equations. alpha == 0 is accepted only when the
/// system is numerically nonsingular.
RidgeFit fit(const Matrix& X, const Matrix& Y, double alpha, const RidgeConfig& cfg = {});

/// standardized(X) * weights
Matrix predict(const RidgeFit& fit, const Matrix& X);

/// Applies the stored column statistics to X.
Matrix standardize_with(const RidgeFit& fit, const Matrix& X);

struct AlphaSelection {
  double best_alpha = 0.0;
  std::vector<double> cv_mse;  ///< aligned with the config's alpha grid
};

/// k-fold cross-validation over cfg.alpha_grid. The score for each alpha is
/// the pooled out-of-fold squared error divided by n * d_out. The smallest
/// score wins; exact ties go to the larger alpha.
AlphaSelection select_alpha(const Matrix& X, const Matrix& Y, const RidgeConfig& cfg, int folds,
                            std::uint64_t seed);

/// Fold index (0..k-1) for each of n rows: rows are shuffled with a
/// counter-based generator keyed on `key`, then split into contiguous blocks
/// whose sizes differ by at most one (the first n % k blocks get the extra
/// row).
std::vector<int> kfold_assignment(std::size_t n, int k, RngKey key);

/// Persists weights as a binary matrix (`<stem>.rdmx`) and the remaining
/// fields as a JSON sidecar (`<stem>.json`).
void save_fit(const RidgeFit& fit, const std::filesystem::path& stem);
RidgeFit load_fit(const std::filesystem::path& stem);

namespace detail {

// Standardised design and Gram matrix of one training set, reused across an
// alpha sweep. fit() and select_alpha() both solve through this class, so the
// sweep scores the same weights fit() returns.
class Problem {
 public:
  Problem(const Matrix& X, const Matrix& Y, bool standardize, SolverPolicy policy);

  bool dual() const noexcept { return dual_; }
  /// Weights for one alpha (throws SolverError if the system is singular).
  Matrix solve(double alpha) const;
  Matrix standardize(const Matrix& X) const;
  RidgeFit make_fit(Matrix weights, double alpha) const;

  const Matrix& design() const noexcept { return Xs_; }

 private:
  Matrix factor_and_solve(const Matrix& base, const Matrix& rhs, double alpha) const;

  bool standardized_;
  bool dual_;
  Eigen::RowVectorXd means_;
  Eigen::RowVectorXd scales_;
  Matrix Xs_;
  Matrix gram_;  // X^T X (primal) or X X^T (dual)
  Matrix rhs_;   // X^T Y (primal) or Y (dual)
};

}  // namespace detail

}  // namespace decodekit::ridge
