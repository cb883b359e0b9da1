#include "decodekit/ridge.hpp"

#include "decodekit/digest.hpp"
#include "decodekit/errors.hpp"
#include "decodekit/matrix_io.hpp"

#include "json.hpp"

#include <cmath>
#include <numeric>

namespace decodekit::ridge {

std::string_view to_string(SolverPolicy p) {
  switch (p) {
    case SolverPolicy::Auto: return "auto";
    case SolverPolicy::Primal: return "primal";
    case SolverPolicy::Dual: return "dual";
  }
  return "auto";
}

SolverPolicy solver_policy_from_string(std::string_view s) {
  if (s == "auto") return SolverPolicy::Auto;
  if (s == "primal") return SolverPolicy::Primal;
  if (s == "dual") return SolverPolicy::Dual;
  throw ValidationError("unknown solver policy '" + std::string(s) + "' (expected auto, primal or dual)");
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int e = -3; e <= 6; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

void RidgeConfig::validate() const {
  if (alpha_grid.empty()) throw ValidationError("alpha_grid is empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0) || !std::isfinite(alpha_grid[i])) {
      throw ValidationError("alpha_grid[" + std::to_string(i) + "] must be a finite positive number");
    }
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1])) {
      throw ValidationError("alpha_grid must be strictly increasing");
    }
  }
  if (cv_folds < 2) throw ValidationError("cv_folds must be at least 2");
}

RidgeConfig RidgeConfig::minimal(bool standardize) {
  RidgeConfig cfg;
  cfg.alpha_grid = {kMinimalAlpha};
  cfg.standardize = standardize;
  return cfg;
}

namespace detail {

Problem::Problem(const Matrix& X, const Matrix& Y, bool standardize, SolverPolicy policy)
    : standardized_(standardize) {
  if (X.rows() != Y.rows()) {
    throw DimensionError("X has " + std::to_string(X.rows()) + " rows but Y has " + std::to_string(Y.rows()));
  }
  if (X.rows() < 2) throw DimensionError("ridge needs at least 2 rows, got " + std::to_string(X.rows()));
  if (X.cols() < 1 || Y.cols() < 1) throw DimensionError("X and Y need at least one column");

  const auto n = X.rows();
  const auto d = X.cols();
  if (standardize) {
    means_ = X.colwise().mean();
    scales_.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt((X.col(c).array() - means_(c)).square().sum() / static_cast<double>(n));
      // Constant columns are centred but not scaled.
      scales_(c) = (sd > 1e-12 * std::max(1.0, std::abs(means_(c)))) ? sd : 1.0;
    }
    Xs_ = (X.rowwise() - means_).array().rowwise() / scales_.array();
  } else {
    means_ = Eigen::RowVectorXd::Zero(d);
    scales_ = Eigen::RowVectorXd::Ones(d);
    Xs_ = X;
  }

  dual_ = policy == SolverPolicy::Dual || (policy == SolverPolicy::Auto && d > n);
  if (dual_) {
    gram_.noalias() = Xs_ * Xs_.transpose();
    rhs_ = Y;
  } else {
    gram_.noalias() = Xs_.transpose() * Xs_;
    rhs_.noalias() = Xs_.transpose() * Y;
  }
}

Matrix Problem::factor_and_solve(const Matrix& base, const Matrix& rhs, double alpha) const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw SolverError("alpha must be finite and non-negative");
  const double penalty = static_cast<double>(Xs_.rows()) * alpha;
  Matrix system = base;
  system.diagonal().array() += penalty;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) {
    throw SolverError(alpha == 0.0 ? "system is singular at alpha = 0; use a positive alpha"
                                   : "Cholesky factorisation failed");
  }
  if (alpha == 0.0 && llt.rcond() < 1e-12) {
    throw SolverError("system is numerically singular at alpha = 0 (rcond " + std::to_string(llt.rcond()) +
                      "); use a positive alpha");
  }
  return llt.solve(rhs);
}

Matrix Problem::solve(double alpha) const {
  if (dual_) {
    // At alpha = 0 the dual system is nonsingular whenever rank(X) = n, but
    // the primal one is singular whenever d > n.
    if (alpha == 0.0 && Xs_.cols() > Xs_.rows()) {
      throw SolverError("X^T X is singular at alpha = 0 (more columns than rows); use a positive alpha");
    }
    return Xs_.transpose() * factor_and_solve(gram_, rhs_, alpha);
  }
  return factor_and_solve(gram_, rhs_, alpha);
}

Matrix Problem::standardize(const Matrix& X) const {
  if (X.cols() != means_.size()) {
    throw DimensionError("expected " + std::to_string(means_.size()) + " input columns, got " +
                         std::to_string(X.cols()));
  }
  if (!standardized_) return X;
  return (X.rowwise() - means_).array().rowwise() / scales_.array();
}

RidgeFit Problem::make_fit(Matrix weights, double alpha) const {
  return RidgeFit{std::move(weights), standardized_, means_, scales_, alpha};
}

}  // namespace detail

RidgeFit fit(const Matrix& X, const Matrix& Y, double alpha, const RidgeConfig& cfg) {
  detail::Problem problem(X, Y, cfg.standardize, cfg.solver);
  return problem.make_fit(problem.solve(alpha), alpha);
}

Matrix standardize_with(const RidgeFit& f, const Matrix& X) {
  if (X.cols() != f.weights.rows()) {
    throw DimensionError("fit expects " + std::to_string(f.weights.rows()) + " input columns, got " +
                         std::to_string(X.cols()));
  }
  if (!f.standardized) return X;
  return (X.rowwise() - f.input_means).array().rowwise() / f.input_scales.array();
}

Matrix predict(const RidgeFit& f, const Matrix& X) {
  Matrix out;
  out.noalias() = standardize_with(f, X) * f.weights;
  return out;
}

std::vector<int> kfold_assignment(std::size_t n, int k, RngKey key) {
  if (k < 2) throw ValidationError("need at least 2 folds, got " + std::to_string(k));
  if (n < static_cast<std::size_t>(k)) {
    throw DimensionError("fewer rows (" + std::to_string(n) + ") than folds (" + std::to_string(k) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterStream stream(key);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[stream.below(i + 1)]);

  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::vector<int> fold(n);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold[perm[pos++]] = f;
  }
  return fold;
}

AlphaSelection select_alpha(const Matrix& X, const Matrix& Y, const RidgeConfig& cfg, int folds,
                            std::uint64_t seed) {
  cfg.validate();
  if (X.rows() != Y.rows()) {
    throw DimensionError("X has " + std::to_string(X.rows()) + " rows but Y has " + std::to_string(Y.rows()));
  }
  if (cfg.alpha_grid.size() == 1) return AlphaSelection{cfg.alpha_grid.front(), {}};

  const auto n = static_cast<std::size_t>(X.rows());
  const auto assignment = kfold_assignment(n, folds, derive_key(seed, {"select_alpha"}));
  std::vector<double> sse(cfg.alpha_grid.size(), 0.0);

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (std::size_t i = 0; i < n; ++i) (assignment[i] == f ? held : train).push_back(static_cast<Eigen::Index>(i));
    if (train.size() < 2) throw DimensionError("a training fold has fewer than 2 rows");

    const Matrix Xtr = X(train, Eigen::all);
    const Matrix Ytr = Y(train, Eigen::all);
    const Matrix Xval = X(held, Eigen::all);
    const Matrix Yval = Y(held, Eigen::all);

    detail::Problem problem(Xtr, Ytr, cfg.standardize, cfg.solver);
    const Matrix Xval_s = problem.standardize(Xval);
    for (std::size_t a = 0; a < cfg.alpha_grid.size(); ++a) {
      const Matrix pred = Xval_s * problem.solve(cfg.alpha_grid[a]);
      sse[a] += (pred - Yval).squaredNorm();
    }
  }

  AlphaSelection out;
  out.cv_mse.resize(sse.size());
  const double cells = static_cast<double>(n) * static_cast<double>(Y.cols());
  std::size_t best = 0;
  for (std::size_t a = 0; a < sse.size(); ++a) {
    out.cv_mse[a] = sse[a] / cells;
    if (out.cv_mse[a] <= out.cv_mse[best]) best = a;
  }
  out.best_alpha = cfg.alpha_grid[best];
  return out;
}

void save_fit(const RidgeFit& f, const std::filesystem::path& stem) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < f.weights.rows(); ++i) ids.push_back("in_" + std::to_string(i + 1));
  auto weights_path = stem;
  weights_path += ".rdmx";
  save_matrix(LabeledMatrix(std::move(ids), f.weights), weights_path, MatrixFormat::Binary);

  nlohmann::json meta;
  meta["alpha_used"] = f.alpha_used;
  meta["standardized"] = f.standardized;
  meta["input_means"] = std::vector<double>(f.input_means.data(), f.input_means.data() + f.input_means.size());
  meta["input_scales"] = std::vector<double>(f.input_scales.data(), f.input_scales.data() + f.input_scales.size());
  meta["d_in"] = f.weights.rows();
  meta["d_out"] = f.weights.cols();
  auto meta_path = stem;
  meta_path += ".json";
  write_file(meta_path, meta.dump(2) + "\n");
}

RidgeFit load_fit(const std::filesystem::path& stem) {
  auto weights_path = stem;
  weights_path += ".rdmx";
  auto meta_path = stem;
  meta_path += ".json";
  const auto weights = load_matrix(weights_path, MatrixFormat::Binary);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }
  RidgeFit f;
  f.weights = weights.values();
  f.alpha_used = meta.at("alpha_used").get<double>();
  f.standardized = meta.at("standardized").get<bool>();
  const auto means = meta.at("input_means").get<std::vector<double>>();
  const auto scales = meta.at("input_scales").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(means.size()) != f.weights.rows() ||
      static_cast<Eigen::Index>(scales.size()) != f.weights.rows()) {
    throw FormatError(meta_path.string() + ": column statistics do not match weight rows");
  }
  f.input_means = Eigen::Map<const Eigen::RowVectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  f.input_scales = Eigen::Map<const Eigen::RowVectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  if ((f.input_scales.array() <= 0.0).any()) throw FormatError(meta_path.string() + ": input_scales must be positive");
  return f;
}

}  // namespace decodekit::ridge
