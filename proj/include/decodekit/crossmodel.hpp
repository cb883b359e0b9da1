#pragma once

#include "decodekit/decoder.hpp"
#include "decodekit/labeled_matrix.hpp"
#include "decodekit/manifest.hpp"
#include "decodekit/ridge.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace decodekit::crossmodel {

/// Pooled coefficient of determination over all cells:
///   1 - sum (y - yhat)^2 / sum (y - colmean(y))^2
double r2_multioutput(const Matrix& y_true, const Matrix& y_pred);

struct PredictivityMatrix {
  std::vector<std::string> model_ids;
  Matrix values;  ///< (i, j): r^2 of predicting model j from model i
  Matrix alphas;  ///< alpha used for each cell (geometric mean over folds when cross-validated)
  decoder::Mode mode = decoder::Mode::InSample;
  ridge::RidgeConfig cfg;
  int folds = 0;
};

struct PredictivityOptions {
  ridge::RidgeConfig cfg;
  decoder::Mode mode = decoder::Mode::InSample;
  int folds = 12;  ///< outer folds in cross-validated mode
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Column z-scores (population standard deviation); constant columns are only
/// centred.
Matrix standardize_columns(const Matrix& m);

/// Regresses every model's (column-standardised) representations onto every
/// model's, including itself. All matrices must share stimulus order.
PredictivityMatrix pairwise_predictivity(std::span<const NamedMatrix> models,
                                         const PredictivityOptions& opts);

/// Header `model_id,<id_1>,...,<id_M>`, then one row per source model.
std::string predictivity_csv(const PredictivityMatrix& p);

/// Grayscale heatmap, white = 0 and black = 1 (values clamped to [0, 1]),
/// with the value printed in each cell. Layout in docs/formats.md.
std::string predictivity_svg(const PredictivityMatrix& p, bool reproducible);

nlohmann::json predictivity_metadata(const PredictivityMatrix& p);

}  // namespace decodekit::crossmodel
