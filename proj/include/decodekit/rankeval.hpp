#pragma once

#include "decodekit/decoder.hpp"
#include "decodekit/labeled_matrix.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace decodekit::rankeval {

/// 1 - cos(u, v), clamped to [0, 2]. Zero vectors are rejected.
double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// 0-based rank of candidate `true_index` when candidates (rows) are ordered
/// by cosine distance to `prediction`. Ties take the mid-rank:
///   #{j : d_j < d_true} + 0.5 * #{j != true : d_j == d_true}
double rank_score(const Eigen::VectorXd& prediction, const Matrix& candidates, Eigen::Index true_index);

/// rank_score for every row i of `predictions` against all rows of
/// `candidates`, with row i as the true candidate.
std::vector<double> rank_scores(const Matrix& predictions, const Matrix& candidates);

struct SubjectRanks {
  std::string subject_id;
  std::vector<double> ranks;  ///< one per stimulus, canonical order
  double average = 0.0;
};

struct RankReport {
  std::string model_id;
  std::vector<std::string> stimulus_ids;
  std::vector<SubjectRanks> per_subject;
  double mar = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double chance_level = 0.0;  ///< (n - 1) / 2
  int bootstrap_replicates = 0;
  double ci_level = 0.95;
};

struct BootstrapSettings {
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Percentile bootstrap interval for the mean average rank. `stats` is
/// subjects x stimuli. Each replicate resamples stimulus indices with
/// replacement (shared across subjects) and recomputes the mean over
/// subjects of per-subject means. Quantiles use linear interpolation between
/// order statistics.
std::pair<double, double> bootstrap_ci(const Matrix& stats, int replicates, double level,
                                       std::uint64_t seed);

/// Mean over subjects of the mean over stimuli (rows of `stats`).
double mean_of_row_means(const Matrix& stats);

/// Scores every prediction set of one model against the model's candidate
/// representations. The returned interval is widened to include the point
/// estimate if the percentile bounds happen to exclude it.
RankReport mean_average_rank(std::span<const decoder::PredictionSet> predictions,
                             const LabeledMatrix& candidates, const BootstrapSettings& bootstrap = {});

nlohmann::json report_to_json(const RankReport& r);

/// Rows `model_id,subject_id,stimulus_id,rank`, header included.
std::string ranks_csv(std::span<const RankReport> reports);

/// One row per model sorted by MAR ascending (ties by model id), header
/// `model_id,mar,ci_low,ci_high,chance_level,n_subjects,n_stimuli`.
std::string summary_csv(std::span<const RankReport> reports);

}  // namespace decodekit::rankeval
