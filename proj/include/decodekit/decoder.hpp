#pragma once

#include "decodekit/labeled_matrix.hpp"
#include "decodekit/manifest.hpp"
#include "decodekit/ridge.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace decodekit::decoder {

enum class Mode {
  CrossValidated,  ///< every prediction comes from a fit that excluded its row
  InSample,        ///< one fit on all rows, predictions on the same rows
};

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

/// One subject -> model decoding problem. X and Y must share stimulus order.
struct DecoderJob {
  std::string subject_id;
  std::string model_id;
  LabeledMatrix X;  ///< n x voxels
  LabeledMatrix Y;  ///< n x representation dims
  ridge::RidgeConfig cfg;
  int folds = 12;
  std::uint64_t seed = 0;
  Mode mode = Mode::CrossValidated;
};

struct PredictionSet {
  std::string subject_id;
  std::string model_id;
  LabeledMatrix predictions;       ///< rows in canonical stimulus order
  std::vector<double> fold_alphas; ///< alpha chosen for each outer fold (one entry in-sample)
  std::vector<int> fold_of_row;    ///< outer fold of each row; empty in-sample
  Mode mode = Mode::CrossValidated;
};

/// Outer fold of each row of `stimulus_ids`: ids are sorted, shuffled by a
/// generator keyed on (seed, subject_id, model_id) and split contiguously.
std::vector<int> outer_folds(const std::vector<std::string>& stimulus_ids, int k, std::uint64_t seed,
                             std::string_view subject_id, std::string_view model_id);

/// Seed for the inner alpha search of one outer fold.
std::uint64_t inner_seed(std::uint64_t seed, std::string_view subject_id, std::string_view model_id,
                         int fold);

/// Trains the decoder and returns out-of-fold (or in-sample) predictions.
/// Alpha is selected by an inner cross-validation on each outer training set.
PredictionSet train_and_predict(const DecoderJob& job);

struct GridOptions {
  Mode mode = Mode::CrossValidated;
  unsigned workers = 1;
};

/// Raised when one job of a grid fails; identifies the pair.
class JobError : public Error {
 public:
  JobError(std::string subject_id, std::string model_id, const std::string& cause);
  const std::string& subject_id() const noexcept { return subject_id_; }
  const std::string& model_id() const noexcept { return model_id_; }

 private:
  std::string subject_id_;
  std::string model_id_;
};

/// One PredictionSet per (subject, model), subject-major in manifest order.
std::vector<PredictionSet> run_grid(const Experiment& experiment, const GridOptions& opts);
std::vector<PredictionSet> run_grid(const ExperimentManifest& manifest, const GridOptions& opts);

/// `<subject_id>/<model_id>.rdmx`, relative to a predictions directory.
std::filesystem::path prediction_relpath(std::string_view subject_id, std::string_view model_id);

/// Metadata for one pair as stored in the decode run document.
nlohmann::json prediction_metadata(const PredictionSet& p);

}  // namespace decodekit::decoder
