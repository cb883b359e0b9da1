#include "decodekit/decoder.hpp"

#include "decodekit/errors.hpp"
#include "decodekit/parallel.hpp"
#include "decodekit/random.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

namespace decodekit::decoder {

std::string_view to_string(Mode m) { return m == Mode::InSample ? "in_sample" : "cross_validated"; }

Mode mode_from_string(std::string_view s) {
  if (s == "cross_validated") return Mode::CrossValidated;
  if (s == "in_sample") return Mode::InSample;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected cross_validated or in_sample)");
}

std::vector<int> outer_folds(const std::vector<std::string>& stimulus_ids, int k, std::uint64_t seed,
                             std::string_view subject_id, std::string_view model_id) {
  const std::size_t n = stimulus_ids.size();
  std::vector<std::size_t> sorted(n);
  std::iota(sorted.begin(), sorted.end(), std::size_t{0});
  std::sort(sorted.begin(), sorted.end(),
            [&](std::size_t a, std::size_t b) { return stimulus_ids[a] < stimulus_ids[b]; });
  // Fold of each position in sorted-id order, then mapped back to rows.
  const auto by_sorted = ridge::kfold_assignment(n, k, derive_key(seed, {"outer_folds", subject_id, model_id}));
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[sorted[pos]] = by_sorted[pos];
  return fold;
}

std::uint64_t inner_seed(std::uint64_t seed, std::string_view subject_id, std::string_view model_id, int fold) {
  return derive_key(seed, {"inner_folds", subject_id, model_id, std::to_string(fold)}).value;
}

PredictionSet train_and_predict(const DecoderJob& job) {
  const auto& ids = job.X.stimulus_ids();
  if (ids != job.Y.stimulus_ids()) {
    throw ValidationError("subject and model matrices are not aligned to the same stimulus order");
  }
  const Matrix& X = job.X.values();
  const Matrix& Y = job.Y.values();
  const auto n = X.rows();

  PredictionSet out{job.subject_id, job.model_id, job.Y, {}, {}, job.mode};
  Matrix predicted(n, Y.cols());

  if (job.mode == Mode::InSample) {
    const auto sel = ridge::select_alpha(X, Y, job.cfg, job.cfg.cv_folds,
                                         inner_seed(job.seed, job.subject_id, job.model_id, -1));
    predicted = ridge::predict(ridge::fit(X, Y, sel.best_alpha, job.cfg), X);
    out.fold_alphas = {sel.best_alpha};
  } else {
    if (job.folds < 2 || job.folds > n) {
      throw ValidationError("folds must be in [2, n]; got " + std::to_string(job.folds) + " for n = " +
                            std::to_string(n));
    }
    out.fold_of_row = outer_folds(ids, job.folds, job.seed, job.subject_id, job.model_id);
    out.fold_alphas.resize(static_cast<std::size_t>(job.folds));
    for (int f = 0; f < job.folds; ++f) {
      std::vector<Eigen::Index> train, held;
      for (Eigen::Index i = 0; i < n; ++i) {
        (out.fold_of_row[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
      }
      const Matrix Xtr = X(train, Eigen::all);
      const Matrix Ytr = Y(train, Eigen::all);
      const auto sel = ridge::select_alpha(Xtr, Ytr, job.cfg, job.cfg.cv_folds,
                                           inner_seed(job.seed, job.subject_id, job.model_id, f));
      const auto model = ridge::fit(Xtr, Ytr, sel.best_alpha, job.cfg);
      predicted(held, Eigen::all) = ridge::predict(model, X(held, Eigen::all));
      out.fold_alphas[static_cast<std::size_t>(f)] = sel.best_alpha;
    }
  }
  out.predictions = LabeledMatrix(ids, std::move(predicted));
  return out;
}

JobError::JobError(std::string subject_id, std::string model_id, const std::string& cause)
    : Error("decoder for subject '" + subject_id + "', model '" + model_id + "' failed: " + cause),
      subject_id_(std::move(subject_id)),
      model_id_(std::move(model_id)) {}

std::vector<PredictionSet> run_grid(const Experiment& ex, const GridOptions& opts) {
  struct Pair {
    std::size_t subject;
    std::size_t model;
  };
  std::vector<Pair> pairs;
  for (std::size_t s = 0; s < ex.subjects.size(); ++s)
    for (std::size_t m = 0; m < ex.models.size(); ++m) pairs.push_back({s, m});

  std::vector<std::optional<PredictionSet>> results(pairs.size());
  parallel_for(pairs.size(), opts.workers, [&](std::size_t i) {
    const auto& subject = ex.subjects[pairs[i].subject];
    const auto& model = ex.models[pairs[i].model];
    DecoderJob job{subject.id, model.id, subject.matrix, model.matrix, ex.manifest.eval.ridge,
                   ex.manifest.eval.folds, ex.manifest.eval.seed, opts.mode};
    try {
      results[i] = train_and_predict(job);
    } catch (const std::exception& e) {
      throw JobError(subject.id, model.id, e.what());
    }
  });

  std::vector<PredictionSet> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::vector<PredictionSet> run_grid(const ExperimentManifest& manifest, const GridOptions& opts) {
  return run_grid(load_experiment(manifest), opts);
}

std::filesystem::path prediction_relpath(std::string_view subject_id, std::string_view model_id) {
  return std::filesystem::path(subject_id) / (std::string(model_id) + ".rdmx");
}

nlohmann::json prediction_metadata(const PredictionSet& p) {
  return {
      {"subject_id", p.subject_id},
      {"model_id", p.model_id},
      {"mode", std::string(to_string(p.mode))},
      {"fold_alphas", p.fold_alphas},
      {"fold_of_row", p.fold_of_row},
      {"file", prediction_relpath(p.subject_id, p.model_id).generic_string()},
  };
}

}  // namespace decodekit::decoder
