#include "decodekit/rankeval.hpp"

#include "decodekit/errors.hpp"
#include "decodekit/matrix_io.hpp"
#include "decodekit/random.hpp"

#include <algorithm>
#include <cmath>

namespace decodekit::rankeval {
namespace {

// All distances go through these helpers in a fixed accumulation order, so
// identical candidate rows always produce bit-identical distances and exact
// ties are detected reliably.
double dot(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double norm(const double* a, Eigen::Index d) { return std::sqrt(dot(a, a, d)); }

double distance(double uv, double nu, double nv) { return std::clamp(1.0 - uv / (nu * nv), 0.0, 2.0); }

// Candidates stored one per column so each is contiguous.
struct CandidateSet {
  Matrix columns;
  std::vector<double> norms;

  explicit CandidateSet(const Matrix& rows) : columns(rows.transpose()), norms(static_cast<std::size_t>(rows.rows())) {
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
      norms[static_cast<std::size_t>(j)] = norm(columns.col(j).data(), columns.rows());
      if (norms[static_cast<std::size_t>(j)] == 0.0) {
        throw ValidationError("candidate " + std::to_string(j) + " is a zero vector");
      }
    }
  }

  double rank(const double* prediction, Eigen::Index true_index) const {
    const Eigen::Index d = columns.rows();
    const double np = norm(prediction, d);
    if (np == 0.0) throw ValidationError("prediction is a zero vector");
    auto dist = [&](Eigen::Index j) {
      return distance(dot(prediction, columns.col(j).data(), d), np, norms[static_cast<std::size_t>(j)]);
    };
    const double target = dist(true_index);
    std::size_t closer = 0;
    std::size_t tied = 0;
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
      if (j == true_index) continue;
      const double dj = dist(j);
      if (dj < target) {
        ++closer;
      } else if (dj == target) {
        ++tied;
      }
    }
    return static_cast<double>(closer) + 0.5 * static_cast<double>(tied);
  }
};

}  // namespace

double cosine_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) throw DimensionError("cosine_distance: vectors differ in length");
  const double nu = norm(u.data(), u.size());
  const double nv = norm(v.data(), v.size());
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine_distance: zero vector");
  return distance(dot(u.data(), v.data(), u.size()), nu, nv);
}

double rank_score(const Eigen::VectorXd& prediction, const Matrix& candidates, Eigen::Index true_index) {
  if (candidates.rows() < 2) throw ValidationError("rank_score needs at least 2 candidates");
  if (true_index < 0 || true_index >= candidates.rows()) throw ValidationError("true_index out of range");
  if (prediction.size() != candidates.cols()) throw DimensionError("prediction and candidates differ in dimension");
  return CandidateSet(candidates).rank(prediction.data(), true_index);
}

std::vector<double> rank_scores(const Matrix& predictions, const Matrix& candidates) {
  if (candidates.rows() < 2) throw ValidationError("rank_scores needs at least 2 candidates");
  if (predictions.rows() != candidates.rows() || predictions.cols() != candidates.cols()) {
    throw DimensionError("predictions and candidates differ in shape");
  }
  const CandidateSet set(candidates);
  const Matrix by_column = predictions.transpose();
  std::vector<double> out(static_cast<std::size_t>(predictions.rows()));
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    try {
      out[static_cast<std::size_t>(i)] = set.rank(by_column.col(i).data(), i);
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

double mean_of_row_means(const Matrix& stats) {
  if (stats.rows() == 0 || stats.cols() == 0) throw ValidationError("empty statistics matrix");
  double total = 0.0;
  for (Eigen::Index s = 0; s < stats.rows(); ++s) {
    double row = 0.0;
    for (Eigen::Index i = 0; i < stats.cols(); ++i) row += stats(s, i);
    total += row / static_cast<double>(stats.cols());
  }
  return total / static_cast<double>(stats.rows());
}

std::pair<double, double> bootstrap_ci(const Matrix& stats, int replicates, double level, std::uint64_t seed) {
  if (stats.rows() == 0 || stats.cols() == 0) throw ValidationError("bootstrap_ci: empty input");
  if (replicates < 1) throw ValidationError("bootstrap_ci: need at least one replicate");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap_ci: level must be in (0, 1)");

  const auto n = static_cast<std::uint64_t>(stats.cols());
  const RngKey key = derive_key(seed, {"bootstrap"});
  std::vector<double> reps(static_cast<std::size_t>(replicates));
  std::vector<Eigen::Index> draw(static_cast<std::size_t>(n));
  for (int b = 0; b < replicates; ++b) {
    CounterStream stream(key, static_cast<std::uint64_t>(b));
    for (auto& idx : draw) idx = static_cast<Eigen::Index>(stream.below(n));
    double total = 0.0;
    for (Eigen::Index s = 0; s < stats.rows(); ++s) {
      double row = 0.0;
      for (auto idx : draw) row += stats(s, idx);
      total += row / static_cast<double>(n);
    }
    reps[static_cast<std::size_t>(b)] = total / static_cast<double>(stats.rows());
  }
  std::sort(reps.begin(), reps.end());

  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(reps.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= reps.size()) return reps.back();
    return reps[lo] + (h - static_cast<double>(lo)) * (reps[lo + 1] - reps[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

RankReport mean_average_rank(std::span<const decoder::PredictionSet> predictions, const LabeledMatrix& candidates,
                             const BootstrapSettings& bootstrap) {
  if (predictions.empty()) throw ValidationError("mean_average_rank: no subjects");
  RankReport report;
  report.model_id = predictions.front().model_id;
  report.stimulus_ids = candidates.stimulus_ids();
  const auto n = candidates.rows();
  if (n < 2) throw ValidationError("mean_average_rank: need at least 2 candidates");

  Matrix stats(static_cast<Eigen::Index>(predictions.size()), n);
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    const auto& p = predictions[s];
    if (p.model_id != report.model_id) {
      throw ValidationError("mean_average_rank: prediction sets mix models '" + report.model_id + "' and '" +
                            p.model_id + "'");
    }
    if (p.predictions.stimulus_ids() != candidates.stimulus_ids()) {
      throw ValidationError("predictions for subject '" + p.subject_id + "' are not aligned with the candidates");
    }
    SubjectRanks sr;
    sr.subject_id = p.subject_id;
    try {
      sr.ranks = rank_scores(p.predictions.values(), candidates.values());
    } catch (const Error& e) {
      throw ValidationError("subject '" + p.subject_id + "': " + e.what());
    }
    for (Eigen::Index i = 0; i < n; ++i) stats(static_cast<Eigen::Index>(s), i) = sr.ranks[static_cast<std::size_t>(i)];
    sr.average = mean_of_row_means(stats.row(static_cast<Eigen::Index>(s)));
    report.per_subject.push_back(std::move(sr));
  }

  report.mar = mean_of_row_means(stats);
  std::tie(report.ci_low, report.ci_high) =
      bootstrap_ci(stats, bootstrap.replicates, bootstrap.level, bootstrap.seed);
  report.ci_low = std::min(report.ci_low, report.mar);
  report.ci_high = std::max(report.ci_high, report.mar);
  report.chance_level = static_cast<double>(n - 1) / 2.0;
  report.bootstrap_replicates = bootstrap.replicates;
  report.ci_level = bootstrap.level;
  return report;
}

nlohmann::json report_to_json(const RankReport& r) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : r.per_subject) {
    subjects.push_back({{"subject_id", s.subject_id}, {"average_rank", s.average}, {"ranks", s.ranks}});
  }
  return {
      {"model_id", r.model_id},
      {"n_stimuli", r.stimulus_ids.size()},
      {"n_subjects", r.per_subject.size()},
      {"mar", r.mar},
      {"ci_low", r.ci_low},
      {"ci_high", r.ci_high},
      {"ci_level", r.ci_level},
      {"bootstrap_replicates", r.bootstrap_replicates},
      {"chance_level", r.chance_level},
      {"stimulus_ids", r.stimulus_ids},
      {"per_subject", subjects},
  };
}

std::string ranks_csv(std::span<const RankReport> reports) {
  std::string out = "model_id,subject_id,stimulus_id,rank\n";
  for (const auto& r : reports) {
    for (const auto& s : r.per_subject) {
      for (std::size_t i = 0; i < s.ranks.size(); ++i) {
        out += r.model_id + ',' + s.subject_id + ',' + r.stimulus_ids[i] + ',' + format_double(s.ranks[i]) + '\n';
      }
    }
  }
  return out;
}

std::string summary_csv(std::span<const RankReport> reports) {
  std::vector<const RankReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RankReport* a, const RankReport* b) {
    return a->mar != b->mar ? a->mar < b->mar : a->model_id < b->model_id;
  });
  std::string out = "model_id,mar,ci_low,ci_high,chance_level,n_subjects,n_stimuli\n";
  for (const auto* r : sorted) {
    out += r->model_id + ',' + format_double(r->mar) + ',' + format_double(r->ci_low) + ',' +
           format_double(r->ci_high) + ',' + format_double(r->chance_level) + ',' +
           std::to_string(r->per_subject.size()) + ',' + std::to_string(r->stimulus_ids.size()) + '\n';
  }
  return out;
}

}  // namespace decodekit::rankeval
