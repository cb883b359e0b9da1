#include "decodekit/crossmodel.hpp"

#include "decodekit/errors.hpp"
#include "decodekit/matrix_io.hpp"
#include "decodekit/parallel.hpp"
#include "decodekit/random.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace decodekit::crossmodel {

double r2_multioutput(const Matrix& y_true, const Matrix& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw DimensionError("r2_multioutput: shapes differ");
  }
  if (y_true.rows() < 2) throw DimensionError("r2_multioutput: need at least 2 rows");
  const Eigen::RowVectorXd means = y_true.colwise().mean();
  const double total = (y_true.rowwise() - means).squaredNorm();
  if (total == 0.0) throw ValidationError("r2_multioutput: Y_true has zero total variance");
  return 1.0 - (y_true - y_pred).squaredNorm() / total;
}

Matrix standardize_columns(const Matrix& m) {
  Matrix out = m.rowwise() - m.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows()));
    if (sd > 0.0) out.col(c) /= sd;
  }
  return out;
}

PredictivityMatrix pairwise_predictivity(std::span<const NamedMatrix> models, const PredictivityOptions& opts) {
  opts.cfg.validate();
  if (models.empty()) throw ValidationError("pairwise_predictivity: no models");
  const auto& ids = models.front().matrix.stimulus_ids();
  std::vector<LabeledMatrix> standardized;
  for (const auto& m : models) {
    if (m.matrix.stimulus_ids() != ids) {
      throw ValidationError("model '" + m.id + "' is not aligned with model '" + models.front().id + "'");
    }
    standardized.emplace_back(ids, standardize_columns(m.matrix.values()));
  }

  const auto M = static_cast<Eigen::Index>(models.size());
  PredictivityMatrix out;
  for (const auto& m : models) out.model_ids.push_back(m.id);
  out.values.resize(M, M);
  out.alphas.resize(M, M);
  out.mode = opts.mode;
  out.cfg = opts.cfg;
  out.folds = opts.mode == decoder::Mode::CrossValidated ? opts.folds : 0;

  parallel_for(static_cast<std::size_t>(M * M), opts.workers, [&](std::size_t cell) {
    const auto i = static_cast<Eigen::Index>(cell) / M;
    const auto j = static_cast<Eigen::Index>(cell) % M;
    const auto& src = models[static_cast<std::size_t>(i)];
    const auto& dst = models[static_cast<std::size_t>(j)];
    const Matrix& X = standardized[static_cast<std::size_t>(i)].values();
    const Matrix& Y = standardized[static_cast<std::size_t>(j)].values();
    try {
      if (opts.mode == decoder::Mode::InSample) {
        const auto seed = derive_key(opts.seed, {"crossmodel", src.id, dst.id}).value;
        const auto sel = ridge::select_alpha(X, Y, opts.cfg, opts.cfg.cv_folds, seed);
        out.values(i, j) = r2_multioutput(Y, ridge::predict(ridge::fit(X, Y, sel.best_alpha, opts.cfg), X));
        out.alphas(i, j) = sel.best_alpha;
      } else {
        decoder::DecoderJob job{src.id, dst.id, standardized[static_cast<std::size_t>(i)],
                                standardized[static_cast<std::size_t>(j)], opts.cfg, opts.folds, opts.seed,
                                decoder::Mode::CrossValidated};
        const auto pred = decoder::train_and_predict(job);
        out.values(i, j) = r2_multioutput(Y, pred.predictions.values());
        double log_sum = 0.0;
        for (double a : pred.fold_alphas) log_sum += std::log(a);
        out.alphas(i, j) = std::exp(log_sum / static_cast<double>(pred.fold_alphas.size()));
      }
    } catch (const std::exception& e) {
      throw Error("predicting model '" + dst.id + "' from model '" + src.id + "': " + e.what());
    }
  });
  return out;
}

std::string predictivity_csv(const PredictivityMatrix& p) {
  std::string out = "model_id";
  for (const auto& id : p.model_ids) out += ',' + id;
  out += '\n';
  for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
    out += p.model_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p.values.cols(); ++j) out += ',' + format_double(p.values(i, j));
    out += '\n';
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string predictivity_svg(const PredictivityMatrix& p, bool reproducible) {
  constexpr int kCell = 60;
  constexpr int kPad = 20;
  std::size_t longest = 0;
  for (const auto& id : p.model_ids) longest = std::max(longest, id.size());
  const int label = std::max(60, static_cast<int>(longest) * 7 + 12);
  const int M = static_cast<int>(p.model_ids.size());
  const int width = label + M * kCell + kPad;
  const int height = label + M * kCell + kPad;

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (!reproducible) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    svg += std::string("<metadata>generated ") + stamp + "</metadata>\n";
  }
  svg += "<title>r2 of predicting column model from row model (" + std::string(decoder::to_string(p.mode)) +
         ")</title>\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"white\"/>\n";

  for (int i = 0; i < M; ++i) {
    const int y = label + i * kCell;
    svg += "<text x=\"" + std::to_string(label - 6) + "\" y=\"" + std::to_string(y + kCell / 2 + 4) +
           "\" text-anchor=\"end\">" + xml_escape(p.model_ids[static_cast<std::size_t>(i)]) + "</text>\n";
  }
  for (int j = 0; j < M; ++j) {
    const int x = label + j * kCell + kCell / 2;
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(label - 6) +
           "\" text-anchor=\"start\" transform=\"rotate(-45 " + std::to_string(x) + " " + std::to_string(label - 6) +
           ")\">" + xml_escape(p.model_ids[static_cast<std::size_t>(j)]) + "</text>\n";
  }
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const double v = p.values(i, j);
      const double shade = std::clamp(v, 0.0, 1.0);
      const int gray = static_cast<int>(std::lround(255.0 * (1.0 - shade)));
      const int x = label + j * kCell;
      const int y = label + i * kCell;
      const std::string rgb = std::to_string(gray);
      svg += "<rect class=\"cell\" x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
             std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) + "\" fill=\"rgb(" + rgb + "," + rgb +
             "," + rgb + ")\" stroke=\"#888\" stroke-width=\"0.5\"/>\n";
      svg += "<text x=\"" + std::to_string(x + kCell / 2) + "\" y=\"" + std::to_string(y + kCell / 2 + 4) +
             "\" text-anchor=\"middle\" fill=\"" + (shade > 0.5 ? "white" : "black") + "\">" + fixed(v, 2) +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

nlohmann::json predictivity_metadata(const PredictivityMatrix& p) {
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json alphas = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
    std::vector<double> vr, ar;
    for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
      vr.push_back(p.values(i, j));
      ar.push_back(p.alphas(i, j));
    }
    values.push_back(vr);
    alphas.push_back(ar);
  }
  return {
      {"model_ids", p.model_ids},
      {"mode", std::string(decoder::to_string(p.mode))},
      {"folds", p.folds},
      {"representation_preprocessing", "column z-score"},
      {"alpha_policy",
       {{"alpha_grid", p.cfg.alpha_grid},
        {"selection", "k-fold cross-validated MSE, ties to larger alpha"},
        {"inner_folds", p.cfg.cv_folds},
        {"standardize_inputs", p.cfg.standardize},
        {"solver", std::string(ridge::to_string(p.cfg.solver))}}},
      {"alphas", alphas},
      {"r2", values},
  };
}

}  // namespace decodekit::crossmodel
