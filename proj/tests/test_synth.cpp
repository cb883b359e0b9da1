#include "decodekit/decoder.hpp"
#include "decodekit/errors.hpp"
#include "decodekit/matrix_io.hpp"
#include "decodekit/rankeval.hpp"
#include "decodekit/synth.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace decodekit;
using namespace decodekit::synth;

namespace {

WorldSpec small_spec() {
  WorldSpec s;
  s.n_stimuli = 384;
  s.latent_dim = 8;
  s.n_subjects = 2;
  s.voxels_per_subject = 20;
  s.models = {{"full", 8, 1.0}, {"half", 6, 0.5}, {"none", 8, 0.0}};
  s.seed = 42;
  return s;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

std::string message_of(const WorldSpec& s) {
  try {
    s.validate();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("ids") {
  CHECK(subject_id(0) == "sub-01");
  CHECK(subject_id(11) == "sub-12");
  CHECK(stimulus_id(0) == "stim-0001");
  CHECK(stimulus_id(383) == "stim-0384");
}

TEST_CASE("shapes and labels") {
  const auto w = generate(small_spec());
  REQUIRE(w.subjects.size() == 2);
  REQUIRE(w.models.size() == 3);
  CHECK(w.subjects[1].id == "sub-02");
  CHECK(w.subjects[0].matrix.rows() == 384);
  CHECK(w.subjects[0].matrix.cols() == 20);
  CHECK(w.models[1].matrix.cols() == 6);
  CHECK(w.models[0].matrix.stimulus_ids().front() == "stim-0001");
  CHECK(w.truth.latent.rows() == 384);
  CHECK(w.truth.latent.cols() == 8);
}

TEST_CASE("representation columns have unit variance") {
  const auto w = generate(small_spec());
  for (const auto& m : w.models) {
    const Matrix& Y = m.matrix.values();
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double mean = Y.col(c).mean();
      const double var = (Y.col(c).array() - mean).square().sum() / static_cast<double>(Y.rows() - 1);
      CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero shared fraction gives unrelated representations") {
  // Under independence a sample correlation at n = 384 is ~N(0, 1/383), so a
  // single pair reaches |r| >= 0.2 with probability ~9e-5, and the root mean
  // square over many pairs converges to 1/sqrt(383) = 0.0511.
  double sum_sq = 0;
  int pairs = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto spec = small_spec();
    spec.seed = seed;
    const auto w = generate(spec);
    const Matrix& Y = w.models[2].matrix.values();
    const Matrix& X0 = w.subjects[0].matrix.values();
    CHECK(std::abs(correlation(X0.col(0), Y.col(0))) < 0.2);
    for (const auto& s : w.subjects) {
      const Matrix& X = s.matrix.values();
      for (Eigen::Index a = 0; a < X.cols(); ++a)
        for (Eigen::Index b = 0; b < Y.cols(); ++b) {
          const double r = correlation(X.col(a), Y.col(b));
          sum_sq += r * r;
          ++pairs;
        }
    }
  }
  const double rms = std::sqrt(sum_sq / pairs);
  MESSAGE("rms correlation " << rms);
  CHECK(rms > 0.046);
  CHECK(rms < 0.056);

  // The fully shared model, by contrast, is visibly related to the subjects.
  const auto w = generate(small_spec());
  const Matrix& F = w.models[0].matrix.values();
  double best = 0;
  for (Eigen::Index a = 0; a < 20; ++a)
    for (Eigen::Index b = 0; b < F.cols(); ++b)
      best = std::max(best, std::abs(correlation(w.subjects[0].matrix.values().col(a), F.col(b))));
  CHECK(best > 0.3);
}

TEST_CASE("generation is deterministic and keyed by entity") {
  const auto a = generate(small_spec());
  const auto b = generate(small_spec());
  for (std::size_t k = 0; k < 3; ++k) CHECK(encode_binary(a.models[k].matrix) == encode_binary(b.models[k].matrix));
  for (std::size_t j = 0; j < 2; ++j) CHECK(encode_binary(a.subjects[j].matrix) == encode_binary(b.subjects[j].matrix));

  auto more = small_spec();
  more.models.insert(more.models.begin(), {"extra", 4, 0.3});
  more.n_subjects = 3;
  const auto c = generate(more);
  CHECK(encode_binary(c.models[1].matrix) == encode_binary(a.models[0].matrix));
  CHECK(encode_binary(c.models[3].matrix) == encode_binary(a.models[2].matrix));
  CHECK(encode_binary(c.subjects[1].matrix) == encode_binary(a.subjects[1].matrix));

  auto reseeded = small_spec();
  reseeded.seed = 43;
  CHECK(encode_binary(generate(reseeded).models[0].matrix) != encode_binary(a.models[0].matrix));
}

TEST_CASE("noise-free fully shared representations are linear in the latent") {
  auto s = small_spec();
  s.brain_noise_sd = 0.0;
  s.rep_noise_sd = 0.0;
  const auto w = generate(s);
  const Matrix& Z = w.truth.latent;
  const Matrix& Y = w.models[0].matrix.values();
  const Matrix& B = w.truth.models[0].shared_loading;
  REQUIRE(B.rows() == B.cols());
  CHECK(Eigen::FullPivLU<Matrix>(B).isInvertible());
  const Matrix coef = Z.colPivHouseholderQr().solve(Y);
  CHECK((Z * coef - Y).norm() / Y.norm() < 1e-8);
  // Subjects are exact linear readouts too.
  const Matrix& X = w.subjects[0].matrix.values();
  CHECK((Z * w.truth.subjects[0].readout - X).norm() / X.norm() < 1e-12);
}

TEST_CASE("spec validation names the field") {
  auto s = small_spec();
  s.models[1].shared_fraction = 1.5;
  CHECK(message_of(s).find("models[1].shared_fraction") != std::string::npos);
  s = small_spec();
  s.n_stimuli = 1;
  CHECK(message_of(s).find("n_stimuli") != std::string::npos);
  s = small_spec();
  s.brain_noise_sd = -1;
  CHECK(message_of(s).find("brain_noise_sd") != std::string::npos);
  s = small_spec();
  s.models[0].rep_dim = 0;
  CHECK(message_of(s).find("models[0].rep_dim") != std::string::npos);
  s = small_spec();
  s.models[2].id = "full";
  CHECK_FALSE(message_of(s).empty());
  CHECK(message_of(small_spec()).empty());
}

TEST_CASE("spec json round trip") {
  const auto s = small_spec();
  const auto back = spec_from_json(spec_to_json(s));
  CHECK(back.n_stimuli == s.n_stimuli);
  CHECK(back.models.size() == 3);
  CHECK(back.models[1].shared_fraction == 0.5);
  CHECK(back.seed == 42);
  CHECK(spec_to_json(back) == spec_to_json(s));
}

TEST_CASE("expected outcomes") {
  auto s = small_spec();
  auto out = expected_outcome(s);
  CHECK(out[0].outcome == Outcome::BelowChance);  // noisy
  CHECK(out[1].outcome == Outcome::BelowChance);
  CHECK(out[2].outcome == Outcome::NearChance);

  s.brain_noise_sd = 0;
  s.rep_noise_sd = 0;
  s.models = {{"a", 64, 1.0}, {"b", 97, 1.0}, {"c", 8, 0.5}};
  out = expected_outcome(s);
  CHECK(out[0].outcome == Outcome::NearZero);
  CHECK(out[1].outcome == Outcome::BelowChance);  // 384 < 4 * 97
  CHECK(out[2].outcome == Outcome::BelowChance);
  CHECK(to_string(Outcome::NearChance) == "near_chance");
  CHECK(expected_outcome_json(s).dump().find("near_zero") != std::string::npos);
}

TEST_CASE("an unshared model decodes at chance for most seeds") {
  int within = 0;
  std::ostringstream log;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    WorldSpec s;
    s.n_stimuli = 384;
    s.latent_dim = 8;
    s.n_subjects = 1;
    s.voxels_per_subject = 60;
    s.models = {{"none", 16, 0.0}};
    s.seed = seed;
    const auto w = generate(s);
    decoder::DecoderJob job{w.subjects[0].id, "none", w.subjects[0].matrix, w.models[0].matrix, {}, 12, seed};
    job.cfg.cv_folds = 5;
    const std::vector<decoder::PredictionSet> sets{decoder::train_and_predict(job)};
    const auto r = rankeval::mean_average_rank(sets, w.models[0].matrix, {1000, 0.95, seed});
    log << "seed " << seed << ": MAR " << r.mar << " CI [" << r.ci_low << ", " << r.ci_high << "]\n";
    within += r.ci_low <= 191.5 && 191.5 <= r.ci_high ? 1 : 0;
  }
  INFO(log.str());
  CHECK(within >= 9);
}
