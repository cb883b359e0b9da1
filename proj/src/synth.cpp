#include "decodekit/synth.hpp"

#include "decodekit/errors.hpp"
#include "decodekit/random.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace decodekit::synth {
namespace {

using nlohmann::json;

Matrix normal_block(Eigen::Index rows, Eigen::Index cols, RngKey key, double scale) {
  const CounterRng rng(key);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal(static_cast<std::uint64_t>(r * cols + c));
  return m;
}

template <typename T>
T field(const json& doc, const char* name, T fallback) {
  if (!doc.contains(name)) return fallback;
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

std::string subject_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sub-%02d", index + 1);
  return buf;
}

std::string stimulus_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "stim-%04d", index + 1);
  return buf;
}

void WorldSpec::validate() const {
  if (n_stimuli < 2) throw ValidationError("n_stimuli must be at least 2");
  if (latent_dim < 1) throw ValidationError("latent_dim must be at least 1");
  if (n_subjects < 1) throw ValidationError("n_subjects must be at least 1");
  if (voxels_per_subject < 1) throw ValidationError("voxels_per_subject must be at least 1");
  if (!(brain_noise_sd >= 0.0) || !std::isfinite(brain_noise_sd)) {
    throw ValidationError("brain_noise_sd must be a finite non-negative number");
  }
  if (!(rep_noise_sd >= 0.0) || !std::isfinite(rep_noise_sd)) {
    throw ValidationError("rep_noise_sd must be a finite non-negative number");
  }
  if (models.empty()) throw ValidationError("models must list at least one model");
  std::unordered_set<std::string> seen;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto& m = models[k];
    const std::string where = "models[" + std::to_string(k) + "]";
    if (!is_safe_id(m.id)) throw ValidationError(where + ".id '" + m.id + "' must match [A-Za-z0-9._-]+");
    if (!seen.insert(m.id).second) throw ValidationError(where + ".id '" + m.id + "' is duplicated");
    if (m.rep_dim < 1) throw ValidationError(where + ".rep_dim must be at least 1");
    if (!(m.shared_fraction >= 0.0 && m.shared_fraction <= 1.0)) {
      throw ValidationError(where + ".shared_fraction must be in [0, 1] (got " + std::to_string(m.shared_fraction) +
                            ")");
    }
  }
}

WorldSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("world spec must be a JSON object");
  WorldSpec s;
  s.n_stimuli = field(doc, "n_stimuli", s.n_stimuli);
  s.latent_dim = field(doc, "latent_dim", s.latent_dim);
  s.n_subjects = field(doc, "n_subjects", s.n_subjects);
  s.voxels_per_subject = field(doc, "voxels_per_subject", s.voxels_per_subject);
  s.brain_noise_sd = field(doc, "brain_noise_sd", s.brain_noise_sd);
  s.rep_noise_sd = field(doc, "rep_noise_sd", s.rep_noise_sd);
  s.seed = field<std::uint64_t>(doc, "seed", s.seed);
  if (!doc.contains("models") || !doc.at("models").is_array()) throw ValidationError("field 'models' must be an array");
  for (const auto& m : doc.at("models")) {
    if (!m.is_object()) throw ValidationError("entries of 'models' must be objects");
    ModelSpec ms;
    ms.id = field<std::string>(m, "id", "");
    ms.rep_dim = field(m, "rep_dim", 0);
    ms.shared_fraction = field(m, "shared_fraction", -1.0);
    s.models.push_back(std::move(ms));
  }
  s.validate();
  return s;
}

json spec_to_json(const WorldSpec& s) {
  json models = json::array();
  for (const auto& m : s.models) {
    models.push_back({{"id", m.id}, {"rep_dim", m.rep_dim}, {"shared_fraction", m.shared_fraction}});
  }
  return {
      {"n_stimuli", s.n_stimuli},
      {"latent_dim", s.latent_dim},
      {"n_subjects", s.n_subjects},
      {"voxels_per_subject", s.voxels_per_subject},
      {"brain_noise_sd", s.brain_noise_sd},
      {"rep_noise_sd", s.rep_noise_sd},
      {"seed", s.seed},
      {"models", models},
  };
}

World generate(const WorldSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.n_stimuli;
  const Eigen::Index L = spec.latent_dim;
  const double loading_scale = 1.0 / std::sqrt(static_cast<double>(L));

  std::vector<std::string> ids;
  for (int i = 0; i < spec.n_stimuli; ++i) ids.push_back(stimulus_id(i));

  World world;
  world.truth.latent = normal_block(n, L, derive_key(spec.seed, {"latent"}), 1.0);
  const Matrix& Z = world.truth.latent;

  for (int j = 0; j < spec.n_subjects; ++j) {
    const std::string id = subject_id(j);
    Matrix A = normal_block(L, spec.voxels_per_subject, derive_key(spec.seed, {"subject", id, "readout"}), loading_scale);
    Matrix X = Z * A;
    if (spec.brain_noise_sd > 0.0) {
      X += normal_block(n, spec.voxels_per_subject, derive_key(spec.seed, {"subject", id, "noise"}), spec.brain_noise_sd);
    }
    world.subjects.push_back({id, LabeledMatrix(ids, std::move(X))});
    world.truth.subjects.push_back({id, std::move(A)});
  }

  for (const auto& ms : spec.models) {
    ModelTruth t;
    t.id = ms.id;
    t.shared_loading = normal_block(L, ms.rep_dim, derive_key(spec.seed, {"model", ms.id, "shared_loading"}), loading_scale);
    t.private_latent = normal_block(n, L, derive_key(spec.seed, {"model", ms.id, "private_latent"}), 1.0);
    t.private_loading = normal_block(L, ms.rep_dim, derive_key(spec.seed, {"model", ms.id, "private_loading"}), loading_scale);

    Matrix Y = std::sqrt(ms.shared_fraction) * (Z * t.shared_loading);
    if (ms.shared_fraction < 1.0) Y += std::sqrt(1.0 - ms.shared_fraction) * (t.private_latent * t.private_loading);
    if (spec.rep_noise_sd > 0.0) {
      Y += normal_block(n, ms.rep_dim, derive_key(spec.seed, {"model", ms.id, "noise"}), spec.rep_noise_sd);
    }
    t.column_scales.resize(ms.rep_dim);
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double mean = Y.col(c).mean();
      const double sd = std::sqrt((Y.col(c).array() - mean).square().sum() / static_cast<double>(n - 1));
      t.column_scales(c) = sd > 0.0 ? sd : 1.0;
      Y.col(c) /= t.column_scales(c);
    }
    world.models.push_back({ms.id, LabeledMatrix(ids, std::move(Y))});
    world.truth.models.push_back(std::move(t));
  }
  return world;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::NearChance: return "near_chance";
    case Outcome::BelowChance: return "below_chance";
    case Outcome::NearZero: return "near_zero";
  }
  return "below_chance";
}

std::vector<ExpectedOutcome> expected_outcome(const WorldSpec& spec) {
  spec.validate();
  std::vector<ExpectedOutcome> out;
  for (const auto& m : spec.models) {
    Outcome o = Outcome::BelowChance;
    if (m.shared_fraction == 0.0) {
      o = Outcome::NearChance;
    } else if (m.shared_fraction == 1.0 && spec.brain_noise_sd == 0.0 && spec.rep_noise_sd == 0.0 &&
               spec.n_stimuli >= 4 * std::max(spec.latent_dim, m.rep_dim)) {
      o = Outcome::NearZero;
    }
    out.push_back({m.id, o});
  }
  return out;
}

json expected_outcome_json(const WorldSpec& spec) {
  json models = json::array();
  const auto outcomes = expected_outcome(spec);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    models.push_back({{"model_id", outcomes[k].model_id},
                      {"shared_fraction", spec.models[k].shared_fraction},
                      {"expected", std::string(to_string(outcomes[k].outcome))}});
  }
  return {{"chance_level", (spec.n_stimuli - 1) / 2.0}, {"models", models}};
}

}  // namespace decodekit::synth
