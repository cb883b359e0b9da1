#pragma once

// Synthetic linear worlds with a controlled shared latent space.
//
//   Z   ~ N(0, 1)                         n x latent_dim, shared by everything
//   X_j = Z A_j + eps_j                   subject j, eps ~ N(0, brain_noise_sd^2)
//   Y_k = sqrt(f_k) Z B_k + sqrt(1 - f_k) U_k C_k + eta_k
//                                         model k, U_k private, eta ~ N(0, rep_noise_sd^2)
//
// Loadings A, B, C are N(0, 1/latent_dim) so each column of Z A / Z B has unit
// variance in expectation. Columns of Y_k are then divided by their standard
// deviation (not centred, so a noise-free Y_k stays an exact linear function
// of Z). Every block is drawn from its own counter-based stream keyed on
// (seed, entity id, block name).

#include "decodekit/labeled_matrix.hpp"
#include "decodekit/manifest.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace decodekit::synth {

struct ModelSpec {
  std::string id;
  int rep_dim = 0;
  double shared_fraction = 0.0;
};

struct WorldSpec {
  int n_stimuli = 384;
  int latent_dim = 16;
  int n_subjects = 8;
  int voxels_per_subject = 500;
  std::vector<ModelSpec> models;
  double brain_noise_sd = 1.0;
  double rep_noise_sd = 0.5;
  std::uint64_t seed = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

WorldSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const WorldSpec& spec);

struct ModelTruth {
  std::string id;
  Matrix shared_loading;   ///< B_k, latent_dim x rep_dim
  Matrix private_latent;   ///< U_k, n x latent_dim
  Matrix private_loading;  ///< C_k, latent_dim x rep_dim
  Eigen::RowVectorXd column_scales;  ///< divisors applied to Y_k's columns
};

struct SubjectTruth {
  std::string id;
  Matrix readout;  ///< A_j, latent_dim x voxels
};

struct WorldTruth {
  Matrix latent;  ///< Z
  std::vector<SubjectTruth> subjects;
  std::vector<ModelTruth> models;
};

struct World {
  std::vector<NamedMatrix> subjects;
  std::vector<NamedMatrix> models;
  WorldTruth truth;
};

/// Subject ids are sub-01, sub-02, ...; stimulus ids stim-0001, ...
std::string subject_id(int index);
std::string stimulus_id(int index);

World generate(const WorldSpec& spec);

enum class Outcome {
  NearChance,   ///< no shared variance
  BelowChance,  ///< partially decodable
  NearZero,     ///< perfectly decodable
};

std::string_view to_string(Outcome o);

struct ExpectedOutcome {
  std::string model_id;
  Outcome outcome;
};

/// Qualitative decoding prediction per model:
///   shared_fraction == 0                                    -> NearChance
///   shared_fraction == 1, both noise sds 0,
///     n_stimuli >= 4 * max(latent_dim, rep_dim)             -> NearZero
///   otherwise                                               -> BelowChance
std::vector<ExpectedOutcome> expected_outcome(const WorldSpec& spec);

nlohmann::json expected_outcome_json(const WorldSpec& spec);

}  // namespace decodekit::synth
