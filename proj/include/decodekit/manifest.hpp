#pragma once

#include "decodekit/errors.hpp"
#include "decodekit/labeled_matrix.hpp"
#include "decodekit/ridge.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace decodekit {

struct MatrixRef {
  std::string id;
  /// Relative paths are resolved against the manifest's directory.
  std::filesystem::path path;
};

struct EvalSettings {
  int folds = 12;
  ridge::RidgeConfig ridge;  // inner folds live in ridge.cv_folds
  int bootstrap_replicates = 1000;
  std::uint64_t seed = 0;
};

/// Declarative description of a subject x model decoding experiment.
/// Schema: docs/manifest.md.
struct ExperimentManifest {
  std::vector<MatrixRef> subjects;
  std::vector<MatrixRef> models;
  std::vector<std::string> stimulus_ids;
  EvalSettings eval;
  std::filesystem::path base_dir;

  void validate() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Missing keys keep their defaults. Keys: folds, inner_folds, alpha_grid,
/// standardize, solver, bootstrap_replicates, seed.
EvalSettings eval_settings_from_json(const nlohmann::json& doc);
nlohmann::json eval_settings_to_json(const EvalSettings& e);

ExperimentManifest manifest_from_json(const nlohmann::json& doc, std::filesystem::path base_dir);
nlohmann::json manifest_to_json(const ExperimentManifest& m);
ExperimentManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const ExperimentManifest& m, const std::filesystem::path& path);

/// True for ids that are safe to embed in file names: [A-Za-z0-9._-]+, not
/// starting with '.'.
bool is_safe_id(const std::string& id);

struct NamedMatrix {
  std::string id;
  LabeledMatrix matrix;
};

/// A manifest with every matrix loaded and aligned to the canonical stimulus
/// order.
struct Experiment {
  ExperimentManifest manifest;
  std::vector<NamedMatrix> subjects;
  std::vector<NamedMatrix> models;
};

/// Raised when a referenced matrix cannot be loaded or aligned; names the
/// entity and path.
class ExperimentError : public Error {
 public:
  ExperimentError(std::string role, std::string entity_id, std::filesystem::path path,
                  const std::string& cause);
  const std::string& role() const noexcept { return role_; }
  const std::string& entity_id() const noexcept { return entity_id_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::string role_;
  std::string entity_id_;
  std::filesystem::path path_;
};

Experiment load_experiment(const ExperimentManifest& manifest);

}  // namespace decodekit
