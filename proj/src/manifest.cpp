#include "decodekit/manifest.hpp"

#include "decodekit/digest.hpp"
#include "decodekit/matrix_io.hpp"

#include <unordered_set>

namespace decodekit {
namespace {

using nlohmann::json;

std::vector<MatrixRef> refs_from_json(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw ValidationError(std::string("manifest field '") + key + "' must be an array");
  }
  std::vector<MatrixRef> out;
  for (const auto& entry : doc.at(key)) {
    if (!entry.is_object() || !entry.contains("id") || !entry.contains("path")) {
      throw ValidationError(std::string("every entry of '") + key + "' needs 'id' and 'path'");
    }
    out.push_back({entry.at("id").get<std::string>(), entry.at("path").get<std::string>()});
  }
  return out;
}

json refs_to_json(const std::vector<MatrixRef>& refs) {
  json arr = json::array();
  for (const auto& r : refs) arr.push_back({{"id", r.id}, {"path", r.path.generic_string()}});
  return arr;
}

void check_ids(const std::vector<MatrixRef>& refs, const char* what) {
  if (refs.empty()) throw ValidationError(std::string("manifest lists no ") + what);
  std::unordered_set<std::string> seen;
  for (const auto& r : refs) {
    if (!is_safe_id(r.id)) {
      throw ValidationError(std::string(what) + " id '" + r.id + "' must match [A-Za-z0-9._-]+ and not start with '.'");
    }
    if (!seen.insert(r.id).second) throw ValidationError(std::string("duplicate ") + what + " id '" + r.id + "'");
    if (r.path.empty()) throw ValidationError(std::string(what) + " '" + r.id + "' has an empty path");
  }
}

}  // namespace

bool is_safe_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  for (unsigned char c : id) {
    if (!(std::isalnum(c) || c == '.' || c == '_' || c == '-')) return false;
  }
  return true;
}

void ExperimentManifest::validate() const {
  check_ids(subjects, "subject");
  check_ids(models, "model");
  if (stimulus_ids.size() < 2) throw ValidationError("manifest needs at least 2 stimulus ids");
  std::unordered_set<std::string> seen;
  for (const auto& id : stimulus_ids) {
    if (id.empty()) throw ValidationError("empty stimulus id in manifest");
    if (!seen.insert(id).second) throw ValidationError("duplicate stimulus id '" + id + "' in manifest");
  }
  eval.ridge.validate();
  if (eval.folds < 2) throw ValidationError("eval.folds must be at least 2");
  if (static_cast<std::size_t>(eval.folds) > stimulus_ids.size()) {
    throw ValidationError("eval.folds exceeds the number of stimuli");
  }
  if (eval.bootstrap_replicates < 1) throw ValidationError("eval.bootstrap_replicates must be at least 1");
}

std::filesystem::path ExperimentManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

EvalSettings eval_settings_from_json(const json& e) {
  EvalSettings out;
  try {
    if (!e.is_object()) throw ValidationError("'eval' must be an object");
    if (e.contains("folds")) out.folds = e.at("folds").get<int>();
    if (e.contains("inner_folds")) out.ridge.cv_folds = e.at("inner_folds").get<int>();
    if (e.contains("alpha_grid")) out.ridge.alpha_grid = e.at("alpha_grid").get<std::vector<double>>();
    if (e.contains("standardize")) out.ridge.standardize = e.at("standardize").get<bool>();
    if (e.contains("solver")) out.ridge.solver = ridge::solver_policy_from_string(e.at("solver").get<std::string>());
    if (e.contains("bootstrap_replicates")) out.bootstrap_replicates = e.at("bootstrap_replicates").get<int>();
    if (e.contains("seed")) out.seed = e.at("seed").get<std::uint64_t>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed eval settings: ") + ex.what());
  }
  return out;
}

json eval_settings_to_json(const EvalSettings& e) {
  return {
      {"folds", e.folds},
      {"inner_folds", e.ridge.cv_folds},
      {"alpha_grid", e.ridge.alpha_grid},
      {"standardize", e.ridge.standardize},
      {"solver", std::string(ridge::to_string(e.ridge.solver))},
      {"bootstrap_replicates", e.bootstrap_replicates},
      {"seed", e.seed},
  };
}

ExperimentManifest manifest_from_json(const json& doc, std::filesystem::path base_dir) {
  ExperimentManifest m;
  m.base_dir = std::move(base_dir);
  try {
    if (!doc.is_object()) throw ValidationError("manifest must be a JSON object");
    if (doc.contains("format_version") && doc.at("format_version").get<int>() != 1) {
      throw ValidationError("unsupported manifest format_version");
    }
    m.subjects = refs_from_json(doc, "subjects");
    m.models = refs_from_json(doc, "models");
    if (!doc.contains("stimulus_ids")) throw ValidationError("manifest field 'stimulus_ids' is required");
    m.stimulus_ids = doc.at("stimulus_ids").get<std::vector<std::string>>();
    if (doc.contains("eval")) m.eval = eval_settings_from_json(doc.at("eval"));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

json manifest_to_json(const ExperimentManifest& m) {
  json doc;
  doc["format_version"] = 1;
  doc["stimulus_ids"] = m.stimulus_ids;
  doc["subjects"] = refs_to_json(m.subjects);
  doc["models"] = refs_to_json(m.models);
  doc["eval"] = eval_settings_to_json(m.eval);
  return doc;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(doc, path.parent_path());
}

void save_manifest(const ExperimentManifest& m, const std::filesystem::path& path) {
  m.validate();
  write_file(path, manifest_to_json(m).dump(2) + "\n");
}

ExperimentError::ExperimentError(std::string role, std::string entity_id, std::filesystem::path path,
                                 const std::string& cause)
    : Error(role + " '" + entity_id + "' (" + path.string() + "): " + cause),
      role_(std::move(role)),
      entity_id_(std::move(entity_id)),
      path_(std::move(path)) {}

Experiment load_experiment(const ExperimentManifest& manifest) {
  manifest.validate();
  Experiment ex{manifest, {}, {}};
  auto load_all = [&](const std::vector<MatrixRef>& refs, const char* role, std::vector<NamedMatrix>& out) {
    for (const auto& ref : refs) {
      const auto path = manifest.resolve(ref.path);
      try {
        out.push_back({ref.id, align(load_matrix(path), manifest.stimulus_ids)});
      } catch (const std::exception& e) {
        throw ExperimentError(role, ref.id, path, e.what());
      }
    }
  };
  load_all(manifest.subjects, "subject", ex.subjects);
  load_all(manifest.models, "model", ex.models);
  return ex;
}

}  // namespace decodekit
