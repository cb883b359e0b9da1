#include "decodekit/cli.hpp"

#include "decodekit/crossmodel.hpp"
#include "decodekit/decoder.hpp"
#include "decodekit/digest.hpp"
#include "decodekit/errors.hpp"
#include "decodekit/manifest.hpp"
#include "decodekit/matrix_io.hpp"
#include "decodekit/parallel.hpp"
#include "decodekit/rankeval.hpp"
#include "decodekit/synth.hpp"
#include "decodekit/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <iostream>
#include <optional>

namespace decodekit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  fs::path out_root = ".";
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  bool reproducible = false;

  fs::path output(const fs::path& p) const { return p.is_absolute() ? p : out_root / p; }
  unsigned worker_count() const { return workers == 0 ? default_workers() : workers; }
};

// Collects outputs and timings; written last as run_record.json so that its
// presence marks a completed stage.
class RunRecord {
 public:
  RunRecord(std::string command, fs::path out_dir, const Globals& g)
      : command_(std::move(command)), out_dir_(std::move(out_dir)), reproducible_(g.reproducible) {}

  void set_input_digest(std::string digest) { input_digest_ = std::move(digest); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write(const fs::path& rel, std::string_view bytes) {
    write_file(out_dir_ / rel, bytes);
    outputs_.push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  void write_matrix(const fs::path& rel, const LabeledMatrix& m) {
    write(rel, format_for_path(rel) == MatrixFormat::Csv ? render_csv(m) : encode_binary(m));
  }

  template <typename F>
  auto timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[stage] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void commit() {
    json doc;
    doc["toolkit_version"] = kVersion;
    doc["command"] = command_;
    doc["input_digest"] = input_digest_;
    doc["seed"] = seed_;
    doc["timings_ms"] = reproducible_ ? json::object() : timings_;
    doc["outputs"] = outputs_;
    write_file(out_dir_ / "run_record.json", doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_dir_;
  bool reproducible_;
  std::string input_digest_;
  std::uint64_t seed_ = 0;
  json timings_ = json::object();
  json outputs_ = json::array();
};

int fail(int code, const std::string& message) {
  std::cerr << "decodekit: " << message << "\n";
  return code;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  fs::path spec;
  fs::path out_dir;
  std::string format = "binary";
};

int cmd_synth(const SynthArgs& a, const Globals& g) {
  synth::WorldSpec spec;
  EvalSettings eval;
  std::string spec_bytes;
  try {
    spec_bytes = read_file(a.spec);
  } catch (const Error& e) {
    return fail(kUsage, e.what());
  }
  try {
    const json doc = json::parse(spec_bytes);
    spec = synth::spec_from_json(doc);
    if (g.seed) spec.seed = *g.seed;
    eval.seed = spec.seed;
    if (doc.contains("eval")) {
      eval = eval_settings_from_json(doc.at("eval"));
      if (!doc.at("eval").contains("seed") || g.seed) eval.seed = spec.seed;
    }
  } catch (const json::exception& e) {
    return fail(kSpecInvalid, "invalid world spec " + a.spec.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    return fail(kSpecInvalid, "invalid world spec " + a.spec.string() + ": " + e.what());
  }

  const fs::path out = g.output(a.out_dir);
  const std::string ext = a.format == "csv" ? ".csv" : ".rdmx";
  try {
    RunRecord record("synth", out, g);
    record.set_input_digest(sha256_hex(spec_bytes));
    record.set_seed(spec.seed);
    const auto world = record.timed("generate", [&] { return synth::generate(spec); });

    ExperimentManifest manifest;
    manifest.stimulus_ids = world.models.front().matrix.stimulus_ids();
    manifest.eval = eval;
    record.timed("write", [&] {
      for (const auto& s : world.subjects) {
        const fs::path rel = fs::path("subjects") / (s.id + ext);
        record.write_matrix(rel, s.matrix);
        manifest.subjects.push_back({s.id, rel});
      }
      for (const auto& m : world.models) {
        const fs::path rel = fs::path("models") / (m.id + ext);
        record.write_matrix(rel, m.matrix);
        manifest.models.push_back({m.id, rel});
      }
      manifest.validate();
      record.write("world_spec.json", synth::spec_to_json(spec).dump(2) + "\n");
      record.write("expected_outcome.json", synth::expected_outcome_json(spec).dump(2) + "\n");
      record.write("manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    });
    record.commit();
  } catch (const ValidationError& e) {
    return fail(kSpecInvalid, e.what());
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  return kOk;
}

// ---- decode ----------------------------------------------------------------

struct DecodeArgs {
  fs::path manifest;
  fs::path out_dir;
  std::string mode = "cross_validated";
  std::optional<int> folds;
};

int cmd_decode(const DecodeArgs& a, const Globals& g) {
  const fs::path out = g.output(a.out_dir);
  try {
    const std::string manifest_bytes = read_file(a.manifest);
    auto manifest = load_manifest(a.manifest);
    if (g.seed) manifest.eval.seed = *g.seed;
    if (a.folds) manifest.eval.folds = *a.folds;
    manifest.validate();
    const auto mode = decoder::mode_from_string(a.mode);

    RunRecord record("decode", out, g);
    record.set_input_digest(sha256_hex(manifest_bytes));
    record.set_seed(manifest.eval.seed);

    const auto experiment = record.timed("load", [&] { return load_experiment(manifest); });
    const auto results = record.timed("decode", [&] {
      return decoder::run_grid(experiment, {mode, g.worker_count()});
    });

    json pairs = json::array();
    record.timed("write", [&] {
      for (const auto& p : results) {
        record.write_matrix(fs::path("predictions") / decoder::prediction_relpath(p.subject_id, p.model_id),
                            p.predictions);
        pairs.push_back(decoder::prediction_metadata(p));
      }
      json run;
      run["toolkit_version"] = kVersion;
      run["mode"] = std::string(decoder::to_string(mode));
      run["eval"] = eval_settings_to_json(manifest.eval);
      run["stimulus_ids"] = manifest.stimulus_ids;
      run["pairs"] = pairs;
      record.write("decode_run.json", run.dump(2) + "\n");
    });
    record.commit();
  } catch (const std::exception& e) {
    return fail(kDecodeFailed, e.what());
  }
  return kOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  fs::path predictions;
  fs::path manifest;
  fs::path out_dir;
  std::optional<int> bootstrap;
};

int cmd_eval(const EvalArgs& a, const Globals& g) {
  const fs::path out = g.output(a.out_dir);
  try {
    const std::string manifest_bytes = read_file(a.manifest);
    auto manifest = load_manifest(a.manifest);
    if (g.seed) manifest.eval.seed = *g.seed;
    if (a.bootstrap) manifest.eval.bootstrap_replicates = *a.bootstrap;
    manifest.validate();

    const fs::path pred_dir = fs::is_directory(a.predictions / "predictions") ? a.predictions / "predictions"
                                                                               : a.predictions;
    std::vector<std::string> missing;
    for (const auto& s : manifest.subjects)
      for (const auto& m : manifest.models)
        if (!fs::exists(pred_dir / decoder::prediction_relpath(s.id, m.id))) missing.push_back(s.id + "/" + m.id);
    if (!missing.empty()) {
      std::string list;
      for (const auto& x : missing) list += (list.empty() ? "" : ", ") + x;
      return fail(kEvalIncomplete, "prediction grid is incomplete; missing " + list);
    }

    RunRecord record("eval", out, g);
    record.set_input_digest(sha256_hex(manifest_bytes));
    record.set_seed(manifest.eval.seed);

    std::vector<rankeval::RankReport> reports;
    record.timed("rank", [&] {
      for (const auto& m : manifest.models) {
        const auto mpath = manifest.resolve(m.path);
        LabeledMatrix candidates = [&] {
          try {
            return align(load_matrix(mpath), manifest.stimulus_ids);
          } catch (const std::exception& e) {
            throw ExperimentError("model", m.id, mpath, e.what());
          }
        }();
        std::vector<decoder::PredictionSet> sets;
        for (const auto& s : manifest.subjects) {
          const auto ppath = pred_dir / decoder::prediction_relpath(s.id, m.id);
          try {
            sets.push_back({s.id, m.id, align(load_matrix(ppath), manifest.stimulus_ids), {}, {},
                            decoder::Mode::CrossValidated});
          } catch (const std::exception& e) {
            throw Error("predictions for subject '" + s.id + "', model '" + m.id + "' (" + ppath.string() +
                        "): " + e.what());
          }
        }
        const rankeval::BootstrapSettings boot{manifest.eval.bootstrap_replicates, 0.95,
                                               derive_key(manifest.eval.seed, {"bootstrap", m.id}).value};
        reports.push_back(rankeval::mean_average_rank(sets, candidates, boot));
      }
    });

    record.timed("write", [&] {
      for (const auto& r : reports) {
        record.write(fs::path("rank_reports") / (r.model_id + ".json"), rankeval::report_to_json(r).dump(2) + "\n");
      }
      record.write("ranks.csv", rankeval::ranks_csv(reports));
      record.write("summary.csv", rankeval::summary_csv(reports));
    });
    record.commit();
  } catch (const std::exception& e) {
    return fail(kUsage, e.what());
  }
  return kOk;
}

// ---- crossmodel ------------------------------------------------------------

struct CrossmodelArgs {
  fs::path manifest;
  fs::path out_dir;
  std::string mode = "in_sample";
  std::optional<int> folds;
};

int cmd_crossmodel(const CrossmodelArgs& a, const Globals& g) {
  const fs::path out = g.output(a.out_dir);
  try {
    const std::string manifest_bytes = read_file(a.manifest);
    auto manifest = load_manifest(a.manifest);
    if (g.seed) manifest.eval.seed = *g.seed;
    if (a.folds) manifest.eval.folds = *a.folds;
    manifest.validate();

    RunRecord record("crossmodel", out, g);
    record.set_input_digest(sha256_hex(manifest_bytes));
    record.set_seed(manifest.eval.seed);

    std::vector<NamedMatrix> models;
    record.timed("load", [&] {
      for (const auto& m : manifest.models) {
        const auto path = manifest.resolve(m.path);
        try {
          models.push_back({m.id, align(load_matrix(path), manifest.stimulus_ids)});
        } catch (const std::exception& e) {
          throw ExperimentError("model", m.id, path, e.what());
        }
      }
    });
    crossmodel::PredictivityOptions opts;
    opts.cfg = manifest.eval.ridge;
    opts.mode = decoder::mode_from_string(a.mode);
    opts.folds = manifest.eval.folds;
    opts.seed = manifest.eval.seed;
    opts.workers = g.worker_count();
    const auto matrix = record.timed("regress", [&] { return crossmodel::pairwise_predictivity(models, opts); });

    record.timed("write", [&] {
      record.write("predictivity.csv", crossmodel::predictivity_csv(matrix));
      record.write("predictivity.svg", crossmodel::predictivity_svg(matrix, g.reproducible));
      record.write("predictivity.json", crossmodel::predictivity_metadata(matrix).dump(2) + "\n");
    });
    record.commit();
  } catch (const std::exception& e) {
    return fail(kCrossmodelFailed, e.what());
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"decodekit: ridge decoders, rank-based evaluation and synthetic worlds"};
  app.name("decodekit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Globals g;
  app.add_option("--out", g.out_root, "Root directory for relative output paths");
  app.add_option("--seed", g.seed, "Override the seed from the spec or manifest");
  app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)");
  app.add_flag("--reproducible", g.reproducible, "Omit timestamps and timings from outputs");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic world and its manifest");
  synth_cmd->add_option("spec", sa.spec, "World spec (JSON)")->required();
  synth_cmd->add_option("out_dir", sa.out_dir, "Output directory")->required();
  synth_cmd->add_option("--format", sa.format, "Matrix format")->check(CLI::IsMember({"binary", "csv"}));

  DecodeArgs da;
  auto* decode_cmd = app.add_subcommand("decode", "Train the subject x model decoder grid");
  decode_cmd->add_option("manifest", da.manifest, "Experiment manifest")->required();
  decode_cmd->add_option("out_dir", da.out_dir, "Output directory")->required();
  decode_cmd->add_option("--mode", da.mode)->check(CLI::IsMember({"cross_validated", "in_sample"}));
  decode_cmd->add_option("--folds", da.folds, "Outer folds (overrides the manifest)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Rank-score predictions and report mean average rank");
  eval_cmd->add_option("predictions", ea.predictions, "Decode output directory")->required();
  eval_cmd->add_option("manifest", ea.manifest, "Experiment manifest")->required();
  eval_cmd->add_option("out_dir", ea.out_dir, "Output directory")->required();
  eval_cmd->add_option("--bootstrap", ea.bootstrap, "Bootstrap replicates (overrides the manifest)");

  CrossmodelArgs ca;
  auto* cross_cmd = app.add_subcommand("crossmodel", "Pairwise model-to-model r^2 heatmap");
  cross_cmd->add_option("manifest", ca.manifest, "Experiment manifest")->required();
  cross_cmd->add_option("out_dir", ca.out_dir, "Output directory")->required();
  cross_cmd->add_option("--mode", ca.mode)->check(CLI::IsMember({"cross_validated", "in_sample"}));
  cross_cmd->add_option("--folds", ca.folds, "Folds in cross_validated mode (overrides the manifest)");

  for (auto* sub : {synth_cmd, decode_cmd, eval_cmd, cross_cmd}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*synth_cmd) return cmd_synth(sa, g);
  if (*decode_cmd) return cmd_decode(da, g);
  if (*eval_cmd) return cmd_eval(ea, g);
  return cmd_crossmodel(ca, g);
}

}  // namespace decodekit::cli
