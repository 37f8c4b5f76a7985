#include "kfql/cli.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kfql::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<NoiseMethod, 4> kAllNoiseMethods = {
    NoiseMethod::Policy, NoiseMethod::Average, NoiseMethod::Max, NoiseMethod::Boltzmann};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string method_label(const LearnerConfig& lc) {
  return lc.kind == LearnerKind::PTD ? "none" : std::string(to_string(lc.noise.kind));
}

json config_without_run_identity(const ExperimentConfig& config) {
  json doc = to_json(config);
  doc.erase("seed");
  doc.erase("output");
  return doc;
}

struct Outcome {
  std::map<std::string, std::string> hashes;  // file name -> sha256
  json aborted_runs = json::object();
  json aborts = json::array();
  std::size_t completed = 0;
};

void record_aborts(Outcome& outcome, const std::string& label, const LearnerOutcome& result) {
  outcome.aborted_runs[label] = result.aborts.size();
  for (const auto& a : result.aborts) {
    outcome.aborts.push_back(
        {{"learner", label}, {"run", a.run}, {"visited", a.visited}, {"diagnostic", a.diagnostic}});
  }
  outcome.completed += result.curve.run_ids.size();
}

ExperimentOptions experiment_options(const ExperimentConfig& config, int threads) {
  ExperimentOptions options;
  options.runs = config.runs;
  options.evaluation = config.evaluation;
  options.master_seed = config.seed;
  options.threads = resolve_threads(threads);
  return options;
}

Outcome execute_run(const ExperimentConfig& config, const fs::path& out_dir, int threads,
                    std::ostream& log) {
  fs::create_directories(out_dir);
  const auto task = make_task(config.environment);
  const auto specs = learner_specs(config);
  const auto results = run_experiment(*task, specs, experiment_options(config, threads));

  Outcome outcome;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& lc = config.learners[i];
    std::ostringstream csv;
    csv << kCsvHeader << "\n";
    write_curve_csv(csv, lc.name, method_label(lc), results[i].curve);
    const std::string file = lc.name + ".csv";
    write_file(out_dir / file, csv.str());
    outcome.hashes[file] = sha256_text(csv.str());
    record_aborts(outcome, lc.name, results[i]);
    log << lc.name << ": " << results[i].curve.run_ids.size() << " runs completed, "
        << results[i].aborts.size() << " aborted";
    if (!results[i].curve.rows.empty() && !results[i].curve.run_ids.empty()) {
      log << ", final mean " << format_number(results[i].curve.rows.back().mean);
    }
    log << "\n";
  }
  return outcome;
}

Outcome execute_noise_compare(const ExperimentConfig& config, const fs::path& out_dir,
                              int threads, std::ostream& log) {
  if (config.learners.size() != 1) {
    throw ConfigError("learners", "noise-compare needs exactly one learner");
  }
  const auto& base = config.learners.front();
  if (base.kind == LearnerKind::PTD) {
    throw ConfigError("learners[0].kind", "noise-compare needs a Kalman learner (kfql|akfql)");
  }
  fs::create_directories(out_dir);
  const auto task = make_task(config.environment);
  std::vector<LearnerSpec> specs;
  for (const auto method : kAllNoiseMethods) {
    LearnerConfig lc = base;
    lc.noise.kind = method;
    specs.push_back({std::string(to_string(method)), generation_config(lc, config.environment)});
  }
  const auto results = run_experiment(*task, specs, experiment_options(config, threads));

  Outcome outcome;
  std::ostringstream csv;
  csv << kCsvHeader << "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string label = specs[i].name;
    write_curve_csv(csv, base.name, label, results[i].curve);
    record_aborts(outcome, label, results[i]);
    log << base.name << "/" << label << ": " << results[i].curve.run_ids.size()
        << " runs completed, " << results[i].aborts.size() << " aborted";
    if (!results[i].curve.rows.empty() && !results[i].curve.run_ids.empty()) {
      log << ", final mean " << format_number(results[i].curve.rows.back().mean);
    }
    log << "\n";
  }
  write_file(out_dir / kNoiseCompareCsv, csv.str());
  outcome.hashes[kNoiseCompareCsv] = sha256_text(csv.str());
  return outcome;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const ExperimentConfig& config, int threads, const Outcome& outcome) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config_without_run_identity(config);
  manifest["config_sha256"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["threads"] = resolve_threads(threads);
  manifest["outputs"] = outcome.hashes;
  manifest["aborted_runs"] = outcome.aborted_runs;
  manifest["aborts"] = outcome.aborts;
  write_file(out_dir / kManifestName, manifest.dump(2) + "\n");
}

template <class Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

ExperimentConfig load_config(const Options& options) {
  if (options.config.empty() == options.preset.empty()) {
    throw ConfigError("", "give exactly one of --config PATH or --preset NAME");
  }
  std::string text;
  if (!options.preset.empty()) {
    text = preset_text(options.preset);
  } else {
    try {
      text = read_file(options.config);
    } catch (const std::exception& e) {
      throw ConfigError("", e.what());
    }
  }
  json doc = parse_config_document(text);
  apply_overrides(doc, options.overrides);
  ExperimentConfig config = parse_config(doc);
  if (options.seed) config.seed = *options.seed;
  if (!options.out.empty()) config.output = options.out;
  return config;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char ch : field) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

void write_curve_csv(std::ostream& os, const std::string& learner, const std::string& method,
                     const LearningCurve& curve) {
  const std::string prefix = csv_field(learner) + "," + csv_field(method) + ",";
  for (const auto& row : curve.rows) {
    const std::string visited = std::to_string(row.visited_states);
    for (std::size_t i = 0; i < row.per_run.size(); ++i) {
      os << prefix << visited << "," << curve.run_ids[i] << "," << format_number(row.per_run[i])
         << "\n";
    }
    if (row.per_run.empty()) continue;
    os << prefix << visited << ",mean," << format_number(row.mean) << "\n";
    os << prefix << visited << ",stderr," << format_number(row.stderr_) << "\n";
  }
}

std::string sha256_text(const std::string& text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_text(read_file(path)); }

std::string config_hash(const ExperimentConfig& config) {
  return sha256_text(config_without_run_identity(config).dump());
}

int cmd_run(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = load_config(options);
    const fs::path out_dir = config.output;
    const auto start = std::chrono::steady_clock::now();
    const Outcome outcome = execute_run(config, out_dir, options.threads, log);
    write_manifest(out_dir, "run", config, options.threads, outcome);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    log << "wrote " << (out_dir / kManifestName).string() << " (" << secs.count() << " s)\n";
    if (outcome.completed == 0) {
      log << "error: every run aborted\n";
      return static_cast<int>(kRuntimeError);
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_noise_compare(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = load_config(options);
    const fs::path out_dir = config.output;
    const Outcome outcome = execute_noise_compare(config, out_dir, options.threads, log);
    write_manifest(out_dir, "noise-compare", config, options.threads, outcome);
    log << "wrote " << (out_dir / kNoiseCompareCsv).string() << "\n";
    if (outcome.completed == 0) {
      log << "error: every run aborted\n";
      return static_cast<int>(kRuntimeError);
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_replay(const fs::path& manifest_path, const std::string& out_dir, int threads,
               std::ostream& log) {
  return guarded(log, [&]() -> int {
    json manifest;
    try {
      manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
      throw ConfigError("", std::string("manifest is not valid JSON: ") + e.what());
    }
    for (const char* key : {"command", "config", "config_sha256", "seed", "outputs"}) {
      if (!manifest.contains(key)) throw ConfigError(key, "missing from manifest");
    }
    const std::string recorded = manifest["config_sha256"].get<std::string>();
    const std::string actual = sha256_text(manifest["config"].dump());
    if (recorded != actual) {
      log << "replay FAILED: config hash mismatch (manifest " << recorded << ", recomputed "
          << actual << "); the recorded config was modified\n";
      return kReplayMismatch;
    }

    json doc = manifest["config"];
    doc["seed"] = manifest["seed"];
    ExperimentConfig config = parse_config(doc);
    const fs::path target =
        out_dir.empty() ? manifest_path.parent_path() / "replay" : fs::path(out_dir);
    config.output = target.string();

    const std::string command = manifest["command"].get<std::string>();
    Outcome outcome;
    if (command == "run") {
      outcome = execute_run(config, target, threads, log);
    } else if (command == "noise-compare") {
      outcome = execute_noise_compare(config, target, threads, log);
    } else {
      throw ConfigError("command", "unknown command '" + command + "' in manifest");
    }

    bool ok = true;
    const auto& expected = manifest["outputs"];
    for (const auto& [file, hash] : expected.items()) {
      const auto it = outcome.hashes.find(file);
      const std::string got = it == outcome.hashes.end() ? "<missing>" : it->second;
      if (got != hash.get<std::string>()) {
        ok = false;
        log << "hash mismatch for " << file << ": expected " << hash.get<std::string>()
            << ", got " << got << "\n";
      }
    }
    if (outcome.hashes.size() != expected.size()) {
      ok = false;
      log << "output file set differs from the manifest\n";
    }
    log << (ok ? "replay PASSED" : "replay FAILED") << "\n";
    return ok ? kSuccess : kReplayMismatch;
  });
}

int cmd_presets(const std::string& name, std::ostream& out) {
  return guarded(out, [&] {
    if (name.empty()) {
      for (const auto& p : preset_list()) out << p.name << "\t" << p.description << "\n";
    } else {
      out << serialize(parse_config(std::string_view(preset_text(name))));
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_validate(const Options& options, std::ostream& log) {
  return guarded(log, [&] {
    const ExperimentConfig config = load_config(options);
    (void)make_task(config.environment);
    for (const auto& spec : learner_specs(config)) {
      spec.config.validate(config.environment.feature_count());
    }
    log << "config OK: " << to_string(config.environment.kind) << ", "
        << config.learners.size() << " learner(s), " << config.runs << " run(s)\n";
    return static_cast<int>(kSuccess);
  });
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Kalman filter Q-learning experiments"};
  app.require_subcommand(1);

  Options options;
  auto add_config_flags = [&](CLI::App* sub) {
    sub->add_option("--config", options.config, "experiment config file");
    sub->add_option("--preset", options.preset, "built-in preset name (see `presets`)");
    sub->add_option("--out", options.out, "output directory");
    sub->add_option("--seed", options.seed, "master seed");
    sub->add_option("--threads", options.threads, "worker threads (1 = reproducible serial)");
    sub->add_option("--set", options.overrides, "override key.path=value (repeatable)");
  };

  auto* run = app.add_subcommand("run", "run an experiment and write learning curves");
  add_config_flags(run);
  auto* noise = app.add_subcommand("noise-compare", "compare the four sensor-noise methods");
  add_config_flags(noise);
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  add_config_flags(validate);

  std::string manifest;
  std::string replay_out;
  int replay_threads = 0;
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare output hashes");
  replay->add_option("manifest", manifest, "manifest.json from a previous run")->required();
  replay->add_option("--out", replay_out, "where to write the replayed outputs");
  replay->add_option("--threads", replay_threads, "worker threads");

  std::string preset_name;
  auto* presets = app.add_subcommand("presets", "list built-in presets or print one");
  presets->add_option("name", preset_name, "preset to print as a resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  if (*run) return cmd_run(options, std::cerr);
  if (*noise) return cmd_noise_compare(options, std::cerr);
  if (*validate) return cmd_validate(options, std::cerr);
  if (*replay) return cmd_replay(manifest, replay_out, replay_threads, std::cerr);
  if (*presets) return cmd_presets(preset_name, std::cout);
  return kConfigError;
}

}  // namespace kfql::cli
