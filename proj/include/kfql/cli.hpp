#pragma once

// Command implementations behind the `kfql` executable. Each returns the
// process exit code and writes human-readable progress to `log`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kfql/config.hpp"
#include "kfql/harness.hpp"

namespace kfql::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kRuntimeError = 2,
  kReplayMismatch = 3,
};

struct Options {
  std::string config;  // path to a config file
  std::string preset;  // or a built-in preset name
  std::string out;     // overrides config.output
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = OpenMP default
  std::vector<std::string> overrides;
};

inline constexpr const char* kCsvHeader = "learner,method,visited_states,run,performance";
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kNoiseCompareCsv = "noise_compare.csv";

/// Loads the config named by `--config`/`--preset` and applies overrides.
ExperimentConfig load_config(const Options& options);

/// CSV rows for one learner's curve: per-run rows, then `mean` and
/// `stderr` rows, grouped by visited-state count.
void write_curve_csv(std::ostream& os, const std::string& learner, const std::string& method,
                     const LearningCurve& curve);

/// 17 significant digits.
std::string format_number(double v);

/// RFC 4180 quoting when the field needs it.
std::string csv_field(const std::string& field);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Hash over the resolved config with the seed and output path removed.
std::string config_hash(const ExperimentConfig& config);

int cmd_run(const Options& options, std::ostream& log);
int cmd_noise_compare(const Options& options, std::ostream& log);
/// Re-executes a manifest's command into `out_dir` (default: `replay/`
/// beside the manifest) and compares output hashes.
int cmd_replay(const std::filesystem::path& manifest, const std::string& out_dir, int threads,
               std::ostream& log);
int cmd_presets(const std::string& name, std::ostream& out);
int cmd_validate(const Options& options, std::ostream& log);

/// Full command-line entry point.
int main_entry(int argc, char** argv);

}  // namespace kfql::cli
