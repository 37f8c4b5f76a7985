#pragma once

// Experiment configuration: schema, validation, serialization, built-in
// presets, and the mapping onto tasks and generation configs.
//
// The file format is JSON with // and /* */ comments allowed. Unknown keys
// are rejected; every error names the offending key path.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "kfql/basis.hpp"
#include "kfql/envs.hpp"
#include "kfql/harness.hpp"
#include "kfql/learners.hpp"

namespace kfql {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct CashierSettings {
  std::size_t queues = 100;
  int jobs = 200;
  CashierCost cost = CashierCost::Linear;
  std::uint64_t routing_seed = 1;
  double gamma = 0.99;

  bool operator==(const CashierSettings&) const = default;
};

struct EnvironmentConfig {
  EnvKind kind = EnvKind::CartPole;
  CartPoleParams cartpole;
  CashierSettings cashier;
  CarHillParams carhill;
  GridSpec grid;  // cart-pole and car-hill only

  double gamma() const;
  std::size_t feature_count() const;
  bool operator==(const EnvironmentConfig&) const = default;
};

/// Whether the configured epsilon0 is the variance itself or a standard
/// deviation to be squared.
enum class EpsilonReading { Variance, StdDev };

struct PriorMeanSpec {
  enum class Kind { Constant, CarHill, Explicit };
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::vector<double> values;

  bool operator==(const PriorMeanSpec&) const = default;
};

struct SnapshotSpec {
  unsigned per_decade = 10;           // used when `points` is empty
  std::vector<std::uint64_t> points;  // explicit list

  bool operator==(const SnapshotSpec&) const = default;
};

struct LearnerConfig {
  std::string name;
  LearnerKind kind = LearnerKind::AKFQL;
  SensorNoiseMethod noise;
  EpsilonReading reading = EpsilonReading::Variance;
  PriorMeanSpec prior_mean;
  double prior_variance = 1.0;
  LearningRateSchedule rate;
  double exploration_temperature = 0.5;
  std::uint64_t budget = 0;
  SnapshotSpec snapshots;

  bool operator==(const LearnerConfig&) const = default;
};

struct ExperimentConfig {
  EnvironmentConfig environment;
  std::vector<LearnerConfig> learners;
  std::size_t runs = 1;
  EvaluationSpec evaluation;
  std::uint64_t seed = 1;
  std::string output = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Parses config text (comments allowed) into a JSON document.
nlohmann::json parse_config_document(std::string_view text);

nlohmann::json to_json(const ExperimentConfig& config);
std::string serialize(const ExperimentConfig& config);

/// Applies "a.b.0.c=value" overrides in place. The value is parsed as JSON
/// when possible and taken as a string otherwise. Missing object keys are
/// created; array indices must exist.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& assignments);

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> preset_list();
/// Config text of a built-in preset; throws ConfigError for unknown names.
std::string preset_text(std::string_view name);

std::unique_ptr<Task> make_task(const EnvironmentConfig& env);

/// Default evaluation for an environment (metric, horizon, discount).
EvaluationSpec default_evaluation(EnvKind kind);

GenerationConfig generation_config(const LearnerConfig& learner, const EnvironmentConfig& env);
std::vector<LearnerSpec> learner_specs(const ExperimentConfig& config);

std::string_view to_string(Metric metric);

}  // namespace kfql
