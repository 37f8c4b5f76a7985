#pragma once

// Policy generation (learn on-line, snapshot the weights) and off-line
// policy evaluation, plus multi-run aggregation into learning curves.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kfql/basis.hpp"
#include "kfql/core.hpp"
#include "kfql/envs.hpp"
#include "kfql/learners.hpp"

namespace kfql {

struct StepOutcome {
  double reward = 0.0;
  bool terminal = false;
};

/// An environment bound to its basis. Owns the current state; features()
/// always refer to that state.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::size_t feature_count() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual void reset(Rng& rng) = 0;
  virtual StepOutcome step(std::size_t action, Rng& rng) = 0;
  virtual void features(std::size_t action, BasisVector& out) const = 0;
  virtual std::unique_ptr<Task> clone() const = 0;
};

class CartPoleTask final : public Task {
 public:
  CartPoleTask(CartPoleParams params, GridSpec grid);

  std::size_t feature_count() const override { return grid_.feature_count(); }
  std::size_t action_count() const override { return params_.forces.size(); }
  void reset(Rng& rng) override { state_ = cartpole_initial(params_, rng); }
  StepOutcome step(std::size_t action, Rng& rng) override;
  void features(std::size_t action, BasisVector& out) const override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<CartPoleTask>(*this); }

  const CartPoleState& state() const { return state_; }
  void set_state(const CartPoleState& s) { state_ = s; }

 private:
  CartPoleParams params_;
  GridSpec grid_;
  CartPoleState state_;
};

class CashierTask final : public Task {
 public:
  explicit CashierTask(CashierParams params);

  std::size_t feature_count() const override { return params_.d; }
  std::size_t action_count() const override { return params_.d; }
  void reset(Rng& rng) override { state_ = cashier_initial(params_, rng); }
  StepOutcome step(std::size_t action, Rng& rng) override;
  void features(std::size_t action, BasisVector& out) const override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<CashierTask>(*this); }

  const CashierParams& params() const { return params_; }
  const CashierState& state() const { return state_; }

 private:
  CashierParams params_;
  CashierBasisSpec basis_;
  CashierState state_;
};

class CarHillTask final : public Task {
 public:
  CarHillTask(CarHillParams params, GridSpec grid);

  std::size_t feature_count() const override { return grid_.feature_count(); }
  std::size_t action_count() const override { return params_.forces.size(); }
  void reset(Rng&) override { state_ = carhill_initial(); }
  StepOutcome step(std::size_t action, Rng& rng) override;
  void features(std::size_t action, BasisVector& out) const override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<CarHillTask>(*this); }

  const CarHillState& state() const { return state_; }
  void set_state(const CarHillState& s) { state_ = s; }

 private:
  CarHillParams params_;
  GridSpec grid_;
  CarHillState state_;
};

/// Finite deterministic MDP with a one-hot (state, action) basis; index
/// = state * actions + action. Reaching a terminal state resets to `start`.
class TabularTask final : public Task {
 public:
  TabularTask(std::size_t states, std::size_t actions, std::vector<std::size_t> next,
              std::vector<double> reward, std::vector<bool> terminal, std::size_t start);

  std::size_t feature_count() const override { return states_ * actions_; }
  std::size_t action_count() const override { return actions_; }
  void reset(Rng&) override { state_ = start_; }
  StepOutcome step(std::size_t action, Rng& rng) override;
  void features(std::size_t action, BasisVector& out) const override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<TabularTask>(*this); }

  std::size_t state() const { return state_; }

 private:
  std::size_t states_;
  std::size_t actions_;
  std::vector<std::size_t> next_;
  std::vector<double> reward_;
  std::vector<bool> terminal_;
  std::size_t start_;
  std::size_t state_;
};

/// Thrown by generate() when the learner's numbers blow up.
class InstabilityError : public NumericalError {
 public:
  InstabilityError(std::uint64_t visited, const std::string& what);
  std::uint64_t visited() const { return visited_; }

 private:
  std::uint64_t visited_;
};

/// |mu^T phi| above this aborts a generation run.
inline constexpr double kMaxAbsQ = 1e12;

struct GenerationConfig {
  LearnerKind learner = LearnerKind::AKFQL;
  SensorNoiseMethod noise;
  std::vector<double> prior_mean;
  double prior_variance = 1.0;
  LearningRateSchedule rate;
  double exploration_temperature = 0.5;
  double gamma = 1.0;
  std::uint64_t budget = 0;
  std::vector<std::uint64_t> snapshots;  // sorted visited-state counts
  std::uint64_t seed = 0;

  void validate(std::size_t feature_count) const;
  Learner make_learner() const;
};

struct PolicySnapshot {
  std::uint64_t visited_states = 0;
  std::vector<double> weights;
};

/// Visited-state counts spaced evenly on a log scale: 0, then `per_decade`
/// points per decade from 1 up to and including `budget`.
std::vector<std::uint64_t> geometric_snapshots(std::uint64_t budget, unsigned per_decade);

std::size_t greedy_select(std::span<const double> q_means);
std::size_t boltzmann_select(std::span<const double> q_means, double tau, Rng& rng);

/// Runs the learning loop for `budget` visited states (one learner update
/// each) and returns the weight snapshots. Throws InstabilityError.
std::vector<PolicySnapshot> generate(const GenerationConfig& config, Task& task);

enum class Metric {
  Return,      // discounted sum of rewards
  MeanReward,  // average reward per step over the horizon
};

struct EvaluationSpec {
  std::size_t trials = 1;
  std::size_t horizon = 1000;
  double gamma = 1.0;
  Metric metric = Metric::Return;

  bool operator==(const EvaluationSpec&) const = default;
};

using PolicyFn = std::function<std::size_t(const Task&, Rng&)>;

/// Performance of an arbitrary policy, one value per trial, each trial from
/// a fresh initial state.
std::vector<double> evaluate_policy(const Task& prototype, const PolicyFn& policy,
                                    const EvaluationSpec& spec, Rng& rng);

/// Greedy policy w.r.t. the snapshot weights.
std::vector<double> evaluate(const PolicySnapshot& snapshot, const Task& prototype,
                             const EvaluationSpec& spec, Rng& rng);

/// Uniformly random actions.
std::vector<double> evaluate_random(const Task& prototype, const EvaluationSpec& spec, Rng& rng);

/// Stateless seed mixing (splitmix64 finalizer over base and stream id).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t run_seed(std::uint64_t master, std::size_t run);

struct CurveRow {
  std::uint64_t visited_states = 0;
  std::vector<double> per_run;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct LearningCurve {
  std::vector<std::size_t> run_ids;  // runs that completed, in order
  std::vector<CurveRow> rows;
};

struct RunAbort {
  std::size_t run = 0;
  std::uint64_t visited = 0;
  std::string diagnostic;
};

struct LearnerSpec {
  std::string name;
  GenerationConfig config;
};

struct LearnerOutcome {
  std::string name;
  LearningCurve curve;
  std::vector<RunAbort> aborts;
};

struct ExperimentOptions {
  std::size_t runs = 1;
  EvaluationSpec evaluation;
  std::uint64_t master_seed = 0;
  int threads = 1;
};

/// Generates and evaluates `runs` independent runs per learner. Run r of
/// every learner uses the same seeds, so learners are compared pairwise.
std::vector<LearnerOutcome> run_experiment(const Task& prototype,
                                           std::span<const LearnerSpec> learners,
                                           const ExperimentOptions& options);

/// Aggregates per-run performance (runs x snapshots) into curve rows.
LearningCurve aggregate(std::span<const std::uint64_t> snapshots,
                        std::span<const std::size_t> run_ids,
                        const std::vector<std::vector<double>>& performance);

}  // namespace kfql
