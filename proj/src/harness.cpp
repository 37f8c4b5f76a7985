#include "kfql/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kfql {

// -------------------------------------------------------------------- tasks

CartPoleTask::CartPoleTask(CartPoleParams params, GridSpec grid)
    : params_(std::move(params)), grid_(std::move(grid)) {
  params_.validate();
  grid_.validate();
  if (grid_.action_count != params_.forces.size()) {
    throw std::invalid_argument("cart-pole grid action count differs from force count");
  }
}

StepOutcome CartPoleTask::step(std::size_t action, Rng& rng) {
  const auto t = cartpole_step(params_, state_, action, rng);
  state_ = t.next_state;
  return {t.reward, t.terminal};
}

void CartPoleTask::features(std::size_t action, BasisVector& out) const {
  bilinear_features(grid_, state_.theta, state_.omega, action, out);
}

CashierTask::CashierTask(CashierParams params) : params_(std::move(params)) {
  params_.validate();
  basis_.d = params_.d;
  basis_.routing = params_.routing;
  state_.x.assign(params_.d, 0);
}

StepOutcome CashierTask::step(std::size_t action, Rng& rng) {
  return {cashier_step_inplace(params_, state_, action, rng), false};
}

void CashierTask::features(std::size_t action, BasisVector& out) const {
  cashier_features(basis_, state_.x, action, out);
}

CarHillTask::CarHillTask(CarHillParams params, GridSpec grid)
    : params_(std::move(params)), grid_(std::move(grid)) {
  params_.validate();
  grid_.validate();
  if (grid_.action_count != params_.forces.size()) {
    throw std::invalid_argument("car-hill grid action count differs from force count");
  }
}

StepOutcome CarHillTask::step(std::size_t action, Rng&) {
  const auto t = carhill_step(params_, state_, action);
  state_ = t.next_state;
  return {t.reward, t.terminal};
}

void CarHillTask::features(std::size_t action, BasisVector& out) const {
  bilinear_features(grid_, state_.p, state_.v, action, out);
}

TabularTask::TabularTask(std::size_t states, std::size_t actions, std::vector<std::size_t> next,
                         std::vector<double> reward, std::vector<bool> terminal,
                         std::size_t start)
    : states_(states),
      actions_(actions),
      next_(std::move(next)),
      reward_(std::move(reward)),
      terminal_(std::move(terminal)),
      start_(start),
      state_(start) {
  if (next_.size() != states_ * actions_ || reward_.size() != states_ * actions_ ||
      terminal_.size() != states_ || start_ >= states_) {
    throw std::invalid_argument("malformed tabular MDP");
  }
  for (auto s : next_) {
    if (s >= states_) throw std::invalid_argument("tabular successor out of range");
  }
}

StepOutcome TabularTask::step(std::size_t action, Rng&) {
  if (action >= actions_) throw std::invalid_argument("tabular action out of range");
  const std::size_t idx = state_ * actions_ + action;
  state_ = next_[idx];
  return {reward_[idx], terminal_[state_]};
}

void TabularTask::features(std::size_t action, BasisVector& out) const {
  out.reset(feature_count());
  out.push(state_ * actions_ + action, 1.0);
}

// --------------------------------------------------------------- generation

InstabilityError::InstabilityError(std::uint64_t visited, const std::string& what)
    : NumericalError("numerical instability after " + std::to_string(visited) +
                     " visited states: " + what),
      visited_(visited) {}

void GenerationConfig::validate(std::size_t feature_count) const {
  if (prior_mean.size() != feature_count) {
    throw DimensionError("prior mean has " + std::to_string(prior_mean.size()) +
                         " entries, basis has " + std::to_string(feature_count));
  }
  if (!(prior_variance >= 0.0)) throw std::invalid_argument("prior variance must be >= 0");
  if (!(exploration_temperature > 0.0)) {
    throw std::invalid_argument("exploration temperature must be > 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0,1]");
  if (!std::is_sorted(snapshots.begin(), snapshots.end())) {
    throw std::invalid_argument("snapshot points must be sorted");
  }
  if (!snapshots.empty() && snapshots.back() > budget) {
    throw std::invalid_argument("snapshot point beyond the budget");
  }
  if (learner == LearnerKind::PTD) {
    rate.validate();
  } else {
    noise.validate();
  }
}

Learner GenerationConfig::make_learner() const {
  switch (learner) {
    case LearnerKind::KFQL: return Learner::kfql(prior_mean, prior_variance, noise);
    case LearnerKind::AKFQL: return Learner::akfql(prior_mean, prior_variance, noise);
    case LearnerKind::PTD: return Learner::ptd(prior_mean, rate);
  }
  throw std::logic_error("unreachable");
}

std::vector<std::uint64_t> geometric_snapshots(std::uint64_t budget, unsigned per_decade) {
  if (per_decade == 0) throw std::invalid_argument("per_decade must be >= 1");
  std::vector<std::uint64_t> points{0};
  for (unsigned k = 0;; ++k) {
    const double raw = std::pow(10.0, static_cast<double>(k) / per_decade);
    const auto point = static_cast<std::uint64_t>(std::llround(raw));
    if (point >= budget) break;
    if (point > points.back()) points.push_back(point);
  }
  if (budget > points.back()) points.push_back(budget);
  return points;
}

std::size_t greedy_select(std::span<const double> q_means) {
  if (q_means.empty()) throw std::invalid_argument("greedy_select: no actions");
  std::size_t best = 0;
  for (std::size_t a = 1; a < q_means.size(); ++a) {
    if (q_means[a] > q_means[best]) best = a;
  }
  return best;
}

std::size_t boltzmann_select(std::span<const double> q_means, double tau, Rng& rng) {
  if (q_means.empty()) throw std::invalid_argument("boltzmann_select: no actions");
  if (!(tau > 0.0)) throw std::invalid_argument("boltzmann_select: tau must be > 0");
  const double top = *std::max_element(q_means.begin(), q_means.end());
  double total = 0.0;
  for (double q : q_means) total += std::exp((q - top) / tau);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * total;
  double cumulative = 0.0;
  for (std::size_t a = 0; a < q_means.size(); ++a) {
    cumulative += std::exp((q_means[a] - top) / tau);
    if (u < cumulative) return a;
  }
  // u landed on the rounding gap at the top end.
  return greedy_select(q_means);
}

namespace {

void load_features(const Task& task, std::vector<BasisVector>& phis) {
  for (std::size_t a = 0; a < phis.size(); ++a) task.features(a, phis[a]);
}

void check_q(double q) {
  if (!std::isfinite(q)) throw NumericalError("non-finite Q estimate");
  if (std::abs(q) > kMaxAbsQ) throw NumericalError("Q estimate exceeds 1e12 in magnitude");
}

}  // namespace

std::vector<PolicySnapshot> generate(const GenerationConfig& config, Task& task) {
  config.validate(task.feature_count());
  Learner learner = config.make_learner();
  Rng rng(config.seed);

  const std::size_t actions = task.action_count();
  std::vector<BasisVector> phis(actions);
  std::vector<BasisVector> next_phis(actions);
  std::vector<double> q(actions);
  std::vector<double> next_q(actions);
  std::vector<double> next_var(actions, 0.0);

  std::vector<PolicySnapshot> snapshots;
  snapshots.reserve(config.snapshots.size());
  std::size_t next_snapshot = 0;

  task.reset(rng);
  load_features(task, phis);

  std::uint64_t visited = 0;
  try {
    for (;; ++visited) {
      while (next_snapshot < config.snapshots.size() &&
             config.snapshots[next_snapshot] == visited) {
        learner.check_finite();
        const auto w = learner.weights();
        snapshots.push_back({visited, {w.begin(), w.end()}});
        ++next_snapshot;
      }
      if (visited == config.budget) break;

      for (std::size_t a = 0; a < actions; ++a) {
        q[a] = learner.q_mean(phis[a]);
        check_q(q[a]);
      }
      const std::size_t action = boltzmann_select(q, config.exploration_temperature, rng);
      const StepOutcome outcome = task.step(action, rng);

      SuccessorSummary summary;
      summary.reward = outcome.reward;
      summary.terminal = outcome.terminal;
      summary.gamma = config.gamma;
      if (!outcome.terminal) {
        load_features(task, next_phis);
        for (std::size_t a = 0; a < actions; ++a) next_q[a] = learner.q_mean(next_phis[a]);
        if (learner.tracks_variance()) learner.q_variances(next_phis, next_var);
        summary.q_mean = next_q;
        summary.q_var = next_var;
      }

      learner.update(phis[action], summary);
      check_q(learner.q_mean(phis[action]));

      if (outcome.terminal) {
        task.reset(rng);
        load_features(task, phis);
      } else {
        std::swap(phis, next_phis);
      }
    }
  } catch (const NumericalError& e) {
    throw InstabilityError(visited, e.what());
  }
  return snapshots;
}

// --------------------------------------------------------------- evaluation

std::vector<double> evaluate_policy(const Task& prototype, const PolicyFn& policy,
                                    const EvaluationSpec& spec, Rng& rng) {
  if (spec.trials < 1) throw std::invalid_argument("evaluation needs >= 1 trial");
  auto task = prototype.clone();
  std::vector<double> results;
  results.reserve(spec.trials);
  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    task->reset(rng);
    double total = 0.0;
    double discount = 1.0;
    std::size_t steps = 0;
    while (steps < spec.horizon) {
      const std::size_t action = policy(*task, rng);
      const StepOutcome outcome = task->step(action, rng);
      total += discount * outcome.reward;
      discount *= spec.gamma;
      ++steps;
      if (outcome.terminal) break;
    }
    if (spec.metric == Metric::MeanReward) {
      results.push_back(steps == 0 ? 0.0 : total / static_cast<double>(steps));
    } else {
      results.push_back(total);
    }
  }
  return results;
}

std::vector<double> evaluate(const PolicySnapshot& snapshot, const Task& prototype,
                             const EvaluationSpec& spec, Rng& rng) {
  if (snapshot.weights.size() != prototype.feature_count()) {
    throw DimensionError("snapshot weights do not match the task basis");
  }
  BasisVector phi;
  std::vector<double> q(prototype.action_count());
  const std::span<const double> weights = snapshot.weights;
  PolicyFn greedy = [&](const Task& task, Rng&) {
    for (std::size_t a = 0; a < q.size(); ++a) {
      task.features(a, phi);
      q[a] = dot(phi, weights);
    }
    return greedy_select(q);
  };
  return evaluate_policy(prototype, greedy, spec, rng);
}

std::vector<double> evaluate_random(const Task& prototype, const EvaluationSpec& spec, Rng& rng) {
  PolicyFn random = [](const Task& task, Rng& r) {
    std::uniform_int_distribution<std::size_t> pick(0, task.action_count() - 1);
    return pick(r);
  };
  return evaluate_policy(prototype, random, spec, rng);
}

// --------------------------------------------------------------- experiments

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(base ^ mix(stream));
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, run); }

namespace {

constexpr std::uint64_t kGenerationStream = 0x67656eULL;
constexpr std::uint64_t kEvaluationStream = 0x6576616cULL;

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

struct RunResult {
  bool aborted = false;
  RunAbort abort;
  std::vector<double> performance;  // one per snapshot
  std::exception_ptr failure;
};

RunResult execute_run(const Task& prototype, const GenerationConfig& base, std::size_t run,
                      const ExperimentOptions& options) {
  RunResult result;
  const std::uint64_t seed = run_seed(options.master_seed, run);
  GenerationConfig config = base;
  config.seed = derive_seed(seed, kGenerationStream);
  auto task = prototype.clone();
  std::vector<PolicySnapshot> snapshots;
  try {
    snapshots = generate(config, *task);
  } catch (const InstabilityError& e) {
    result.aborted = true;
    result.abort = {run, e.visited(), e.what()};
    return result;
  }
  result.performance.reserve(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    Rng eval_rng(derive_seed(derive_seed(seed, kEvaluationStream), i));
    const auto trials = evaluate(snapshots[i], prototype, options.evaluation, eval_rng);
    result.performance.push_back(mean_of(trials));
  }
  return result;
}

}  // namespace

LearningCurve aggregate(std::span<const std::uint64_t> snapshots,
                        std::span<const std::size_t> run_ids,
                        const std::vector<std::vector<double>>& performance) {
  if (performance.size() != run_ids.size()) {
    throw DimensionError("aggregate: one performance row per run expected");
  }
  LearningCurve curve;
  curve.run_ids.assign(run_ids.begin(), run_ids.end());
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    CurveRow row;
    row.visited_states = snapshots[s];
    for (const auto& per_run : performance) {
      if (per_run.size() != snapshots.size()) throw DimensionError("aggregate: ragged input");
      row.per_run.push_back(per_run[s]);
    }
    const std::size_t count = row.per_run.size();
    row.mean = mean_of(row.per_run);
    if (count >= 2) {
      double ss = 0.0;
      for (double v : row.per_run) ss += (v - row.mean) * (v - row.mean);
      row.stderr_ = std::sqrt(ss / static_cast<double>(count - 1)) /
                    std::sqrt(static_cast<double>(count));
    }
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

std::vector<LearnerOutcome> run_experiment(const Task& prototype,
                                           std::span<const LearnerSpec> learners,
                                           const ExperimentOptions& options) {
  if (options.runs < 1) throw std::invalid_argument("runs must be >= 1");
  for (const auto& spec : learners) spec.config.validate(prototype.feature_count());

  const std::size_t runs = options.runs;
  const std::size_t jobs = learners.size() * runs;
  std::vector<RunResult> results(jobs);

  const auto job_count = static_cast<std::ptrdiff_t>(jobs);
  int threads = std::max(1, options.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#else
  (void)threads;
#endif
  for (std::ptrdiff_t j = 0; j < job_count; ++j) {
    const auto job = static_cast<std::size_t>(j);
    try {
      results[job] = execute_run(prototype, learners[job / runs].config, job % runs, options);
    } catch (...) {
      results[job].failure = std::current_exception();
    }
  }

  std::vector<LearnerOutcome> outcomes;
  for (std::size_t l = 0; l < learners.size(); ++l) {
    LearnerOutcome outcome;
    outcome.name = learners[l].name;
    std::vector<std::size_t> ids;
    std::vector<std::vector<double>> performance;
    for (std::size_t r = 0; r < runs; ++r) {
      auto& result = results[l * runs + r];
      if (result.failure) std::rethrow_exception(result.failure);
      if (result.aborted) {
        outcome.aborts.push_back(std::move(result.abort));
      } else {
        ids.push_back(r);
        performance.push_back(std::move(result.performance));
      }
    }
    outcome.curve = aggregate(learners[l].config.snapshots, ids, performance);
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

}  // namespace kfql
