#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "kfql/harness.hpp"
#include "oracles.hpp"

using namespace kfql;

namespace {

// Three states, two actions, continuing. Rows are (state, action).
TabularTask three_state_mdp() {
  return TabularTask(3, 2, {1, 2, 2, 0, 0, 1}, {0.0, 1.0, 2.0, -1.0, 0.5, 3.0},
                     {false, false, false}, 0);
}

GenerationConfig tabular_config(LearnerKind kind) {
  GenerationConfig g;
  g.learner = kind;
  g.noise = {NoiseMethod::Max, 1e-4, 1.0};
  g.prior_mean.assign(6, 0.0);
  g.prior_variance = 100.0;
  g.rate = {0.5, 1e4};
  g.exploration_temperature = 5.0;
  g.gamma = 0.5;
  g.budget = 50000;
  g.snapshots = {0, 50000};
  g.seed = 4;
  return g;
}

}  // namespace

TEST_CASE("geometric snapshot points") {
  CHECK(geometric_snapshots(1000, 1) == std::vector<std::uint64_t>{0, 1, 10, 100, 1000});
  CHECK(geometric_snapshots(50, 1) == std::vector<std::uint64_t>{0, 1, 10, 50});
  const auto dense = geometric_snapshots(100000, 10);
  CHECK(std::is_sorted(dense.begin(), dense.end()));
  CHECK(std::adjacent_find(dense.begin(), dense.end()) == dense.end());
  CHECK(dense.back() == 100000);
  CHECK_THROWS(geometric_snapshots(10, 0));
}

TEST_CASE("greedy selection breaks ties toward the lowest index") {
  const std::vector<double> q{1.0, 3.0, 3.0};
  CHECK(greedy_select(q) == 1);
  CHECK_THROWS(greedy_select(std::vector<double>{}));
}

TEST_CASE("boltzmann selection frequencies") {
  Rng rng(1);
  const int draws = 100000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) ones += boltzmann_select(std::vector<double>{0.0, 1.0}, 1.0, rng) == 1;
  const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(std::abs(ones - draws * p) <= 3 * std::sqrt(draws * p * (1 - p)));

  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[boltzmann_select(std::vector<double>(4, 2.0), 1.0, rng)];
  for (int c : counts) CHECK(std::abs(c - draws / 4.0) <= 3 * std::sqrt(draws * 0.25 * 0.75));
}

TEST_CASE("boltzmann selection at tiny temperature is greedy") {
  Rng rng(2);
  const std::vector<double> q{0.1, 0.7, -3.0, 0.69};
  for (int i = 0; i < 100; ++i) CHECK(boltzmann_select(q, 1e-9, rng) == greedy_select(q));
  const std::vector<double> huge{1e300, -1e300};
  CHECK(boltzmann_select(huge, 1e-3, rng) == 0);
}

TEST_CASE("seed derivation is deterministic and spreads") {
  CHECK(derive_seed(5, 1) == derive_seed(5, 1));
  std::set<std::uint64_t> seen;
  for (std::size_t r = 0; r < 1000; ++r) seen.insert(run_seed(42, r));
  CHECK(seen.size() == 1000);
  CHECK(run_seed(42, 0) != run_seed(43, 0));
}

TEST_CASE("aggregate computes mean and standard error") {
  const std::vector<std::uint64_t> snaps{0, 10};
  const std::vector<std::size_t> ids{0, 2, 3};
  const std::vector<std::vector<double>> perf{{1.0, 2.0}, {3.0, 2.0}, {5.0, 2.0}};
  const auto curve = aggregate(snaps, ids, perf);
  REQUIRE(curve.rows.size() == 2);
  CHECK(curve.rows[0].mean == 3.0);
  CHECK(curve.rows[0].stderr_ == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK(curve.rows[1].stderr_ == 0.0);
  CHECK(curve.run_ids == ids);

  const auto single = aggregate(snaps, std::vector<std::size_t>{1},
                                std::vector<std::vector<double>>{{4.0, 4.0}});
  CHECK(single.rows[0].mean == 4.0);
  CHECK(single.rows[0].stderr_ == 0.0);
}

TEST_CASE("tabular task mechanics") {
  auto task = three_state_mdp();
  Rng rng(0);
  CHECK(task.feature_count() == 6);
  BasisVector phi;
  task.features(1, phi);
  CHECK(phi.entries()[0].index == 1);
  const auto out = task.step(1, rng);
  CHECK(out.reward == 1.0);
  CHECK(task.state() == 2);
}

TEST_CASE("generation reproduces value iteration on a small MDP") {
  auto task = three_state_mdp();
  const auto q = oracle::value_iteration(3, 2, {1, 2, 2, 0, 0, 1},
                                         {0.0, 1.0, 2.0, -1.0, 0.5, 3.0},
                                         {false, false, false}, 0.5);
  for (auto kind : {LearnerKind::PTD, LearnerKind::KFQL, LearnerKind::AKFQL}) {
    CAPTURE(to_string(kind));
    const auto snaps = generate(tabular_config(kind), task);
    REQUIRE(snaps.size() == 2);
    CHECK(snaps[0].weights == std::vector<double>(6, 0.0));
    double err = 0.0;
    for (std::size_t i = 0; i < 6; ++i) err = std::max(err, std::abs(snaps[1].weights[i] - q[i]));
    CHECK(err < (kind == LearnerKind::PTD ? 1e-3 : 1e-2));
  }
}

TEST_CASE("generation is deterministic for a fixed seed") {
  auto task = three_state_mdp();
  auto cfg = tabular_config(LearnerKind::AKFQL);
  cfg.budget = 500;
  cfg.snapshots = {0, 100, 500};
  const auto a = generate(cfg, task);
  const auto b = generate(cfg, task);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].weights == b[i].weights);
  cfg.seed = 5;
  CHECK(generate(cfg, task)[2].weights != a[2].weights);
}

TEST_CASE("diverging learners raise instability with the visit count") {
  auto task = three_state_mdp();
  auto cfg = tabular_config(LearnerKind::PTD);
  cfg.rate = {50.0, 1e9};
  cfg.gamma = 1.0;
  try {
    generate(cfg, task);
    FAIL("expected an instability");
  } catch (const InstabilityError& e) {
    CHECK(e.visited() > 0);
    CHECK(e.visited() < cfg.budget);
  }
}

TEST_CASE("generation validates its config") {
  auto task = three_state_mdp();
  auto cfg = tabular_config(LearnerKind::KFQL);
  cfg.prior_mean.resize(5);
  CHECK_THROWS_AS(generate(cfg, task), DimensionError);
  cfg = tabular_config(LearnerKind::KFQL);
  cfg.snapshots = {10, 5};
  CHECK_THROWS(generate(cfg, task));
  cfg = tabular_config(LearnerKind::KFQL);
  cfg.exploration_temperature = 0.0;
  CHECK_THROWS(generate(cfg, task));
}

TEST_CASE("policy evaluation metrics") {
  auto task = three_state_mdp();
  // Always action 1: rewards 1 (0->2), 3 (2->1), -1 (1->0), then repeat.
  const PolicyFn act1 = [](const Task&, Rng&) { return std::size_t{1}; };
  Rng rng(3);
  EvaluationSpec ret{2, 3, 0.5, Metric::Return};
  const auto r = evaluate_policy(task, act1, ret, rng);
  CHECK(r == std::vector<double>{1.0 + 0.5 * 3.0 - 0.25, 1.0 + 0.5 * 3.0 - 0.25});
  EvaluationSpec mean{1, 6, 1.0, Metric::MeanReward};
  CHECK(evaluate_policy(task, act1, mean, rng)[0] == doctest::Approx(1.0));

  PolicySnapshot snap{0, {0, 1, 0, 1, 0, 1}};
  CHECK(evaluate(snap, task, ret, rng) == r);
}

TEST_CASE("experiment results do not depend on thread count") {
  auto task = three_state_mdp();
  auto cfg = tabular_config(LearnerKind::KFQL);
  cfg.budget = 300;
  cfg.snapshots = {0, 30, 300};
  std::vector<LearnerSpec> specs{{"a", cfg}, {"b", tabular_config(LearnerKind::PTD)}};
  specs[1].config.budget = 300;
  specs[1].config.snapshots = {0, 30, 300};
  ExperimentOptions opts{4, {2, 20, 0.9, Metric::Return}, 77, 1};
  const auto serial = run_experiment(task, specs, opts);
  opts.threads = 3;
  const auto parallel = run_experiment(task, specs, opts);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(serial[l].curve.rows[r].per_run == parallel[l].curve.rows[r].per_run);
    }
  }
}

TEST_CASE("experiments record aborted runs and keep the rest") {
  auto task = three_state_mdp();
  auto bad = tabular_config(LearnerKind::PTD);
  bad.rate = {50.0, 1e9};
  bad.gamma = 1.0;
  std::vector<LearnerSpec> specs{{"bad", bad}};
  ExperimentOptions opts{3, {1, 5, 1.0, Metric::Return}, 1, 1};
  const auto out = run_experiment(task, specs, opts);
  CHECK(out[0].aborts.size() == 3);
  CHECK(out[0].curve.run_ids.empty());
  CHECK(out[0].aborts[0].diagnostic.find("numerical instability") != std::string::npos);
}
