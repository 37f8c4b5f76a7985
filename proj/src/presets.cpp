// Built-in experiment configurations. Hyperparameters of the "-paper"
// presets follow the published benchmark settings; run counts and budgets
// are full scale, so reduce them with --set for quick looks.

#include <string>

#include "kfql/config.hpp"

namespace kfql {

namespace {

constexpr const char* kCartPolePaper = R"json({
  // Balance a pole on a cart; reward 1 per step until the pole falls.
  "environment": {"kind": "cartpole"},
  "evaluation": {"trials": 1, "horizon": 72000, "gamma": 1.0, "metric": "return"},
  "runs": 50,
  "seed": 20120101,
  "output": "out/cartpole-paper",
  "defaults": {
    "sensor_noise": {"method": "max", "epsilon0": 0.1},
    "prior": {"mean": 0.0, "variance": 10000},
    "learning_rate": {"s": 0.5, "c": 1e6},
    "exploration_temperature": 2.0,
    "budget": 1000000,
    "snapshots": {"per_decade": 10}
  },
  "learners": [
    {"name": "KFQL", "kind": "kfql"},
    {"name": "AKFQL", "kind": "akfql"},
    {"name": "PTD", "kind": "ptd"}
  ]
})json";

constexpr const char* kCashierPaper = R"json({
  // 100 queues, 200 jobs, holding cost g_i = i/d; serve one queue per step.
  "environment": {"kind": "cashier", "queues": 100, "jobs": 200, "cost": "linear",
                  "routing_seed": 7, "gamma": 0.99},
  "evaluation": {"trials": 1, "horizon": 1000, "metric": "mean_reward"},
  "runs": 32,
  "seed": 20120102,
  "output": "out/cashier-paper",
  "defaults": {
    "sensor_noise": {"method": "max", "epsilon0": 1.0},
    "prior": {"mean": 0.0, "variance": 20},
    "learning_rate": {"s": 0.1, "c": 1e3},
    "exploration_temperature": 50,
    "budget": 100000,
    "snapshots": {"per_decade": 10}
  },
  "learners": [
    {"name": "KFQL", "kind": "kfql"},
    {"name": "AKFQL", "kind": "akfql"},
    {"name": "PTD", "kind": "ptd"}
  ]
})json";

constexpr const char* kCarHillPaper = R"json({
  // Underpowered car in a valley; +1 for reaching the summit slowly.
  "environment": {"kind": "carhill"},
  "evaluation": {"trials": 1, "horizon": 1000, "gamma": 0.999, "metric": "return"},
  "runs": 32,
  "seed": 20120103,
  "output": "out/carhill-paper",
  "defaults": {
    "sensor_noise": {"method": "max", "epsilon0": 0.5},
    "prior": {"mean": "carhill", "variance": 0.1},
    "learning_rate": {"s": 0.1, "c": 1e3},
    "exploration_temperature": 0.02,
    "budget": 1000000,
    "snapshots": {"per_decade": 10}
  },
  "learners": [
    {"name": "KFQL", "kind": "kfql"},
    {"name": "AKFQL", "kind": "akfql"},
    {"name": "PTD", "kind": "ptd"}
  ]
})json";

constexpr const char* kSmoke = R"json({
  // Seconds-long cart-pole run exercising every learner.
  "environment": {"kind": "cartpole"},
  "evaluation": {"trials": 2, "horizon": 500, "gamma": 1.0, "metric": "return"},
  "runs": 2,
  "seed": 1,
  "output": "out/smoke",
  "defaults": {
    "sensor_noise": {"method": "max", "epsilon0": 0.1},
    "prior": {"mean": 0.0, "variance": 10000},
    "learning_rate": {"s": 0.5, "c": 1e6},
    "budget": 2000,
    "snapshots": {"per_decade": 2}
  },
  "learners": [
    {"name": "KFQL", "kind": "kfql"},
    {"name": "AKFQL", "kind": "akfql"},
    {"name": "PTD", "kind": "ptd"}
  ]
})json";

}  // namespace

std::vector<PresetInfo> preset_list() {
  return {
      {"cartpole-paper", "Cart-Pole, KFQL/AKFQL/PTD, 50 runs x 1e6 visited states"},
      {"cashier-paper", "Cashier's Nightmare (100 queues, 200 jobs), 32 runs x 1e5 visited states"},
      {"carhill-paper", "Car-Hill, KFQL/AKFQL/PTD, 32 runs x 1e6 visited states"},
      {"smoke", "tiny Cart-Pole run for checking an installation"},
  };
}

std::string preset_text(std::string_view name) {
  if (name == "cartpole-paper") return kCartPolePaper;
  if (name == "cashier-paper") return kCashierPaper;
  if (name == "carhill-paper") return kCarHillPaper;
  if (name == "smoke") return kSmoke;
  throw ConfigError("", "unknown preset '" + std::string(name) + "'");
}

}  // namespace kfql
