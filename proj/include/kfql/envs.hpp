#pragma once

// Benchmark MDP simulators. Every stochastic step takes the caller's random
// stream explicitly, so a trajectory is a pure function of its seed.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace kfql {

using Rng = std::mt19937_64;

enum class EnvKind { CartPole, Cashier, CarHill };

std::string_view to_string(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

template <class State>
struct EnvTransition {
  std::size_t action = 0;
  State next_state{};
  double reward = 0.0;
  bool terminal = false;
};

// ---------------------------------------------------------------- cart-pole

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double omega = 0.0;

  bool operator==(const CartPoleState&) const = default;
};

struct CartPoleParams {
  double cart_mass = 8.0;
  double pole_mass = 2.0;
  double pole_length = 0.5;  // pivot to centre of mass
  double gravity = 9.81;
  double cart_friction = 0.001;
  double pole_friction = 0.002;
  double control_dt = 0.1;
  double substep_dt = 0.01;
  std::vector<double> forces = {-5.0, 0.0, 5.0};
  double noise_halfwidth = 2.0;
  double fail_angle = 1.5707963267948966;
  double initial_theta_halfwidth = 0.05;
  double gamma = 1.0;

  std::size_t substeps() const;
  void validate() const;
  bool operator==(const CartPoleParams&) const = default;
};

/// Integrates one control interval under a constant total force (control
/// plus disturbance). Deterministic.
CartPoleState cartpole_advance(const CartPoleParams& params, const CartPoleState& state,
                               double total_force);

/// Angular and linear accelerations at a state, for a given force. The
/// normal-force sign uses `prev_theta_acc` (one Florian iteration).
struct CartPoleAccel {
  double theta_acc;
  double x_acc;
  double normal_force;
};
CartPoleAccel cartpole_accelerations(const CartPoleParams& params, const CartPoleState& state,
                                     double total_force, double prev_theta_acc);

/// Mechanical energy (kinetic + potential) of the frictionless system.
double cartpole_energy(const CartPoleParams& params, const CartPoleState& state);

bool cartpole_terminal(const CartPoleParams& params, const CartPoleState& state);

EnvTransition<CartPoleState> cartpole_step(const CartPoleParams& params,
                                           const CartPoleState& state, std::size_t action,
                                           Rng& rng);

CartPoleState cartpole_initial(const CartPoleParams& params, Rng& rng);

// ----------------------------------------------------- cashier's nightmare

enum class CashierCost { Linear, Uniform };

std::string_view to_string(CashierCost cost);
CashierCost parse_cashier_cost(std::string_view name);

/// g_i = i/d (Linear, i = 1..d) or 1/d (Uniform).
std::vector<double> cashier_cost_vector(std::size_t d, CashierCost cost);

/// d rows, each d Exponential(1) draws normalized to sum 1.
std::vector<double> random_routing_matrix(std::size_t d, Rng& rng);

struct CashierState {
  std::vector<int> x;

  bool operator==(const CashierState&) const = default;
};

struct CashierParams {
  std::size_t d = 100;
  int k = 200;
  std::vector<double> cost;     // length d
  std::vector<double> routing;  // d x d row-major
  double gamma = 0.99;

  static CashierParams make(std::size_t d, int k, CashierCost cost, std::uint64_t routing_seed,
                            double gamma);
  void validate() const;
};

/// Reward -g^T x at the pre-transition state; serving an empty queue leaves
/// the state unchanged. Never terminal.
EnvTransition<CashierState> cashier_step(const CashierParams& params, const CashierState& state,
                                         std::size_t action, Rng& rng);

/// In-place variant used by the generation loop; returns the reward.
double cashier_step_inplace(const CashierParams& params, CashierState& state,
                            std::size_t action, Rng& rng);

CashierState cashier_initial(const CashierParams& params, Rng& rng);

// ------------------------------------------------------------------ car-hill

struct CarHillState {
  double p = 0.0;
  double v = 0.0;

  bool operator==(const CarHillState&) const = default;
};

struct CarHillParams {
  std::vector<double> forces = {-4.0, 4.0};
  double control_dt = 0.1;
  double euler_dt = 0.001;
  double gamma = 0.999;
  double mass = 1.0;
  double gravity = 9.81;

  std::size_t substeps() const;
  void validate() const;
  bool operator==(const CarHillParams&) const = default;
};

double hill_height(double p);
double hill_slope(double p);
double hill_curvature(double p);

/// -1 if p < -1 or |v| > 3; +1 if p > 1 and |v| <= 3; 0 otherwise.
double carhill_reward(const CarHillState& state);

double carhill_acceleration(const CarHillParams& params, const CarHillState& state, double force);

EnvTransition<CarHillState> carhill_step(const CarHillParams& params, const CarHillState& state,
                                         std::size_t action);

CarHillState carhill_initial();

std::size_t action_count(EnvKind kind);

}  // namespace kfql
