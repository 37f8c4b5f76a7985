#include "kfql/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kfql {

namespace {

double sgn(double v) { return static_cast<double>((0.0 < v) - (v < 0.0)); }

std::size_t whole_substeps(double interval, double dt, const char* what) {
  if (!(dt > 0.0) || !(interval > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
  const double ratio = interval / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw std::invalid_argument(std::string(what) + " must divide the control interval");
  }
  return static_cast<std::size_t>(rounded);
}

void check_action(std::size_t action, std::size_t count) {
  if (action >= count) {
    throw std::invalid_argument("action " + std::to_string(action) + " out of range [0," +
                                std::to_string(count) + ")");
  }
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::CartPole: return "cartpole";
    case EnvKind::Cashier: return "cashier";
    case EnvKind::CarHill: return "carhill";
  }
  return "?";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "cartpole") return EnvKind::CartPole;
  if (name == "cashier") return EnvKind::Cashier;
  if (name == "carhill") return EnvKind::CarHill;
  throw std::invalid_argument("unknown environment '" + std::string(name) +
                              "' (expected cartpole|cashier|carhill)");
}

std::size_t action_count(EnvKind kind) {
  switch (kind) {
    case EnvKind::CartPole: return 3;
    case EnvKind::Cashier: return 100;
    case EnvKind::CarHill: return 2;
  }
  return 0;
}

// ---------------------------------------------------------------- cart-pole

std::size_t CartPoleParams::substeps() const {
  return whole_substeps(control_dt, substep_dt, "substep_dt");
}

void CartPoleParams::validate() const {
  (void)substeps();
  if (!(cart_mass > 0.0) || !(pole_mass > 0.0) || !(pole_length > 0.0)) {
    throw std::invalid_argument("cart-pole masses and length must be > 0");
  }
  if (forces.empty()) throw std::invalid_argument("cart-pole needs at least one force");
  if (!(noise_halfwidth >= 0.0)) throw std::invalid_argument("noise_halfwidth must be >= 0");
  if (!(fail_angle > 0.0)) throw std::invalid_argument("fail_angle must be > 0");
  if (!(initial_theta_halfwidth >= 0.0)) {
    throw std::invalid_argument("initial_theta_halfwidth must be >= 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0,1]");
}

CartPoleAccel cartpole_accelerations(const CartPoleParams& params, const CartPoleState& s,
                                     double force, double prev_theta_acc) {
  const double mc = params.cart_mass;
  const double mp = params.pole_mass;
  const double l = params.pole_length;
  const double g = params.gravity;
  const double total = mc + mp;
  const double sin_t = std::sin(s.theta);
  const double cos_t = std::cos(s.theta);
  const double w2 = s.omega * s.omega;

  const double normal_prev = total * g - mp * l * (prev_theta_acc * sin_t + w2 * cos_t);
  const double slide = sgn(normal_prev * s.x_dot);
  const double mu_c = params.cart_friction;

  const double numer =
      g * sin_t +
      cos_t * ((-force - mp * l * w2 * (sin_t + mu_c * slide * cos_t)) / total +
               mu_c * g * slide) -
      params.pole_friction * s.omega / (mp * l);
  const double denom = l * (4.0 / 3.0 - mp * cos_t / total * (cos_t - mu_c * slide));
  const double theta_acc = numer / denom;

  const double normal = total * g - mp * l * (theta_acc * sin_t + w2 * cos_t);
  const double x_acc =
      (force + mp * l * (w2 * sin_t - theta_acc * cos_t) - mu_c * normal * slide) / total;
  return {theta_acc, x_acc, normal};
}

CartPoleState cartpole_advance(const CartPoleParams& params, const CartPoleState& state,
                               double total_force) {
  const std::size_t steps = params.substeps();
  const double dt = params.substep_dt;
  CartPoleState s = state;
  double prev_theta_acc = 0.0;
  // Semi-implicit Euler: velocities first, positions from the new velocities.
  for (std::size_t i = 0; i < steps; ++i) {
    const auto acc = cartpole_accelerations(params, s, total_force, prev_theta_acc);
    s.x_dot += dt * acc.x_acc;
    s.omega += dt * acc.theta_acc;
    s.x += dt * s.x_dot;
    s.theta += dt * s.omega;
    prev_theta_acc = acc.theta_acc;
  }
  return s;
}

double cartpole_energy(const CartPoleParams& params, const CartPoleState& s) {
  const double mp = params.pole_mass;
  const double l = params.pole_length;
  const double total = params.cart_mass + mp;
  const double kinetic = 0.5 * total * s.x_dot * s.x_dot +
                         mp * l * s.x_dot * s.omega * std::cos(s.theta) +
                         0.5 * (4.0 / 3.0) * mp * l * l * s.omega * s.omega;
  return kinetic + mp * params.gravity * l * std::cos(s.theta);
}

bool cartpole_terminal(const CartPoleParams& params, const CartPoleState& state) {
  return std::abs(state.theta) > params.fail_angle;
}

EnvTransition<CartPoleState> cartpole_step(const CartPoleParams& params,
                                           const CartPoleState& state, std::size_t action,
                                           Rng& rng) {
  check_action(action, params.forces.size());
  std::uniform_real_distribution<double> noise(-params.noise_halfwidth, params.noise_halfwidth);
  const double disturbance = params.noise_halfwidth > 0.0 ? noise(rng) : 0.0;
  EnvTransition<CartPoleState> t;
  t.action = action;
  t.next_state = cartpole_advance(params, state, params.forces[action] + disturbance);
  t.terminal = cartpole_terminal(params, t.next_state);
  t.reward = t.terminal ? 0.0 : 1.0;
  return t;
}

CartPoleState cartpole_initial(const CartPoleParams& params, Rng& rng) {
  CartPoleState s;
  if (params.initial_theta_halfwidth > 0.0) {
    std::uniform_real_distribution<double> theta(-params.initial_theta_halfwidth,
                                                 params.initial_theta_halfwidth);
    s.theta = theta(rng);
  }
  return s;
}

// ----------------------------------------------------- cashier's nightmare

std::string_view to_string(CashierCost cost) {
  return cost == CashierCost::Linear ? "linear" : "uniform";
}

CashierCost parse_cashier_cost(std::string_view name) {
  if (name == "linear") return CashierCost::Linear;
  if (name == "uniform") return CashierCost::Uniform;
  throw std::invalid_argument("unknown cashier cost '" + std::string(name) +
                              "' (expected linear|uniform)");
}

std::vector<double> cashier_cost_vector(std::size_t d, CashierCost cost) {
  std::vector<double> g(d);
  const double dd = static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    g[i] = cost == CashierCost::Linear ? static_cast<double>(i + 1) / dd : 1.0 / dd;
  }
  return g;
}

std::vector<double> random_routing_matrix(std::size_t d, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      p[i * d + j] = expo(rng);
      sum += p[i * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) p[i * d + j] /= sum;
  }
  return p;
}

CashierParams CashierParams::make(std::size_t d, int k, CashierCost cost,
                                  std::uint64_t routing_seed, double gamma) {
  Rng rng(routing_seed);
  CashierParams params;
  params.d = d;
  params.k = k;
  params.cost = cashier_cost_vector(d, cost);
  params.routing = random_routing_matrix(d, rng);
  params.gamma = gamma;
  params.validate();
  return params;
}

void CashierParams::validate() const {
  if (d == 0) throw std::invalid_argument("cashier needs d >= 1");
  if (k < 0) throw std::invalid_argument("cashier needs k >= 0");
  if (cost.size() != d) throw std::invalid_argument("cashier cost vector must have length d");
  for (double c : cost) {
    if (!std::isfinite(c)) throw std::invalid_argument("cashier cost must be finite");
  }
  if (routing.size() != d * d) throw std::invalid_argument("routing must be d x d");
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!(routing[i * d + j] >= 0.0)) throw std::invalid_argument("routing entries must be >= 0");
      sum += routing[i * d + j];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("routing rows must sum to 1");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0,1]");
}

double cashier_step_inplace(const CashierParams& params, CashierState& state,
                            std::size_t action, Rng& rng) {
  check_action(action, params.d);
  double cost = 0.0;
  for (std::size_t i = 0; i < params.d; ++i) cost += params.cost[i] * state.x[i];
  if (state.x[action] > 0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    const double* row = params.routing.data() + action * params.d;
    std::size_t dest = params.d - 1;
    double cumulative = 0.0;
    for (std::size_t j = 0; j < params.d; ++j) {
      cumulative += row[j];
      if (u < cumulative) {
        dest = j;
        break;
      }
    }
    --state.x[action];
    ++state.x[dest];
  }
  return -cost;
}

EnvTransition<CashierState> cashier_step(const CashierParams& params, const CashierState& state,
                                         std::size_t action, Rng& rng) {
  EnvTransition<CashierState> t;
  t.action = action;
  t.next_state = state;
  t.reward = cashier_step_inplace(params, t.next_state, action, rng);
  t.terminal = false;
  return t;
}

CashierState cashier_initial(const CashierParams& params, Rng& rng) {
  CashierState s;
  s.x.assign(params.d, 0);
  std::uniform_int_distribution<std::size_t> queue(0, params.d - 1);
  for (int job = 0; job < params.k; ++job) ++s.x[queue(rng)];
  return s;
}

// ------------------------------------------------------------------ car-hill

std::size_t CarHillParams::substeps() const {
  return whole_substeps(control_dt, euler_dt, "euler_dt");
}

void CarHillParams::validate() const {
  (void)substeps();
  if (forces.empty()) throw std::invalid_argument("car-hill needs at least one force");
  if (!(mass > 0.0)) throw std::invalid_argument("car-hill mass must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in [0,1]");
}

double hill_height(double p) { return p < 0.0 ? p * p + p : p / std::sqrt(1.0 + 5.0 * p * p); }

double hill_slope(double p) {
  if (p < 0.0) return 2.0 * p + 1.0;
  return 1.0 / std::pow(1.0 + 5.0 * p * p, 1.5);
}

double hill_curvature(double p) {
  if (p < 0.0) return 2.0;
  return -15.0 * p / std::pow(1.0 + 5.0 * p * p, 2.5);
}

double carhill_reward(const CarHillState& s) {
  if (s.p < -1.0 || std::abs(s.v) > 3.0) return -1.0;
  if (s.p > 1.0) return 1.0;
  return 0.0;
}

double carhill_acceleration(const CarHillParams& params, const CarHillState& s, double force) {
  const double slope = hill_slope(s.p);
  const double denom = 1.0 + slope * slope;
  return force / (params.mass * denom) - params.gravity * slope / denom -
         s.v * s.v * slope * hill_curvature(s.p) / denom;
}

EnvTransition<CarHillState> carhill_step(const CarHillParams& params, const CarHillState& state,
                                         std::size_t action) {
  check_action(action, params.forces.size());
  const std::size_t steps = params.substeps();
  const double dt = params.euler_dt;
  const double force = params.forces[action];
  CarHillState s = state;
  for (std::size_t i = 0; i < steps; ++i) {
    const double acc = carhill_acceleration(params, s, force);
    s.p += dt * s.v;
    s.v += dt * acc;
  }
  EnvTransition<CarHillState> t;
  t.action = action;
  t.next_state = s;
  t.reward = carhill_reward(s);
  t.terminal = t.reward != 0.0;
  return t;
}

CarHillState carhill_initial() { return {-0.5, 0.0}; }

}  // namespace kfql
