#pragma once

// Weight learners: Kalman filter Q-learning with full covariance (KFQL),
// its diagonal approximation (AKFQL), and projected TD-learning (PTD).

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kfql/core.hpp"

namespace kfql {

enum class NoiseMethod { Policy, Average, Max, Boltzmann };

std::string_view to_string(NoiseMethod method);
NoiseMethod parse_noise_method(std::string_view name);

/// How the per-observation variance is formed from the successor actions'
/// predicted variances.
struct SensorNoiseMethod {
  NoiseMethod kind = NoiseMethod::Max;
  double epsilon0 = 0.0;
  double temperature = 1.0;  // only read by Boltzmann

  void validate() const;
  bool operator==(const SensorNoiseMethod&) const = default;
};

/// alpha(t) = s * c / (c + t)
struct LearningRateSchedule {
  double s = 0.1;
  double c = 1000.0;

  void validate() const;
  bool operator==(const LearningRateSchedule&) const = default;
};

double learning_rate(const LearningRateSchedule& schedule, std::uint64_t t);

/// What the learner needs to know about s' to form a sample update. The
/// spans are views into caller-owned buffers, one entry per successor action.
struct SuccessorSummary {
  std::span<const double> q_mean;
  std::span<const double> q_var;
  double reward = 0.0;
  bool terminal = false;
  double gamma = 1.0;
};

QEstimate predict(const WeightBelief& belief, const BasisVector& phi);

std::vector<double> kalman_gain_full(const WeightBelief& belief, const BasisVector& phi,
                                     double eps);
WeightBelief observe_full(WeightBelief belief, const Observation& obs);

std::vector<double> kalman_gain_diag(const WeightBelief& belief, const BasisVector& phi,
                                     double eps);
WeightBelief observe_diag(WeightBelief belief, const Observation& obs);

/// Dispatches on the covariance representation.
WeightBelief observe(WeightBelief belief, const Observation& obs);

/// nu = R + gamma * max_a' q_mean(a'), or R when s' is terminal.
double sample_target(const SuccessorSummary& summary);

/// eps = epsilon0 + gamma^2 * (assessment variance of s'); epsilon0 alone
/// when s' is terminal.
double sensor_noise(const SensorNoiseMethod& method, const SuccessorSummary& summary);

/// r <- r + alpha(t) * phi * (target - r^T phi)
std::vector<double> ptd_update(std::vector<double> weights, const LearningRateSchedule& schedule,
                               std::uint64_t t, const BasisVector& phi, double target);

enum class LearnerKind { KFQL, AKFQL, PTD };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

/// A learner instance owned by one generation run.
class Learner {
 public:
  static Learner kfql(std::vector<double> prior_mean, double prior_variance,
                      SensorNoiseMethod noise);
  static Learner akfql(std::vector<double> prior_mean, double prior_variance,
                       SensorNoiseMethod noise);
  static Learner ptd(std::vector<double> initial_weights, LearningRateSchedule schedule);

  LearnerKind kind() const { return kind_; }
  std::size_t size() const { return weights().size(); }

  /// Current point estimate of the weights (mu for Kalman learners).
  std::span<const double> weights() const;

  double q_mean(const BasisVector& phi) const;
  /// Zero for PTD, which keeps no uncertainty.
  double q_variance(const BasisVector& phi) const;
  bool tracks_variance() const { return kind_ != LearnerKind::PTD; }

  /// Predicted variances of a batch of successor features (raw values
  /// pass through the round-off clamp).
  void q_variances(std::span<const BasisVector> phis, std::span<double> out) const;

  /// One sample update from the transition (s, a) -> s'.
  void update(const BasisVector& phi, const SuccessorSummary& summary);

  std::uint64_t update_count() const { return updates_; }

  /// Throws NumericalError on any non-finite mean or covariance entry.
  void check_finite() const;

  const WeightBelief* belief() const { return std::get_if<WeightBelief>(&state_); }

 private:
  struct PtdState {
    std::vector<double> weights;
    LearningRateSchedule schedule;
  };

  Learner(LearnerKind kind, std::variant<WeightBelief, PtdState> state, SensorNoiseMethod noise);

  void update_full(const BasisVector& phi, double target, double eps);
  void update_diag(const BasisVector& phi, double target, double eps);

  LearnerKind kind_;
  std::variant<WeightBelief, PtdState> state_;
  SensorNoiseMethod noise_;
  std::uint64_t updates_ = 0;
  std::vector<double> scratch_row_;
  std::vector<double> scratch_gain_;
};

}  // namespace kfql
