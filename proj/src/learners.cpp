#include "kfql/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kfql/kernels.hpp"

namespace kfql {

namespace {

void require_positive_total(double total) {
  if (!(total > 0.0) || !std::isfinite(total)) {
    std::ostringstream msg;
    msg << "degenerate update: total variance " << total;
    throw NumericalError(msg.str());
  }
}

void check_belief_dims(const WeightBelief& belief, const BasisVector& phi) {
  if (belief.mean.size() != phi.size() || dimension(belief.covariance) != phi.size()) {
    throw DimensionError("belief and basis vector dimensions differ");
  }
}

// In-place full-covariance observation update. `row` and `gain` are scratch.
void observe_full_inplace(WeightBelief& belief, const BasisVector& phi, double value,
                          double noise, std::vector<double>& row, std::vector<double>& gain) {
  check_belief_dims(belief, phi);
  auto& sigma = std::get<FullCovariance>(belief.covariance);
  const std::size_t n = sigma.n;
  row.resize(n);
  gain.resize(n);
  kernels::sparse_row_combination(sigma, phi, row);
  const double predicted_var = clamp_variance(dot(phi, row));
  const double total = predicted_var + noise;
  require_positive_total(total);

  const double innovation = value - dot(phi, belief.mean);
  for (std::size_t i = 0; i < n; ++i) gain[i] = row[i] / total;
  for (std::size_t i = 0; i < n; ++i) belief.mean[i] += gain[i] * innovation;
  kernels::rank_one_downdate_symmetrize(sigma, gain, row);
}

void observe_diag_inplace(WeightBelief& belief, const BasisVector& phi, double value,
                          double noise) {
  check_belief_dims(belief, phi);
  auto& var = std::get<DiagonalCovariance>(belief.covariance).variances;
  const double total = quadratic_form(phi, std::get<DiagonalCovariance>(belief.covariance)) + noise;
  require_positive_total(total);

  const double innovation = value - dot(phi, belief.mean);
  for (const auto& e : phi.entries()) {
    const double g = var[e.index] * e.value / total;
    belief.mean[e.index] += g * innovation;
    var[e.index] = std::max(0.0, (1.0 - g * e.value) * var[e.index]);
  }
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

std::string_view to_string(NoiseMethod method) {
  switch (method) {
    case NoiseMethod::Policy: return "policy";
    case NoiseMethod::Average: return "average";
    case NoiseMethod::Max: return "max";
    case NoiseMethod::Boltzmann: return "boltzmann";
  }
  return "?";
}

NoiseMethod parse_noise_method(std::string_view name) {
  if (name == "policy") return NoiseMethod::Policy;
  if (name == "average") return NoiseMethod::Average;
  if (name == "max") return NoiseMethod::Max;
  if (name == "boltzmann") return NoiseMethod::Boltzmann;
  throw std::invalid_argument("unknown sensor-noise method '" + std::string(name) +
                              "' (expected policy|average|max|boltzmann)");
}

void SensorNoiseMethod::validate() const {
  if (!(epsilon0 >= 0.0) || !std::isfinite(epsilon0)) {
    throw std::invalid_argument("epsilon0 must be finite and >= 0");
  }
  if (kind == NoiseMethod::Boltzmann && !(temperature > 0.0)) {
    throw std::invalid_argument("Boltzmann temperature must be > 0");
  }
}

void LearningRateSchedule::validate() const {
  if (!(s > 0.0) || !(c > 0.0)) throw std::invalid_argument("learning rate s and c must be > 0");
}

double learning_rate(const LearningRateSchedule& schedule, std::uint64_t t) {
  return schedule.s * schedule.c / (schedule.c + static_cast<double>(t));
}

QEstimate predict(const WeightBelief& belief, const BasisVector& phi) {
  return {dot(phi, belief.mean), quadratic_form(phi, belief.covariance)};
}

std::vector<double> kalman_gain_full(const WeightBelief& belief, const BasisVector& phi,
                                     double eps) {
  check_belief_dims(belief, phi);
  const auto& sigma = std::get<FullCovariance>(belief.covariance);
  std::vector<double> gain(sigma.n);
  kernels::sparse_row_combination(sigma, phi, gain);
  const double total = clamp_variance(dot(phi, gain)) + eps;
  require_positive_total(total);
  for (double& g : gain) g /= total;
  return gain;
}

WeightBelief observe_full(WeightBelief belief, const Observation& obs) {
  std::vector<double> row;
  std::vector<double> gain;
  observe_full_inplace(belief, obs.phi, obs.value, obs.noise, row, gain);
  return belief;
}

std::vector<double> kalman_gain_diag(const WeightBelief& belief, const BasisVector& phi,
                                     double eps) {
  check_belief_dims(belief, phi);
  const auto& diag = std::get<DiagonalCovariance>(belief.covariance);
  const double total = quadratic_form(phi, diag) + eps;
  require_positive_total(total);
  std::vector<double> gain(phi.size(), 0.0);
  for (const auto& e : phi.entries()) gain[e.index] = diag.variances[e.index] * e.value / total;
  return gain;
}

WeightBelief observe_diag(WeightBelief belief, const Observation& obs) {
  observe_diag_inplace(belief, obs.phi, obs.value, obs.noise);
  return belief;
}

WeightBelief observe(WeightBelief belief, const Observation& obs) {
  if (belief.is_full()) return observe_full(std::move(belief), obs);
  return observe_diag(std::move(belief), obs);
}

double sample_target(const SuccessorSummary& summary) {
  if (summary.terminal || summary.q_mean.empty()) return summary.reward;
  const double best = *std::max_element(summary.q_mean.begin(), summary.q_mean.end());
  return summary.reward + summary.gamma * best;
}

double sensor_noise(const SensorNoiseMethod& method, const SuccessorSummary& summary) {
  if (summary.terminal || summary.q_var.empty()) return method.epsilon0;
  const auto& var = summary.q_var;
  double assessment = 0.0;
  switch (method.kind) {
    case NoiseMethod::Policy:
      assessment = var[argmax_lowest(summary.q_mean)];
      break;
    case NoiseMethod::Average: {
      double sum = 0.0;
      for (double v : var) sum += v;
      assessment = sum / static_cast<double>(var.size());
      break;
    }
    case NoiseMethod::Max:
      assessment = *std::max_element(var.begin(), var.end());
      break;
    case NoiseMethod::Boltzmann: {
      const double top = *std::max_element(summary.q_mean.begin(), summary.q_mean.end());
      double weighted = 0.0;
      double norm = 0.0;
      for (std::size_t a = 0; a < var.size(); ++a) {
        const double w = std::exp((summary.q_mean[a] - top) / method.temperature);
        weighted += w * var[a];
        norm += w;
      }
      assessment = weighted / norm;
      break;
    }
  }
  return method.epsilon0 + summary.gamma * summary.gamma * assessment;
}

std::vector<double> ptd_update(std::vector<double> weights, const LearningRateSchedule& schedule,
                               std::uint64_t t, const BasisVector& phi, double target) {
  const double step = learning_rate(schedule, t) * (target - dot(phi, weights));
  for (const auto& e : phi.entries()) weights[e.index] += step * e.value;
  return weights;
}

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::KFQL: return "kfql";
    case LearnerKind::AKFQL: return "akfql";
    case LearnerKind::PTD: return "ptd";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "kfql") return LearnerKind::KFQL;
  if (name == "akfql") return LearnerKind::AKFQL;
  if (name == "ptd") return LearnerKind::PTD;
  throw std::invalid_argument("unknown learner kind '" + std::string(name) +
                              "' (expected kfql|akfql|ptd)");
}

Learner::Learner(LearnerKind kind, std::variant<WeightBelief, PtdState> state,
                 SensorNoiseMethod noise)
    : kind_(kind), state_(std::move(state)), noise_(noise) {}

Learner Learner::kfql(std::vector<double> prior_mean, double prior_variance,
                      SensorNoiseMethod noise) {
  noise.validate();
  return {LearnerKind::KFQL, WeightBelief::full(std::move(prior_mean), prior_variance), noise};
}

Learner Learner::akfql(std::vector<double> prior_mean, double prior_variance,
                       SensorNoiseMethod noise) {
  noise.validate();
  return {LearnerKind::AKFQL, WeightBelief::diagonal(std::move(prior_mean), prior_variance),
          noise};
}

Learner Learner::ptd(std::vector<double> initial_weights, LearningRateSchedule schedule) {
  schedule.validate();
  return {LearnerKind::PTD, PtdState{std::move(initial_weights), schedule}, {}};
}

std::span<const double> Learner::weights() const {
  if (const auto* b = std::get_if<WeightBelief>(&state_)) return b->mean;
  return std::get<PtdState>(state_).weights;
}

double Learner::q_mean(const BasisVector& phi) const { return dot(phi, weights()); }

double Learner::q_variance(const BasisVector& phi) const {
  if (const auto* b = std::get_if<WeightBelief>(&state_)) {
    return quadratic_form(phi, b->covariance);
  }
  return 0.0;
}

void Learner::q_variances(std::span<const BasisVector> phis, std::span<double> out) const {
  if (out.size() != phis.size()) throw DimensionError("q_variances: output size");
  const auto* b = std::get_if<WeightBelief>(&state_);
  if (b == nullptr) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (const auto* full = std::get_if<FullCovariance>(&b->covariance)) {
    kernels::batch_quadratic_forms(*full, phis, out);
    for (double& v : out) v = clamp_variance(v);
    return;
  }
  for (std::size_t a = 0; a < phis.size(); ++a) out[a] = quadratic_form(phis[a], b->covariance);
}

void Learner::update(const BasisVector& phi, const SuccessorSummary& summary) {
  const double target = sample_target(summary);
  switch (kind_) {
    case LearnerKind::KFQL:
      update_full(phi, target, sensor_noise(noise_, summary));
      break;
    case LearnerKind::AKFQL:
      update_diag(phi, target, sensor_noise(noise_, summary));
      break;
    case LearnerKind::PTD: {
      auto& ptd = std::get<PtdState>(state_);
      ptd.weights = ptd_update(std::move(ptd.weights), ptd.schedule, updates_, phi, target);
      break;
    }
  }
  ++updates_;
}

void Learner::update_full(const BasisVector& phi, double target, double eps) {
  observe_full_inplace(std::get<WeightBelief>(state_), phi, target, eps, scratch_row_,
                       scratch_gain_);
}

void Learner::update_diag(const BasisVector& phi, double target, double eps) {
  observe_diag_inplace(std::get<WeightBelief>(state_), phi, target, eps);
}

void Learner::check_finite() const {
  for (double w : weights()) {
    if (!std::isfinite(w)) throw NumericalError("non-finite weight");
  }
  const auto* b = std::get_if<WeightBelief>(&state_);
  if (b == nullptr) return;
  const auto& values = b->is_full() ? std::get<FullCovariance>(b->covariance).data
                                    : std::get<DiagonalCovariance>(b->covariance).variances;
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite covariance entry");
  }
}

}  // namespace kfql
