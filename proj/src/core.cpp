#include "kfql/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace kfql {

BasisVector BasisVector::from_dense(std::span<const double> values) {
  BasisVector phi(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) phi.push(i, values[i]);
  }
  return phi;
}

void BasisVector::push(std::size_t index, double value) {
  if (index >= n_) {
    throw DimensionError("basis index " + std::to_string(index) + " out of range for n=" +
                         std::to_string(n_));
  }
  if (!std::isfinite(value)) throw std::invalid_argument("basis value must be finite");
  entries_.push_back({index, value});
}

bool BasisVector::is_valid() const {
  std::unordered_set<std::size_t> seen;
  for (const auto& e : entries_) {
    if (e.index >= n_ || !std::isfinite(e.value)) return false;
    if (!seen.insert(e.index).second) return false;
  }
  return true;
}

std::vector<double> BasisVector::to_dense() const {
  std::vector<double> out(n_, 0.0);
  for (const auto& e : entries_) out[e.index] = e.value;
  return out;
}

FullCovariance FullCovariance::scaled_identity(std::size_t dim, double variance) {
  FullCovariance sigma(dim);
  for (std::size_t i = 0; i < dim; ++i) sigma(i, i) = variance;
  return sigma;
}

std::size_t dimension(const Covariance& sigma) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, FullCovariance>) {
          return s.n;
        } else {
          return s.size();
        }
      },
      sigma);
}

WeightBelief WeightBelief::full(std::vector<double> mean, double prior_variance) {
  if (prior_variance < 0.0) throw std::invalid_argument("prior variance must be >= 0");
  const auto n = mean.size();
  return {std::move(mean), FullCovariance::scaled_identity(n, prior_variance)};
}

WeightBelief WeightBelief::diagonal(std::vector<double> mean, double prior_variance) {
  if (prior_variance < 0.0) throw std::invalid_argument("prior variance must be >= 0");
  const auto n = mean.size();
  return {std::move(mean), DiagonalCovariance{std::vector<double>(n, prior_variance)}};
}

void WeightBelief::validate() const {
  if (dimension(covariance) != mean.size()) {
    throw DimensionError("belief mean and covariance sizes differ");
  }
  if (const auto* full = std::get_if<FullCovariance>(&covariance)) {
    if (full->data.size() != full->n * full->n) throw DimensionError("malformed covariance");
    for (std::size_t i = 0; i < full->n; ++i) {
      if (!((*full)(i, i) >= 0.0)) throw std::invalid_argument("negative covariance diagonal");
      for (std::size_t j = i + 1; j < full->n; ++j) {
        const double a = (*full)(i, j);
        const double b = (*full)(j, i);
        const double scale = std::max({std::abs(a), std::abs(b), 1.0});
        if (std::abs(a - b) > 1e-9 * scale) {
          throw std::invalid_argument("covariance is not symmetric");
        }
      }
    }
  } else {
    for (double v : std::get<DiagonalCovariance>(covariance).variances) {
      if (!(v >= 0.0)) throw std::invalid_argument("negative variance");
    }
  }
}

double dot(const BasisVector& phi, std::span<const double> v) {
  if (phi.size() != v.size()) throw DimensionError("dot: dimension mismatch");
  double sum = 0.0;
  for (const auto& e : phi.entries()) sum += e.value * v[e.index];
  return sum;
}

double clamp_variance(double raw) {
  if (raw >= 0.0) return raw;
  if (raw >= -kVarianceRoundoff) return 0.0;
  throw NumericalError("negative predicted variance " + std::to_string(raw));
}

double quadratic_form(const BasisVector& phi, const FullCovariance& sigma) {
  if (phi.size() != sigma.n) throw DimensionError("quadratic_form: dimension mismatch");
  const auto entries = phi.entries();
  double sum = 0.0;
  for (const auto& a : entries) {
    const auto row = sigma.row(a.index);
    double inner = 0.0;
    for (const auto& b : entries) inner += row[b.index] * b.value;
    sum += a.value * inner;
  }
  return clamp_variance(sum);
}

double quadratic_form(const BasisVector& phi, const DiagonalCovariance& sigma) {
  if (phi.size() != sigma.size()) throw DimensionError("quadratic_form: dimension mismatch");
  double sum = 0.0;
  for (const auto& e : phi.entries()) sum += e.value * (sigma.variances[e.index] * e.value);
  return clamp_variance(sum);
}

double quadratic_form(const BasisVector& phi, const Covariance& sigma) {
  return std::visit([&](const auto& s) { return quadratic_form(phi, s); }, sigma);
}

}  // namespace kfql
