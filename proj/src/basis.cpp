#include "kfql/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kfql {

namespace {

void validate_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2) throw std::invalid_argument(std::string(name) + " needs >= 2 points");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw std::invalid_argument(std::string(name) + " must be strictly increasing");
    }
  }
}

// Index of the cell [axis[i], axis[i+1]] containing x (x already clamped).
std::size_t cell_of(const std::vector<double>& axis, double x) {
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const auto i = static_cast<std::size_t>(std::distance(axis.begin(), it));
  return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, axis.size() - 2);
}

double tent(double x, double knot, double width) {
  return std::max(0.0, 1.0 - std::abs((x - knot) / width));
}

std::vector<double> even_knots(double lo, double hi, std::size_t count) {
  std::vector<double> knots(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) knots[i] = lo + step * static_cast<double>(i);
  knots.back() = hi;
  return knots;
}

}  // namespace

void GridSpec::validate() const {
  validate_axis(axis1, "axis1");
  validate_axis(axis2, "axis2");
  if (!(width1 > 0.0) || !(width2 > 0.0)) throw std::invalid_argument("cell widths must be > 0");
  if (action_count < 1) throw std::invalid_argument("action_count must be >= 1");
}

void bilinear_features(const GridSpec& spec, double x1, double x2, std::size_t action,
                       BasisVector& out) {
  if (action >= spec.action_count) throw std::invalid_argument("action out of range");
  out.reset(spec.feature_count());
  x1 = std::clamp(x1, spec.axis1.front(), spec.axis1.back());
  x2 = std::clamp(x2, spec.axis2.front(), spec.axis2.back());
  const std::size_t c1 = cell_of(spec.axis1, x1);
  const std::size_t c2 = cell_of(spec.axis2, x2);

  double raw[4];
  std::size_t knots[4];
  double total = 0.0;
  int k = 0;
  for (std::size_t d1 = 0; d1 < 2; ++d1) {
    for (std::size_t d2 = 0; d2 < 2; ++d2, ++k) {
      const std::size_t i1 = c1 + d1;
      const std::size_t i2 = c2 + d2;
      raw[k] = tent(x1, spec.axis1[i1], spec.width1) * tent(x2, spec.axis2[i2], spec.width2);
      knots[k] = spec.knot_index(i1, i2);
      total += raw[k];
    }
  }
  const std::size_t offset = action * spec.knot_count();
  if (!(total > 0.0)) {
    // Widths narrower than the cell leave a dead zone; fall back to the
    // nearest knot so the vector is never empty.
    const std::size_t i1 = (x1 - spec.axis1[c1] <= spec.axis1[c1 + 1] - x1) ? c1 : c1 + 1;
    const std::size_t i2 = (x2 - spec.axis2[c2] <= spec.axis2[c2 + 1] - x2) ? c2 : c2 + 1;
    out.push(offset + spec.knot_index(i1, i2), 1.0);
    return;
  }
  for (int j = 0; j < 4; ++j) {
    if (raw[j] > 0.0) out.push(offset + knots[j], raw[j] / total);
  }
}

BasisVector bilinear_features(const GridSpec& spec, double x1, double x2, std::size_t action) {
  BasisVector out;
  bilinear_features(spec, x1, x2, action, out);
  return out;
}

GridSpec cartpole_grid() {
  constexpr double pi = std::numbers::pi;
  return GridSpec{
      .axis1 = {-pi, -pi / 2, 0.0, pi / 2, pi},
      .axis2 = {-0.5, -0.25, 0.0, 0.25, 0.5},
      .width1 = pi / 2,
      .width2 = 0.25,
      .action_count = 3,
  };
}

GridSpec carhill_grid() {
  GridSpec spec{
      .axis1 = even_knots(-1.0, 1.0, 8),
      .axis2 = even_knots(-3.0, 3.0, 8),
      .width1 = 2.0 / 7.0,
      .width2 = 6.0 / 7.0,
      .action_count = 2,
  };
  return spec;
}

double carhill_prior_value(double position) {
  return std::max(0.0, 1.0 - 2.0 * (1.0 - position) / 3.0);
}

std::vector<double> carhill_prior_mean(const GridSpec& spec) {
  std::vector<double> mean(spec.feature_count());
  for (std::size_t a = 0; a < spec.action_count; ++a) {
    for (std::size_t i1 = 0; i1 < spec.axis1.size(); ++i1) {
      const double value = carhill_prior_value(spec.axis1[i1]);
      for (std::size_t i2 = 0; i2 < spec.axis2.size(); ++i2) {
        mean[a * spec.knot_count() + spec.knot_index(i1, i2)] = value;
      }
    }
  }
  return mean;
}

void CashierBasisSpec::validate() const {
  if (d == 0) throw std::invalid_argument("cashier basis needs d >= 1");
  if (routing.size() != d * d) throw std::invalid_argument("routing matrix must be d x d");
  for (std::size_t i = 0; i < d; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (!(p(i, j) >= 0.0)) throw std::invalid_argument("routing entries must be >= 0");
      sum += p(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("routing rows must sum to 1");
  }
}

void cashier_features(const CashierBasisSpec& spec, std::span<const int> x, std::size_t a,
                      BasisVector& out) {
  if (x.size() != spec.d || a >= spec.d) throw DimensionError("cashier_features: bad sizes");
  out.reset(spec.d);
  const double* row = spec.routing.data() + a * spec.d;
  for (std::size_t i = 0; i < spec.d; ++i) {
    if (x[i] == 0) continue;
    const double value = x[i] + row[i] - (i == a ? 1.0 : 0.0);
    if (value != 0.0) out.push(i, value);
  }
}

BasisVector cashier_features(const CashierBasisSpec& spec, std::span<const int> x,
                             std::size_t a) {
  BasisVector out;
  cashier_features(spec, x, a, out);
  return out;
}

}  // namespace kfql
