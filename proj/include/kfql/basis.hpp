#pragma once

// Basis-function generators for the benchmark problems.

#include <cstddef>
#include <span>
#include <vector>

#include "kfql/core.hpp"

namespace kfql {

/// Bilinear interpolation grid over a 2-D state slice, replicated per action.
/// Feature index = action * knot_count() + i1 * axis2.size() + i2.
struct GridSpec {
  std::vector<double> axis1;
  std::vector<double> axis2;
  double width1 = 1.0;
  double width2 = 1.0;
  std::size_t action_count = 1;

  std::size_t knot_count() const { return axis1.size() * axis2.size(); }
  std::size_t feature_count() const { return knot_count() * action_count; }
  std::size_t knot_index(std::size_t i1, std::size_t i2) const { return i1 * axis2.size() + i2; }

  /// Throws std::invalid_argument unless both axes have >= 2 strictly
  /// increasing points, widths are > 0 and action_count >= 1.
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

/// Normalized bilinear kernel features. States outside the grid are clamped
/// to its bounding box first.
BasisVector bilinear_features(const GridSpec& spec, double x1, double x2, std::size_t action);
void bilinear_features(const GridSpec& spec, double x1, double x2, std::size_t action,
                       BasisVector& out);

/// 5x5 (theta, omega) knots, 3 actions.
GridSpec cartpole_grid();

/// 8x8 evenly spaced (position, velocity) knots over [-1,1] x [-3,3], 2 actions.
GridSpec carhill_grid();

/// Summit-leaning prior value max{0, 1 - 2(1 - p)/3}.
double carhill_prior_value(double position);

/// carhill_prior_value at each knot's position, replicated across actions.
std::vector<double> carhill_prior_mean(const GridSpec& spec);

/// Queue features for the d-queue routing problem.
struct CashierBasisSpec {
  std::size_t d = 0;
  std::vector<double> routing;  // d x d row-major, row-stochastic

  double p(std::size_t from, std::size_t to) const { return routing[from * d + to]; }
  void validate() const;
};

/// phi_i(x, a) = x_i + [x_i != 0] (p_{a,i} - [a == i]); zero entries omitted.
BasisVector cashier_features(const CashierBasisSpec& spec, std::span<const int> x, std::size_t a);
void cashier_features(const CashierBasisSpec& spec, std::span<const int> x, std::size_t a,
                      BasisVector& out);

}  // namespace kfql
