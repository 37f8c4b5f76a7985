#pragma once

// Domain types shared by the learners, basis generators and environments.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kfql {

/// Thrown when vector/matrix sizes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an update produces or meets values that cannot be trusted
/// (negative variance beyond round-off, zero total variance, non-finite
/// weights). The harness treats it as a run abort.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadratic forms in [-kVarianceRoundoff, 0) are clamped to zero; anything
/// more negative raises NumericalError.
inline constexpr double kVarianceRoundoff = 1e-9;

/// Sparse vector of basis-function activations over `size()` features.
class BasisVector {
 public:
  struct Entry {
    std::size_t index;
    double value;
  };

  BasisVector() = default;
  explicit BasisVector(std::size_t n) : n_(n) {}

  /// Dense input; exact zeros are dropped.
  static BasisVector from_dense(std::span<const double> values);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const Entry> entries() const { return entries_; }

  /// Appends an entry. The index must be < size() and not already present
  /// (uniqueness is the caller's responsibility; see is_valid()).
  void push(std::size_t index, double value);

  /// Keeps the dimension, drops all entries.
  void clear() { entries_.clear(); }
  void reset(std::size_t n) {
    n_ = n;
    entries_.clear();
  }

  /// Distinct in-range indices and finite values.
  bool is_valid() const;

  std::vector<double> to_dense() const;

 private:
  std::size_t n_ = 0;
  std::vector<Entry> entries_;
};

/// Row-major n x n covariance.
struct FullCovariance {
  std::size_t n = 0;
  std::vector<double> data;

  FullCovariance() = default;
  explicit FullCovariance(std::size_t dim) : n(dim), data(dim * dim, 0.0) {}
  static FullCovariance scaled_identity(std::size_t dim, double variance);

  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * n, n}; }

  bool operator==(const FullCovariance&) const = default;
};

/// Per-weight variances only.
struct DiagonalCovariance {
  std::vector<double> variances;

  std::size_t size() const { return variances.size(); }
  bool operator==(const DiagonalCovariance&) const = default;
};

using Covariance = std::variant<FullCovariance, DiagonalCovariance>;

std::size_t dimension(const Covariance& sigma);

/// Multivariate-normal belief N(mean, covariance) over the weight vector.
struct WeightBelief {
  std::vector<double> mean;
  Covariance covariance;

  static WeightBelief full(std::vector<double> mean, double prior_variance);
  static WeightBelief diagonal(std::vector<double> mean, double prior_variance);

  std::size_t size() const { return mean.size(); }
  bool is_full() const { return std::holds_alternative<FullCovariance>(covariance); }

  /// Throws DimensionError / std::invalid_argument when the invariants fail:
  /// matching sizes, non-negative variances, symmetry within 1e-9 relative.
  void validate() const;
};

struct Observation {
  BasisVector phi;
  double value = 0.0;
  double noise = 0.0;
};

struct QEstimate {
  double mean = 0.0;
  double variance = 0.0;
};

double dot(const BasisVector& phi, std::span<const double> v);

/// phi^T Sigma phi, clamped to >= 0 for round-off-sized negatives.
double quadratic_form(const BasisVector& phi, const FullCovariance& sigma);
double quadratic_form(const BasisVector& phi, const DiagonalCovariance& sigma);
double quadratic_form(const BasisVector& phi, const Covariance& sigma);

/// Applies the round-off clamp to a raw quadratic form value.
double clamp_variance(double raw);

}  // namespace kfql
