#pragma once

// Dense inner loops of the full-covariance learner, each in a serial
// reference form and an OpenMP form. The serial versions are the ground
// truth in tests; the dispatching wrappers pick the OpenMP form only for
// large problems outside an enclosing parallel region.

#include <cstddef>
#include <span>

#include "kfql/core.hpp"

namespace kfql::kernels {

/// Below this dimension the dispatchers always run serially.
inline constexpr std::size_t kParallelMinDimension = 256;

/// out = phi^T Sigma (equal to Sigma phi for symmetric Sigma). O(nnz * n).
void sparse_row_combination_serial(const FullCovariance& sigma, const BasisVector& phi,
                                   std::span<double> out);
void sparse_row_combination_omp(const FullCovariance& sigma, const BasisVector& phi,
                                std::span<double> out);
void sparse_row_combination(const FullCovariance& sigma, const BasisVector& phi,
                            std::span<double> out);

/// Sigma <- sym(Sigma - gain * row^T), where sym(A) = (A + A^T) / 2.
/// Fused so each unordered pair (i, j) is read and written once.
void rank_one_downdate_symmetrize_serial(FullCovariance& sigma, std::span<const double> gain,
                                         std::span<const double> row);
void rank_one_downdate_symmetrize_omp(FullCovariance& sigma, std::span<const double> gain,
                                      std::span<const double> row);
void rank_one_downdate_symmetrize(FullCovariance& sigma, std::span<const double> gain,
                                  std::span<const double> row);

/// out[a] = phi_a^T Sigma phi_a for a batch of feature vectors (raw, unclamped).
void batch_quadratic_forms_serial(const FullCovariance& sigma, std::span<const BasisVector> phis,
                                  std::span<double> out);
void batch_quadratic_forms_omp(const FullCovariance& sigma, std::span<const BasisVector> phis,
                               std::span<double> out);
void batch_quadratic_forms(const FullCovariance& sigma, std::span<const BasisVector> phis,
                           std::span<double> out);

/// True when the OpenMP variants are compiled in.
bool openmp_enabled();

}  // namespace kfql::kernels
