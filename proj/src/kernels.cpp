#include "kfql/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kfql::kernels {

namespace {

bool use_parallel(std::size_t n, std::size_t work_items) {
#ifdef _OPENMP
  return n >= kParallelMinDimension && work_items > 1 && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
#else
  (void)n;
  (void)work_items;
  return false;
#endif
}

void check_row_combination(const FullCovariance& sigma, const BasisVector& phi,
                           std::span<double> out) {
  if (phi.size() != sigma.n || out.size() != sigma.n) {
    throw DimensionError("sparse_row_combination: dimension mismatch");
  }
}

void check_downdate(const FullCovariance& sigma, std::span<const double> gain,
                    std::span<const double> row) {
  if (gain.size() != sigma.n || row.size() != sigma.n) {
    throw DimensionError("rank_one_downdate: dimension mismatch");
  }
}

// Raw quadratic form; the same arithmetic order as quadratic_form().
double raw_quadratic(const FullCovariance& sigma, const BasisVector& phi) {
  const auto entries = phi.entries();
  double sum = 0.0;
  for (const auto& a : entries) {
    const auto row = sigma.row(a.index);
    double inner = 0.0;
    for (const auto& b : entries) inner += row[b.index] * b.value;
    sum += a.value * inner;
  }
  return sum;
}

}  // namespace

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

void sparse_row_combination_serial(const FullCovariance& sigma, const BasisVector& phi,
                                   std::span<double> out) {
  check_row_combination(sigma, phi, out);
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& e : phi.entries()) {
    const auto row = sigma.row(e.index);
    for (std::size_t j = 0; j < sigma.n; ++j) out[j] += e.value * row[j];
  }
}

void sparse_row_combination_omp(const FullCovariance& sigma, const BasisVector& phi,
                                std::span<double> out) {
  check_row_combination(sigma, phi, out);
  const auto entries = phi.entries();
  const auto n = static_cast<std::ptrdiff_t>(sigma.n);
  // Each output element accumulates entries in the same order as the serial
  // loop, so results are bitwise identical.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (const auto& e : entries) acc += e.value * sigma(e.index, static_cast<std::size_t>(j));
    out[static_cast<std::size_t>(j)] = acc;
  }
}

void sparse_row_combination(const FullCovariance& sigma, const BasisVector& phi,
                            std::span<double> out) {
  if (use_parallel(sigma.n, sigma.n)) {
    sparse_row_combination_omp(sigma, phi, out);
  } else {
    sparse_row_combination_serial(sigma, phi, out);
  }
}

void rank_one_downdate_symmetrize_serial(FullCovariance& sigma, std::span<const double> gain,
                                         std::span<const double> row) {
  check_downdate(sigma, gain, row);
  const std::size_t n = sigma.n;
  double* s = sigma.data.data();
  for (std::size_t i = 0; i < n; ++i) {
    s[i * n + i] -= gain[i] * row[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double upper = s[i * n + j] - gain[i] * row[j];
      const double lower = s[j * n + i] - gain[j] * row[i];
      const double mid = 0.5 * (upper + lower);
      s[i * n + j] = mid;
      s[j * n + i] = mid;
    }
  }
}

void rank_one_downdate_symmetrize_omp(FullCovariance& sigma, std::span<const double> gain,
                                      std::span<const double> row) {
  check_downdate(sigma, gain, row);
  const auto n = static_cast<std::ptrdiff_t>(sigma.n);
  double* s = sigma.data.data();
  // Row i owns the pairs (i, j>i); triangular work so use dynamic chunks.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto un = static_cast<std::size_t>(n);
    s[i * un + i] -= gain[i] * row[i];
    for (std::size_t j = i + 1; j < un; ++j) {
      const double upper = s[i * un + j] - gain[i] * row[j];
      const double lower = s[j * un + i] - gain[j] * row[i];
      const double mid = 0.5 * (upper + lower);
      s[i * un + j] = mid;
      s[j * un + i] = mid;
    }
  }
}

void rank_one_downdate_symmetrize(FullCovariance& sigma, std::span<const double> gain,
                                  std::span<const double> row) {
  if (use_parallel(sigma.n, sigma.n)) {
    rank_one_downdate_symmetrize_omp(sigma, gain, row);
  } else {
    rank_one_downdate_symmetrize_serial(sigma, gain, row);
  }
}

void batch_quadratic_forms_serial(const FullCovariance& sigma, std::span<const BasisVector> phis,
                                  std::span<double> out) {
  if (out.size() != phis.size()) throw DimensionError("batch_quadratic_forms: output size");
  for (std::size_t a = 0; a < phis.size(); ++a) {
    if (phis[a].size() != sigma.n) throw DimensionError("batch_quadratic_forms: dimension");
    out[a] = raw_quadratic(sigma, phis[a]);
  }
}

void batch_quadratic_forms_omp(const FullCovariance& sigma, std::span<const BasisVector> phis,
                               std::span<double> out) {
  if (out.size() != phis.size()) throw DimensionError("batch_quadratic_forms: output size");
  for (const auto& phi : phis) {
    if (phi.size() != sigma.n) throw DimensionError("batch_quadratic_forms: dimension");
  }
  const auto count = static_cast<std::ptrdiff_t>(phis.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t a = 0; a < count; ++a) {
    out[static_cast<std::size_t>(a)] = raw_quadratic(sigma, phis[static_cast<std::size_t>(a)]);
  }
}

void batch_quadratic_forms(const FullCovariance& sigma, std::span<const BasisVector> phis,
                           std::span<double> out) {
  std::size_t work = 0;
  for (const auto& phi : phis) work += phi.nnz() * phi.nnz();
  // Dense Cashier-sized batches (100 actions x 100 features) qualify.
  if (use_parallel(std::max<std::size_t>(work / 16, 1), phis.size())) {
    batch_quadratic_forms_omp(sigma, phis, out);
  } else {
    batch_quadratic_forms_serial(sigma, phis, out);
  }
}

}  // namespace kfql::kernels
