#pragma once

#include <random>
#include <vector>

#include "kfql/core.hpp"

namespace kfql::testing {

inline FullCovariance random_psd(std::size_t n, std::mt19937_64& rng, double ridge = 0.1) {
  std::normal_distribution<double> normal;
  std::vector<double> a(n * n);
  for (auto& v : a) v = normal(rng);
  FullCovariance s(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) sum += a[i * n + k] * a[j * n + k];
      s(i, j) = sum / static_cast<double>(n) + (i == j ? ridge : 0.0);
    }
  }
  return s;
}

inline BasisVector random_basis(std::size_t n, std::mt19937_64& rng, double density = 1.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  BasisVector phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (unit(rng) < density) phi.push(i, normal(rng));
  }
  if (phi.empty()) phi.push(0, 1.0);
  return phi;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace kfql::testing
