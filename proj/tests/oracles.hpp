#pragma once

// Reference computations that share no code with the library under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace kfql::oracle {

struct LinearObservation {
  std::vector<double> phi;
  double y;
  double noise;
};

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Closed-form Gaussian posterior for y = w^T phi + e, e ~ N(0, noise),
// w ~ N(mean0, cov0), in information form.
inline Posterior conjugate_posterior(const Eigen::VectorXd& mean0, const Eigen::MatrixXd& cov0,
                                     const std::vector<LinearObservation>& data) {
  const Eigen::MatrixXd prior_precision = cov0.inverse();
  Eigen::MatrixXd precision = prior_precision;
  Eigen::VectorXd info = prior_precision * mean0;
  for (const auto& obs : data) {
    const Eigen::Map<const Eigen::VectorXd> phi(obs.phi.data(),
                                                static_cast<Eigen::Index>(obs.phi.size()));
    precision += phi * phi.transpose() / obs.noise;
    info += phi * obs.y / obs.noise;
  }
  Posterior post;
  post.covariance = precision.inverse();
  post.mean = post.covariance * info;
  return post;
}

// Q* for a deterministic tabular MDP by value iteration to a fixed point.
// Terminal states have value 0.
inline std::vector<double> value_iteration(std::size_t states, std::size_t actions,
                                           const std::vector<std::size_t>& next,
                                           const std::vector<double>& reward,
                                           const std::vector<bool>& terminal, double gamma) {
  std::vector<double> q(states * actions, 0.0);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    std::vector<double> v(states, 0.0);
    for (std::size_t s = 0; s < states; ++s) {
      if (terminal[s]) continue;
      v[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * actions),
                               q.begin() + static_cast<std::ptrdiff_t>((s + 1) * actions));
    }
    double change = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double updated = reward[i] + gamma * v[next[i]];
      change = std::max(change, std::abs(updated - q[i]));
      q[i] = updated;
    }
    if (change < 1e-15) break;
  }
  return q;
}

}  // namespace kfql::oracle
