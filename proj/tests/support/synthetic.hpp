#pragma once

#include <gmmb/transform.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace gmmb::testing {

struct Sample {
  Eigen::MatrixXd x;
  std::vector<int> labels;  // 1-based generating component
};

// Gaussian mixture on the transformed scale with diagonal covariances,
// mapped back through the inverse transform. Draws that fall outside the
// image of the transform are redrawn.
inline Sample sample_bounded_mixture(int n, const std::vector<double>& weights,
                                     const std::vector<Eigen::VectorXd>& means,
                                     const std::vector<Eigen::VectorXd>& sds, const BoundsSpec& bounds,
                                     const Eigen::VectorXd& lambda, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  const auto d = means.front().size();
  Sample s;
  s.x.resize(n, d);
  s.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    s.labels[static_cast<std::size_t>(i)] = k + 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      const Bound& b = bounds[static_cast<std::size_t>(j)];
      for (;;) {
        const double y = means[static_cast<std::size_t>(k)][j] + sds[static_cast<std::size_t>(k)][j] * normal(rng);
        if (b.kind != BoundKind::unbounded && std::abs(lambda[j]) > kLambdaZero && lambda[j] * y + 1.0 <= 0.0) {
          continue;
        }
        const double x = b.kind == BoundKind::unbounded ? y : inverse(y, b, lambda[j], LambdaBox{-10, 10});
        if (b.contains(x)) {
          s.x(i, j) = x;
          break;
        }
      }
    }
  }
  return s;
}

// Two well separated clusters, d = 1, lower bound 0.
inline Sample two_cluster_1d(int n, double lambda, std::uint64_t seed) {
  Eigen::VectorXd m1(1), m2(1), s1(1), s2(1), l(1);
  m1 << 1.0;
  m2 << 4.0;
  s1 << 0.35;
  s2 << 0.5;
  l << lambda;
  return sample_bounded_mixture(n, {0.5, 0.5}, {m1, m2}, {s1, s2}, BoundsSpec::uniform(1, Bound::lower_at(0.0)), l,
                                seed);
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace gmmb::testing
