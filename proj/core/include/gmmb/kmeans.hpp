#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace gmmb {

struct KMeansResult {
  std::vector<int> labels;  ///< 0-based cluster index per row
  Eigen::MatrixXd centers;  ///< k x d
  double within_ss = 0.0;
};

/// One Lloyd run from k-means++ seeds. Empty optional if a cluster empties.
std::optional<KMeansResult> kmeans_once(const Eigen::Ref<const Eigen::MatrixXd>& x, int k,
                                        std::mt19937_64& rng, int max_iter = 100);

/// Best of `starts` seeded runs by within-cluster sum of squares. Throws
/// DegenerateFit if every start produced an empty cluster.
KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& x, int k, int starts, std::uint64_t seed);

}  // namespace gmmb
