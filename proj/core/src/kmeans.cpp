#include "gmmb/kmeans.hpp"

#include "gmmb/mstep.hpp"

#include <limits>

namespace gmmb {

namespace {

int nearest(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Eigen::MatrixXd& centers, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double dd = (row - centers.row(c)).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

std::optional<KMeansResult> kmeans_once(const Eigen::Ref<const Eigen::MatrixXd>& x, int k,
                                        std::mt19937_64& rng, int max_iter) {
  const Eigen::Index n = x.rows();
  if (k < 1 || n < k) return std::nullopt;

  // k-means++ seeding
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double dist = 0.0;
      nearest(x.row(i), centers.topRows(c), &dist);
      d2[i] = dist;
    }
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      double u = unit(rng) * total;
      for (chosen = 0; chosen < n - 1; ++chosen) {
        u -= d2[chosen];
        if (u < 0.0) break;
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest(x.row(i), centers, nullptr);
      if (labels[static_cast<std::size_t>(i)] != c) {
        labels[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      counts[labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    if (counts.minCoeff() == 0.0) return std::nullopt;
    centers = sums.array().colwise() / counts.array();
    if (!changed) break;
  }

  KMeansResult r;
  r.labels = std::move(labels);
  r.centers = std::move(centers);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.within_ss += (x.row(i) - r.centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return r;
}

KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& x, int k, int starts, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);
  std::optional<KMeansResult> best;
  for (int s = 0; s < std::max(starts, 1); ++s) {
    auto r = kmeans_once(x, k, rng);
    if (r && (!best || r->within_ss < best->within_ss)) best = std::move(r);
  }
  if (!best) throw DegenerateFit("k-means produced an empty cluster in every start");
  return *std::move(best);
}

}  // namespace gmmb
