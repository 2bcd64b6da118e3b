#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace gmmb {

// Criteria follow the larger-is-better convention:
//   BIC = 2 loglik - df log n,   ICL = BIC - 2 E
// where E is the total soft-assignment entropy.

double bic(double loglik, long df, long n);
double icl(double bic_value, double entropy_total);

struct EntropyMeasures {
  Eigen::VectorXd per_row;  ///< e_i = -sum_k z_ik log z_ik
  double total = 0.0;       ///< E
  double nec = 0.0;         ///< E / (n log G), 0 when G = 1
};

EntropyMeasures entropy_measures(const Eigen::Ref<const Eigen::MatrixXd>& z);

struct MapClassification {
  std::vector<int> labels;     ///< 1-based; ties go to the lowest index
  Eigen::VectorXd uncertainty; ///< 1 - max_k z_ik
};

MapClassification map_classify(const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Hubert-Arabie adjusted Rand index. Labels are arbitrary integers.
/// Two identical trivial partitions (n < 2, all-singletons, or one block)
/// score 1. Throws std::invalid_argument on a length mismatch.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

struct CriterionReport {
  double loglik = 0.0;
  long df = 0;
  long n = 0;
  double bic = 0.0;
  double icl = 0.0;
  double entropy_total = 0.0;
  double nec = 0.0;
};

CriterionReport criteria(double loglik, long df, const Eigen::Ref<const Eigen::MatrixXd>& z);

}  // namespace gmmb
