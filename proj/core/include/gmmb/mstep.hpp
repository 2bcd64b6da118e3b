#pragma once

#include "gmmb/mixture.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace gmmb {

/// Raised when a fit collapses: an empty component, a covariance at the
/// variance floor or beyond the condition limit.
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column sums below this fraction of n count as an empty component.
inline constexpr double kEmptyComponent = 1e-10;
/// Eigenvalue floor relative to the mean marginal variance of the data.
inline constexpr double kVarianceFloor = 1e-10;

struct MStepControls {
  int max_inner = 100;       ///< iterations of the VEI / VVE inner loops
  double inner_tol = 1e-8;   ///< relative objective tolerance of those loops
};

/// Weighted sufficient statistics of transformed data.
struct WeightedScatter {
  Eigen::VectorXd nk;                    ///< column sums of z
  std::vector<Eigen::VectorXd> means;    ///< weighted means
  std::vector<Eigen::MatrixXd> scatter;  ///< sum_i z_ik (y_i - mu_k)(y_i - mu_k)^T
};

/// Throws DegenerateFit if a column of z sums to less than kEmptyComponent * n.
WeightedScatter weighted_scatter(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Maximum-likelihood covariance factors under `model` given the scatter
/// matrices. The iterative codes (VEI, VVE) start their inner loops from
/// `warm`, the first component of a previous fit, when given; VVE uses its
/// orientation, VEI its diagonal shape.
std::vector<CovarianceFactors> estimate_covariances(Model model, const WeightedScatter& s,
                                                    const MStepControls& controls = {},
                                                    const CovarianceFactors* warm = nullptr);

/// estimate_covariances() followed by the condition-number and variance
/// floor checks. Throws DegenerateFit.
std::vector<CovarianceFactors> checked_covariances(Model model, const WeightedScatter& s, double floor,
                                                   const MStepControls& controls = {},
                                                   const CovarianceFactors* warm = nullptr);

/// Objective minimized by the VVE inner loop:
/// sum_k n_k log|C_k| + tr(W_k D C_k^{-1} D^T).
double vve_objective(const WeightedScatter& s, const Eigen::MatrixXd& orientation);

/// sum_ik z_ik log phi(y_i; mu_k, Sigma_k) written through the scatter
/// matrices (mu_k must be the weighted means in `s`).
double expected_log_density(const WeightedScatter& s, const std::vector<CovarianceFactors>& covs);

/// Closed-form/inner-loop M-step for (pi, mu, Sigma) on transformed data,
/// including the degeneracy checks. `floor` is the absolute eigenvalue floor.
MixtureParams maximize_theta(Model model, const Eigen::Ref<const Eigen::MatrixXd>& y,
                             const Eigen::Ref<const Eigen::MatrixXd>& z, double floor,
                             const MStepControls& controls = {}, const MixtureParams* warm = nullptr);

/// Absolute eigenvalue floor for transformed data `y`.
double variance_floor(const Eigen::Ref<const Eigen::MatrixXd>& y);

}  // namespace gmmb
