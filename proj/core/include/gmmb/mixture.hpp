#pragma once

#include "gmmb/transform.hpp"

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gmmb {

/// Covariance parameterizations Sigma_k = volume_k * U_k Delta_k U_k^T,
/// named by whether volume, shape and orientation are Equal or Varying
/// across components (I = identity).
enum class Model { E, V, EII, VII, EEI, VEI, EVI, VVI, EEE, VVE, VVV };

enum class Sharing { identity, equal, varying };

struct ModelTraits {
  Sharing volume;
  Sharing shape;
  Sharing orientation;
};

ModelTraits traits(Model m);
std::string_view name(Model m);
/// Throws std::invalid_argument for unknown codes.
Model parse_model(std::string_view code);
bool is_univariate(Model m);
bool valid_for_dimension(Model m, Eigen::Index d);
std::span<const Model> all_models();

class SingularCovariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Condition-number ceiling beyond which a component is flagged singular.
inline constexpr double kMaxCondition = 1e12;

struct CovarianceFactors {
  double volume = 1.0;
  Eigen::VectorXd shape;        ///< decreasing, product one
  Eigen::MatrixXd orientation;  ///< orthogonal, columns match shape

  /// Eigen-decomposition of a symmetric positive definite matrix.
  static CovarianceFactors from_matrix(const Eigen::MatrixXd& sigma);
  static CovarianceFactors identity(Eigen::Index d);

  Eigen::Index d() const { return shape.size(); }
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd eigenvalues() const { return volume * shape; }
  double condition() const;
  double log_det() const;
};

/// Throws SingularCovariance when the factors are non-finite, the volume is
/// not positive or the condition number exceeds kMaxCondition.
void check_factors(const CovarianceFactors& f);

/// Mixture on the transformed scale.
struct MixtureParams {
  Model model = Model::V;
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<CovarianceFactors> covariances;

  Eigen::Index G() const { return weights.size(); }
  Eigen::Index d() const { return means.empty() ? 0 : means.front().size(); }
  /// Throws std::invalid_argument when dimensions disagree, weights are not
  /// positive and summing to one, or the code does not suit d.
  void validate() const;
};

double log_component_density(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& mu, const CovarianceFactors& sigma);

/// n-vector of log phi(y_i; mu, Sigma) for the rows of `y`.
Eigen::VectorXd log_component_density_rows(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                           const Eigen::Ref<const Eigen::VectorXd>& mu,
                                           const CovarianceFactors& sigma);

/// n x G matrix of log(pi_k) + log phi(y_i; mu_k, Sigma_k).
Eigen::MatrixXd weighted_log_densities(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                       const MixtureParams& params);

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

double log_mixture_density_transformed(const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const MixtureParams& params);

/// Density on the original bounded scale including the Jacobian term.
double log_density_original(const Eigen::Ref<const Eigen::VectorXd>& x, const MixtureParams& params,
                            const TransformParams& tparams);

/// Number of free covariance parameters for the given code.
long covariance_parameter_count(Model model, long d, long G);

/// Mixing weights + means + covariance factors + free transformation powers.
long count_free_parameters(Model model, long d, long G, long n_free_lambda);

}  // namespace gmmb
