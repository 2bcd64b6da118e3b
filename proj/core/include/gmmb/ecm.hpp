#pragma once

#include "gmmb/data.hpp"
#include "gmmb/diagnostics.hpp"
#include "gmmb/mixture.hpp"
#include "gmmb/mstep.hpp"
#include "gmmb/transform.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gmmb {

/// n x G posterior membership probabilities.
struct Responsibilities {
  Eigen::MatrixXd z;

  Eigen::Index n() const { return z.rows(); }
  Eigen::Index G() const { return z.cols(); }
  /// Largest deviation of a row sum from one.
  double max_row_error() const;
  static Responsibilities one_hot(const std::vector<int>& labels0, Eigen::Index G);
};

struct FitConfig {
  int G = 1;
  Model model = Model::V;
  double tol = 1e-8;  ///< relative log-likelihood improvement threshold
  int max_iter = 1000;
  int n_kmeans_starts = 10;
  std::uint64_t seed = 0;
  LambdaBox lambda_box{};
  /// Optional per-variable fixed powers; empty or nullopt entries are free.
  std::vector<std::optional<double>> fixed_lambda;
  MStepControls mstep{};

  /// Throws std::invalid_argument for out-of-range settings.
  void validate(Eigen::Index d) const;
};

/// Seed for the RNG stream of one (G, model) fit.
std::uint64_t derive_seed(std::uint64_t seed, int G, Model model);

enum class FitStatus { converged, max_iterations, degenerate };
std::string_view to_string(FitStatus s);

struct FitResult {
  FitStatus status = FitStatus::degenerate;
  std::string diagnostic;
  Model model = Model::V;
  int G = 0;
  MixtureParams params;
  TransformParams tparams;
  double loglik = 0.0;
  long df = 0;
  long n = 0;
  double bic = 0.0;
  double icl = 0.0;
  double nec = 0.0;
  double entropy_total = 0.0;
  Responsibilities z;
  std::vector<int> classification;  ///< 1-based MAP labels
  Eigen::VectorXd uncertainty;
  Eigen::VectorXd entropy;          ///< per-row e_i
  std::vector<double> loglik_trace;
  int n_iter = 0;
  bool lambda_warning = false;      ///< a lambda update fell back to the previous value

  bool ok() const { return status != FitStatus::degenerate; }
  bool converged() const { return status == FitStatus::converged; }
};

struct EStepResult {
  Responsibilities z;
  double loglik = 0.0;
};

/// Posterior probabilities and the observed-data log-likelihood including
/// the Jacobian term. Throws DegenerateFit when an observation has zero
/// density under every component.
EStepResult e_step(const Dataset& data, const MixtureParams& params, const TransformParams& tparams);
/// Same on already transformed data; `log_jacobian_total` is added to loglik.
EStepResult e_step_transformed(const Eigen::Ref<const Eigen::MatrixXd>& y, double log_jacobian_total,
                               const MixtureParams& params);

/// Q(Psi, lambda) = sum_ik z_ik [log pi_k + log phi(t(x_i); mu_k, Sigma_k) + log|J_i|]
/// at the given parameters.
double q_function(const Dataset& data, const Responsibilities& z, const MixtureParams& params,
                  const TransformParams& tparams);

/// Q with (pi, mu, Sigma) replaced by their conditional maximizers at
/// `tparams`. VVE warm-starts from `warm`. Returns -inf on a degenerate fit.
double profiled_q(const Dataset& data, const Responsibilities& z, Model model,
                  const TransformParams& tparams, const MStepControls& controls = {},
                  const MixtureParams* warm = nullptr);

struct LambdaStep {
  TransformParams tparams;
  double q_before = 0.0;  ///< Q at the incoming (params, tparams)
  double q_after = 0.0;   ///< profiled Q at the returned tparams
  bool warning = false;   ///< optimizer could not evaluate; previous lambda kept
};

/// First conditional maximization: coordinate-wise bounded Brent search of
/// the profiled Q over each free power, one sweep.
LambdaStep cm_step_lambda(const Dataset& data, const Responsibilities& z, const MixtureParams& params,
                          const TransformParams& tparams, const MStepControls& controls = {});

/// Second conditional maximization: weights, means and covariances on the
/// transformed scale. Throws DegenerateFit.
MixtureParams cm_step_theta(const Dataset& data, const Responsibilities& z, const TransformParams& tparams,
                            Model model, const MStepControls& controls = {},
                            const MixtureParams* warm = nullptr);

/// Maximizer of the single-Gaussian profile log-likelihood of one column
/// over the lambda box.
double marginal_lambda(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound,
                       const LambdaBox& box = {});

struct Initialization {
  TransformParams tparams;
  Responsibilities z;
};

/// Marginal powers, then k-means on the standardized transformed data.
/// Throws DegenerateFit if k-means empties a cluster in every start.
Initialization initialize(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config);

/// Full ECM fit from k-means initialization. Invalid configurations and
/// data outside the supports throw; numerical collapse is reported through
/// FitResult::status.
FitResult fit(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config);

/// ECM iterations starting at the M-step from a given partition.
FitResult fit_from(const Dataset& data, const TransformParams& tparams, const Responsibilities& z0,
                   const FitConfig& config);

}  // namespace gmmb
