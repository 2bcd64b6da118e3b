#pragma once

#include "gmmb/data.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gmmb {

/// |lambda| below this is treated as the log branch.
inline constexpr double kLambdaZero = 1e-10;

/// Admissible interval for free transformation powers.
struct LambdaBox {
  double min = -3.0;
  double max = 3.0;

  bool contains(double lambda) const { return lambda >= min && lambda <= max; }
};

// Range-power transformation of one coordinate.
//
//   lower-bounded:  y = ((x - l)^lambda - 1) / lambda,        log(x - l) at lambda = 0
//   doubly-bounded: y = (((x - l)/(u - x))^lambda - 1) / lambda, log((x - l)/(u - x)) at 0
//   unbounded:      y = x
//
// All functions throw std::domain_error when x is outside the open support
// or lambda is outside `box`.

double forward(double x, const Bound& bound, double lambda, const LambdaBox& box = {});
double derivative(double x, const Bound& bound, double lambda, const LambdaBox& box = {});
/// log of derivative(), evaluated directly on the log scale.
double log_derivative(double x, const Bound& bound, double lambda, const LambdaBox& box = {});
/// Inverse of forward(). For lambda != 0 requires lambda * y + 1 > 0.
double inverse(double y, const Bound& bound, double lambda, const LambdaBox& box = {});

/// Transformation powers for every variable, with per-variable fixed flags.
class TransformParams {
 public:
  TransformParams() = default;
  /// Free lambda = 1 for bounded variables; unbounded ones fixed at 1.
  explicit TransformParams(BoundsSpec bounds, LambdaBox box = {});

  std::size_t d() const { return bounds_.size(); }
  const BoundsSpec& bounds() const { return bounds_; }
  const LambdaBox& box() const { return box_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  double lambda(std::size_t j) const { return lambda_[static_cast<Eigen::Index>(j)]; }
  bool fixed(std::size_t j) const { return fixed_[j]; }
  std::size_t n_free() const;

  /// Throws std::domain_error outside the box, std::logic_error for an
  /// unbounded variable (its power stays 1).
  void set_lambda(std::size_t j, double value);
  /// Sets and freezes a power. Unbounded variables accept only 1.
  void fix(std::size_t j, double value);

 private:
  BoundsSpec bounds_;
  LambdaBox box_;
  Eigen::VectorXd lambda_;
  std::vector<bool> fixed_;
};

Eigen::VectorXd transform_column(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound,
                                 double lambda, const LambdaBox& box = {});
Eigen::MatrixXd transform(const Eigen::Ref<const Eigen::MatrixXd>& x, const TransformParams& params);

/// Sum over coordinates of log t'(x_j; lambda_j).
double log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& row, const TransformParams& params);
/// Per-row log-Jacobians.
Eigen::VectorXd log_jacobian_rows(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const TransformParams& params);
/// Sum over rows of log t'(x_ij; lambda) for a single column.
double column_log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound,
                           double lambda, const LambdaBox& box = {});

}  // namespace gmmb
