#include "gmmb/transform.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gmmb {

namespace {

void check(double x, const Bound& bound, double lambda, const LambdaBox& box) {
  if (!bound.contains(x)) {
    throw std::domain_error("value " + std::to_string(x) + " is outside the open support " +
                            to_string(bound));
  }
  if (bound.kind != BoundKind::unbounded && !box.contains(lambda)) {
    throw std::domain_error("lambda " + std::to_string(lambda) + " is outside [" +
                            std::to_string(box.min) + ", " + std::to_string(box.max) + "]");
  }
}

/// log of the quantity raised to the power: log(x - l) or log((x - l)/(u - x)).
double log_base(double x, const Bound& bound) {
  if (bound.kind == BoundKind::lower) return std::log(x - bound.lower);
  return std::log(x - bound.lower) - std::log(bound.upper - x);
}

double box_cox(double log_a, double lambda) {
  if (std::abs(lambda) < kLambdaZero) return log_a;
  return std::expm1(lambda * log_a) / lambda;
}

}  // namespace

double forward(double x, const Bound& bound, double lambda, const LambdaBox& box) {
  check(x, bound, lambda, box);
  if (bound.kind == BoundKind::unbounded) return x;
  return box_cox(log_base(x, bound), lambda);
}

double log_derivative(double x, const Bound& bound, double lambda, const LambdaBox& box) {
  check(x, bound, lambda, box);
  switch (bound.kind) {
    case BoundKind::unbounded:
      return 0.0;
    case BoundKind::lower:
      return (lambda - 1.0) * std::log(x - bound.lower);
    case BoundKind::doubly: {
      const double lo = std::log(x - bound.lower);
      const double hi = std::log(bound.upper - x);
      if (std::abs(lambda) < kLambdaZero) {
        // 1/(x-l) + 1/(u-x) = (u-l) / ((x-l)(u-x))
        return std::log(bound.upper - bound.lower) - lo - hi;
      }
      return (lambda - 1.0) * (lo - hi) + std::log(bound.upper - bound.lower) - 2.0 * hi;
    }
  }
  return 0.0;
}

double derivative(double x, const Bound& bound, double lambda, const LambdaBox& box) {
  if (bound.kind == BoundKind::doubly && std::abs(lambda) < kLambdaZero) {
    check(x, bound, lambda, box);
    return 1.0 / (x - bound.lower) + 1.0 / (bound.upper - x);
  }
  return std::exp(log_derivative(x, bound, lambda, box));
}

double inverse(double y, const Bound& bound, double lambda, const LambdaBox& box) {
  if (!std::isfinite(y)) throw std::domain_error("inverse of a non-finite value");
  if (bound.kind == BoundKind::unbounded) return y;
  if (!box.contains(lambda)) {
    throw std::domain_error("lambda " + std::to_string(lambda) + " is outside the search box");
  }
  double log_a = y;
  if (std::abs(lambda) >= kLambdaZero) {
    const double arg = lambda * y;
    if (!(arg > -1.0)) {
      throw std::domain_error("value " + std::to_string(y) +
                              " is outside the image of the transformation for lambda " +
                              std::to_string(lambda));
    }
    log_a = std::log1p(arg) / lambda;
  }
  double x;
  if (bound.kind == BoundKind::lower) {
    x = bound.lower + std::exp(log_a);
    if (!(x > bound.lower)) x = std::nextafter(bound.lower, INFINITY);
  } else {
    // l + (u - l) * logistic(log_a)
    const double width = bound.upper - bound.lower;
    x = log_a >= 0.0 ? bound.upper - width / (1.0 + std::exp(log_a))
                     : bound.lower + width / (1.0 + std::exp(-log_a));
    if (!(x > bound.lower)) x = std::nextafter(bound.lower, bound.upper);
    if (!(x < bound.upper)) x = std::nextafter(bound.upper, bound.lower);
  }
  if (!std::isfinite(x)) throw std::domain_error("inverse overflowed");
  return x;
}

TransformParams::TransformParams(BoundsSpec bounds, LambdaBox box)
    : bounds_(std::move(bounds)), box_(box) {
  if (!(box_.min < box_.max) || !box_.contains(1.0)) {
    throw std::invalid_argument("lambda box must be a proper interval containing 1");
  }
  lambda_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(bounds_.size()));
  fixed_.resize(bounds_.size());
  for (std::size_t j = 0; j < bounds_.size(); ++j) {
    fixed_[j] = bounds_[j].kind == BoundKind::unbounded;
  }
}

std::size_t TransformParams::n_free() const {
  std::size_t count = 0;
  for (bool f : fixed_) count += f ? 0 : 1;
  return count;
}

void TransformParams::set_lambda(std::size_t j, double value) {
  if (j >= d()) throw std::out_of_range("lambda index out of range");
  if (bounds_[j].kind == BoundKind::unbounded) {
    if (value != 1.0) throw std::logic_error("unbounded variables keep lambda = 1");
    return;
  }
  if (!box_.contains(value)) {
    throw std::domain_error("lambda " + std::to_string(value) + " is outside the search box");
  }
  lambda_[static_cast<Eigen::Index>(j)] = value;
}

void TransformParams::fix(std::size_t j, double value) {
  set_lambda(j, value);
  fixed_[j] = true;
}

Eigen::VectorXd transform_column(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound,
                                 double lambda, const LambdaBox& box) {
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = forward(x[i], bound, lambda, box);
  return y;
}

Eigen::MatrixXd transform(const Eigen::Ref<const Eigen::MatrixXd>& x, const TransformParams& params) {
  if (static_cast<std::size_t>(x.cols()) != params.d()) {
    throw std::invalid_argument("data width does not match transformation parameters");
  }
  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    y.col(j) = transform_column(x.col(j), params.bounds()[jj], params.lambda(jj), params.box());
  }
  return y;
}

double log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& row, const TransformParams& params) {
  if (static_cast<std::size_t>(row.size()) != params.d()) {
    throw std::invalid_argument("row width does not match transformation parameters");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < params.d(); ++j) {
    total += log_derivative(row[static_cast<Eigen::Index>(j)], params.bounds()[j], params.lambda(j),
                            params.box());
  }
  return total;
}

Eigen::VectorXd log_jacobian_rows(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const TransformParams& params) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = log_jacobian(x.row(i).transpose(), params);
  return out;
}

double column_log_jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound,
                           double lambda, const LambdaBox& box) {
  if (bound.kind == BoundKind::unbounded) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) total += log_derivative(x[i], bound, lambda, box);
  return total;
}

}  // namespace gmmb
