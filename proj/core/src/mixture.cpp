#include "gmmb/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace gmmb {

namespace {

constexpr std::array kModels{Model::E,   Model::V,   Model::EII, Model::VII, Model::EEI, Model::VEI,
                             Model::EVI, Model::VVI, Model::EEE, Model::VVE, Model::VVV};
constexpr std::array<std::string_view, 11> kNames{"E",   "V",   "EII", "VII", "EEI", "VEI",
                                                  "EVI", "VVI", "EEE", "VVE", "VVV"};

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

ModelTraits traits(Model m) {
  using enum Sharing;
  switch (m) {
    case Model::E: return {equal, identity, identity};
    case Model::V: return {varying, identity, identity};
    case Model::EII: return {equal, identity, identity};
    case Model::VII: return {varying, identity, identity};
    case Model::EEI: return {equal, equal, identity};
    case Model::VEI: return {varying, equal, identity};
    case Model::EVI: return {equal, varying, identity};
    case Model::VVI: return {varying, varying, identity};
    case Model::EEE: return {equal, equal, equal};
    case Model::VVE: return {varying, varying, equal};
    case Model::VVV: return {varying, varying, varying};
  }
  throw std::invalid_argument("unknown model");
}

std::string_view name(Model m) { return kNames[static_cast<std::size_t>(m)]; }

Model parse_model(std::string_view code) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == code) return kModels[i];
  }
  throw std::invalid_argument("unknown or unsupported model code '" + std::string(code) + "'");
}

bool is_univariate(Model m) { return m == Model::E || m == Model::V; }

bool valid_for_dimension(Model m, Eigen::Index d) {
  if (d < 1) return false;
  return is_univariate(m) == (d == 1);
}

std::span<const Model> all_models() { return kModels; }

CovarianceFactors CovarianceFactors::from_matrix(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw std::invalid_argument("covariance must be a non-empty square matrix");
  }
  if (!sigma.allFinite()) throw SingularCovariance("covariance has non-finite entries");
  const Eigen::Index d = sigma.rows();
  CovarianceFactors f;
  if (d == 1) {
    if (!(sigma(0, 0) > 0.0)) throw SingularCovariance("variance is not positive");
    f.volume = sigma(0, 0);
    f.shape = Eigen::VectorXd::Ones(1);
    f.orientation = Eigen::MatrixXd::Identity(1, 1);
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  if (es.info() != Eigen::Success) throw SingularCovariance("eigen-decomposition failed");
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  if (!(ev.minCoeff() > 0.0)) throw SingularCovariance("covariance is not positive definite");
  f.volume = std::exp(ev.array().log().mean());
  f.shape = ev / f.volume;
  f.orientation = es.eigenvectors().rowwise().reverse();
  return f;
}

CovarianceFactors CovarianceFactors::identity(Eigen::Index d) {
  return {1.0, Eigen::VectorXd::Ones(d), Eigen::MatrixXd::Identity(d, d)};
}

Eigen::MatrixXd CovarianceFactors::matrix() const {
  return volume * orientation * shape.asDiagonal() * orientation.transpose();
}

double CovarianceFactors::condition() const { return shape.maxCoeff() / shape.minCoeff(); }

double CovarianceFactors::log_det() const { return (volume * shape.array()).log().sum(); }

void check_factors(const CovarianceFactors& f) {
  if (!std::isfinite(f.volume) || !(f.volume > 0.0) || !f.shape.allFinite() ||
      !f.orientation.allFinite()) {
    throw SingularCovariance("invalid covariance factors");
  }
  if (!(f.shape.minCoeff() > 0.0) || !(f.condition() <= kMaxCondition)) {
    throw SingularCovariance("covariance condition number exceeds 1e12");
  }
}

void MixtureParams::validate() const {
  const Eigen::Index g = G();
  if (g < 1) throw std::invalid_argument("mixture needs at least one component");
  if (static_cast<Eigen::Index>(means.size()) != g ||
      static_cast<Eigen::Index>(covariances.size()) != g) {
    throw std::invalid_argument("component count mismatch");
  }
  const Eigen::Index dim = d();
  if (!valid_for_dimension(model, dim)) {
    throw std::invalid_argument("model " + std::string(name(model)) + " is not valid for d = " +
                                std::to_string(dim));
  }
  for (Eigen::Index k = 0; k < g; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (means[kk].size() != dim || covariances[kk].d() != dim ||
        covariances[kk].orientation.rows() != dim || covariances[kk].orientation.cols() != dim) {
      throw std::invalid_argument("component dimension mismatch");
    }
  }
  if (!(weights.minCoeff() > 0.0) || std::abs(weights.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("mixing weights must be positive and sum to one");
  }
}

double log_component_density(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& mu, const CovarianceFactors& sigma) {
  check_factors(sigma);
  const Eigen::VectorXd z = sigma.orientation.transpose() * (y - mu);
  const double quad = (z.array().square() / (sigma.volume * sigma.shape.array())).sum();
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + sigma.log_det() + quad);
}

Eigen::VectorXd log_component_density_rows(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                           const Eigen::Ref<const Eigen::VectorXd>& mu,
                                           const CovarianceFactors& sigma) {
  check_factors(sigma);
  const Eigen::MatrixXd centered = y.rowwise() - mu.transpose();
  const Eigen::MatrixXd z = centered * sigma.orientation;
  const Eigen::RowVectorXd inv = (sigma.volume * sigma.shape.array()).inverse().matrix().transpose();
  const Eigen::VectorXd quad = (z.array().square().rowwise() * inv.array()).rowwise().sum();
  const double c = static_cast<double>(y.cols()) * kLog2Pi + sigma.log_det();
  return -0.5 * (quad.array() + c);
}

Eigen::MatrixXd weighted_log_densities(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                       const MixtureParams& params) {
  Eigen::MatrixXd out(y.rows(), params.G());
  for (Eigen::Index k = 0; k < params.G(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out.col(k) = log_component_density_rows(y, params.means[kk], params.covariances[kk]).array() +
                 std::log(params.weights[k]);
  }
  return out;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

double log_mixture_density_transformed(const Eigen::Ref<const Eigen::VectorXd>& y,
                                       const MixtureParams& params) {
  Eigen::VectorXd terms(params.G());
  for (Eigen::Index k = 0; k < params.G(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    terms[k] = std::log(params.weights[k]) +
               log_component_density(y, params.means[kk], params.covariances[kk]);
  }
  return log_sum_exp(terms);
}

double log_density_original(const Eigen::Ref<const Eigen::VectorXd>& x, const MixtureParams& params,
                            const TransformParams& tparams) {
  if (static_cast<std::size_t>(x.size()) != tparams.d()) {
    throw std::invalid_argument("row width does not match transformation parameters");
  }
  Eigen::VectorXd y(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    y[j] = forward(x[j], tparams.bounds()[jj], tparams.lambda(jj), tparams.box());
  }
  return log_mixture_density_transformed(y, params) + log_jacobian(x, tparams);
}

long covariance_parameter_count(Model model, long d, long G) {
  if (d < 1 || G < 1) throw std::invalid_argument("d and G must be positive");
  if (!valid_for_dimension(model, d)) {
    throw std::invalid_argument("model " + std::string(name(model)) + " is not valid for d = " +
                                std::to_string(d));
  }
  const ModelTraits t = traits(model);
  auto times = [G](Sharing s, long count) {
    switch (s) {
      case Sharing::identity: return 0L;
      case Sharing::equal: return count;
      case Sharing::varying: return G * count;
    }
    return 0L;
  };
  return times(t.volume, 1) + times(t.shape, d - 1) + times(t.orientation, d * (d - 1) / 2);
}

long count_free_parameters(Model model, long d, long G, long n_free_lambda) {
  if (n_free_lambda < 0 || n_free_lambda > d) throw std::invalid_argument("invalid free lambda count");
  return (G - 1) + G * d + covariance_parameter_count(model, d, G) + n_free_lambda;
}

}  // namespace gmmb
