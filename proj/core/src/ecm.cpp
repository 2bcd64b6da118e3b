#include "gmmb/ecm.hpp"

#include "gmmb/kmeans.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>

namespace gmmb {

namespace {

/// Brent's method works to roughly 2^(1-bits) relative precision in lambda.
constexpr int kBrentBits = 20;
constexpr std::uintmax_t kBrentMaxIter = 200;
/// Half-width of the local fallback search around the current power.
constexpr double kLocalSearch = 0.25;
/// Objective value standing in for an infeasible trial point.
constexpr double kInfeasible = 1e300;

struct Minimum {
  double x;
  double f;
};

template <typename F>
Minimum brent(F&& f, double lo, double hi) {
  std::uintmax_t iters = kBrentMaxIter;
  auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iters);
  return {x, fx};
}

double profiled_q_transformed(const Eigen::Ref<const Eigen::MatrixXd>& y, const Eigen::MatrixXd& z,
                              double log_jacobian_total, Model model, const MStepControls& controls,
                              const MixtureParams* warm) {
  try {
    const WeightedScatter s = weighted_scatter(y, z);
    const CovarianceFactors* warm_factors = nullptr;
    if (warm && warm->model == model && !warm->covariances.empty()) warm_factors = &warm->covariances.front();
    const auto covs = checked_covariances(model, s, variance_floor(y), controls, warm_factors);
    const double total = s.nk.sum();
    double q = 0.0;
    for (Eigen::Index k = 0; k < s.nk.size(); ++k) q += s.nk[k] * std::log(s.nk[k] / total);
    q += expected_log_density(s, covs);
    // rows of z sum to one, so the Jacobian enters once per observation
    q += log_jacobian_total;
    return std::isfinite(q) ? q : -std::numeric_limits<double>::infinity();
  } catch (const DegenerateFit&) {
    return -std::numeric_limits<double>::infinity();
  }
}

TransformParams apply_fixed(TransformParams tp, const FitConfig& config) {
  for (std::size_t j = 0; j < config.fixed_lambda.size(); ++j) {
    if (config.fixed_lambda[j]) tp.fix(j, *config.fixed_lambda[j]);
  }
  return tp;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double Responsibilities::max_row_error() const {
  if (z.size() == 0) return 0.0;
  return (z.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

Responsibilities Responsibilities::one_hot(const std::vector<int>& labels0, Eigen::Index G) {
  Responsibilities r{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels0.size()), G)};
  for (std::size_t i = 0; i < labels0.size(); ++i) {
    if (labels0[i] < 0 || labels0[i] >= G) throw std::out_of_range("label outside 0..G-1");
    r.z(static_cast<Eigen::Index>(i), labels0[i]) = 1.0;
  }
  return r;
}

void FitConfig::validate(Eigen::Index d) const {
  if (G < 1) throw std::invalid_argument("G must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (n_kmeans_starts < 1) throw std::invalid_argument("k-means starts must be at least 1");
  if (!(lambda_box.min < lambda_box.max)) throw std::invalid_argument("lambda box is empty");
  if (!valid_for_dimension(model, d)) {
    throw std::invalid_argument("model " + std::string(name(model)) + " is not valid for d = " +
                                std::to_string(d));
  }
  if (!fixed_lambda.empty() && static_cast<Eigen::Index>(fixed_lambda.size()) != d) {
    throw std::invalid_argument("fixed lambda list must have one entry per variable");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, int G, Model model) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(G));
  return splitmix64(h ^ (static_cast<std::uint64_t>(model) + 0x100));
}

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max_iterations";
    case FitStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

EStepResult e_step_transformed(const Eigen::Ref<const Eigen::MatrixXd>& y, double log_jacobian_total,
                               const MixtureParams& params) {
  Eigen::MatrixXd logw;
  try {
    logw = weighted_log_densities(y, params);
  } catch (const SingularCovariance& e) {
    throw DegenerateFit(std::string("singular covariance: ") + e.what());
  }
  EStepResult r;
  r.z.z.resize(y.rows(), params.G());
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double lse = log_sum_exp(logw.row(i).transpose());
    if (!std::isfinite(lse)) {
      throw DegenerateFit("observation " + std::to_string(i + 1) + " has zero density under every component");
    }
    Eigen::RowVectorXd zi = (logw.row(i).array() - lse).exp();
    r.z.z.row(i) = zi / zi.sum();
    total += lse;
  }
  r.loglik = total + log_jacobian_total;
  return r;
}

EStepResult e_step(const Dataset& data, const MixtureParams& params, const TransformParams& tparams) {
  const Eigen::MatrixXd y = transform(data.values(), tparams);
  return e_step_transformed(y, log_jacobian_rows(data.values(), tparams).sum(), params);
}

double q_function(const Dataset& data, const Responsibilities& z, const MixtureParams& params,
                  const TransformParams& tparams) {
  const Eigen::MatrixXd y = transform(data.values(), tparams);
  const Eigen::MatrixXd logw = weighted_log_densities(y, params);
  const Eigen::VectorXd logj = log_jacobian_rows(data.values(), tparams);
  return (z.z.array() * logw.array()).sum() + logj.dot(z.z.rowwise().sum());
}

double profiled_q(const Dataset& data, const Responsibilities& z, Model model, const TransformParams& tparams,
                  const MStepControls& controls, const MixtureParams* warm) {
  const Eigen::MatrixXd y = transform(data.values(), tparams);
  return profiled_q_transformed(y, z.z, log_jacobian_rows(data.values(), tparams).sum(), model, controls,
                                warm);
}

LambdaStep cm_step_lambda(const Dataset& data, const Responsibilities& z, const MixtureParams& params,
                          const TransformParams& tparams, const MStepControls& controls) {
  LambdaStep out{tparams, 0.0, 0.0, false};
  out.q_before = q_function(data, z, params, tparams);
  if (tparams.n_free() == 0) {
    out.q_after = out.q_before;
    return out;
  }

  const Eigen::MatrixXd& x = data.values();
  const LambdaBox& box = tparams.box();
  Eigen::MatrixXd y = transform(x, tparams);
  Eigen::VectorXd col_logj(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    col_logj[j] = column_log_jacobian(x.col(j), tparams.bounds()[jj], tparams.lambda(jj), box);
  }

  for (std::size_t jj = 0; jj < tparams.d(); ++jj) {
    if (tparams.fixed(jj)) continue;
    const auto j = static_cast<Eigen::Index>(jj);
    const Bound& bound = tparams.bounds()[jj];
    const Eigen::VectorXd saved = y.col(j);
    const double others = col_logj.sum() - col_logj[j];

    auto objective = [&](double lambda) {
      try {
        y.col(j) = transform_column(x.col(j), bound, lambda, box);
        const double logj = others + column_log_jacobian(x.col(j), bound, lambda, box);
        const double q = profiled_q_transformed(y, z.z, logj, params.model, controls, &params);
        return std::isfinite(q) ? -q : kInfeasible;
      } catch (const std::domain_error&) {
        return kInfeasible;
      }
    };

    const double current = out.tparams.lambda(jj);
    Minimum best{current, objective(current)};
    if (best.f >= kInfeasible) {
      out.warning = true;
      y.col(j) = saved;
      continue;
    }
    const Minimum global = brent(objective, box.min, box.max);
    if (global.f < best.f) best = global;
    const Minimum local =
        brent(objective, std::max(box.min, current - kLocalSearch), std::min(box.max, current + kLocalSearch));
    if (local.f < best.f) best = local;

    out.tparams.set_lambda(jj, best.x);
    y.col(j) = transform_column(x.col(j), bound, best.x, box);
    col_logj[j] = column_log_jacobian(x.col(j), bound, best.x, box);
  }

  out.q_after = profiled_q_transformed(y, z.z, col_logj.sum(), params.model, controls, &params);
  return out;
}

MixtureParams cm_step_theta(const Dataset& data, const Responsibilities& z, const TransformParams& tparams,
                            Model model, const MStepControls& controls, const MixtureParams* warm) {
  const Eigen::MatrixXd y = transform(data.values(), tparams);
  return maximize_theta(model, y, z.z, variance_floor(y), controls, warm);
}

double marginal_lambda(const Eigen::Ref<const Eigen::VectorXd>& x, const Bound& bound, const LambdaBox& box) {
  if (bound.kind == BoundKind::unbounded) return 1.0;
  const double n = static_cast<double>(x.size());
  auto objective = [&](double lambda) {
    try {
      const Eigen::VectorXd y = transform_column(x, bound, lambda, box);
      const double var = (y.array() - y.mean()).square().sum() / n;
      if (!(var > 0.0) || !std::isfinite(var)) return kInfeasible;
      return 0.5 * n * std::log(var) - column_log_jacobian(x, bound, lambda, box);
    } catch (const std::domain_error&) {
      return kInfeasible;
    }
  };
  return brent(objective, box.min, box.max).x;
}

Initialization initialize(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config) {
  config.validate(data.d());
  TransformParams tp = apply_fixed(TransformParams(bounds, config.lambda_box), config);
  for (std::size_t j = 0; j < tp.d(); ++j) {
    if (tp.fixed(j)) continue;
    tp.set_lambda(j, marginal_lambda(data.values().col(static_cast<Eigen::Index>(j)), bounds[j], tp.box()));
  }
  if (config.G == 1) {
    return {tp, Responsibilities{Eigen::MatrixXd::Ones(data.n(), 1)}};
  }
  Eigen::MatrixXd y = transform(data.values(), tp);
  const Eigen::RowVectorXd mean = y.colwise().mean();
  y.rowwise() -= mean;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double sd = std::sqrt(y.col(j).squaredNorm() / static_cast<double>(y.rows()));
    if (sd > 0.0) y.col(j) /= sd;
  }
  const KMeansResult km =
      kmeans(y, config.G, config.n_kmeans_starts, derive_seed(config.seed, config.G, config.model));
  return {tp, Responsibilities::one_hot(km.labels, config.G)};
}

FitResult fit_from(const Dataset& data, const TransformParams& tparams, const Responsibilities& z0,
                   const FitConfig& config) {
  config.validate(data.d());
  if (z0.n() != data.n() || z0.G() != config.G) {
    throw std::invalid_argument("initial responsibilities do not match data and G");
  }
  FitResult r;
  r.model = config.model;
  r.G = config.G;
  r.n = static_cast<long>(data.n());
  r.tparams = tparams;
  try {
    TransformParams tp = tparams;
    MixtureParams params = cm_step_theta(data, z0, tp, config.model, config.mstep);
    EStepResult es;
    for (int iter = 1;; ++iter) {
      es = e_step(data, params, tp);
      r.loglik_trace.push_back(es.loglik);
      r.n_iter = iter;
      if (r.loglik_trace.size() >= 2) {
        const double prev = r.loglik_trace[r.loglik_trace.size() - 2];
        const double rel = (es.loglik - prev) / (1.0 + std::abs(prev));
        if (rel < -1e-8) {
          throw DegenerateFit("log-likelihood decreased at iteration " + std::to_string(iter));
        }
        if (rel < config.tol) {
          r.status = FitStatus::converged;
          break;
        }
      }
      if (iter >= config.max_iter) {
        r.status = FitStatus::max_iterations;
        break;
      }
      const LambdaStep ls = cm_step_lambda(data, es.z, params, tp, config.mstep);
      r.lambda_warning = r.lambda_warning || ls.warning;
      tp = ls.tparams;
      params = cm_step_theta(data, es.z, tp, config.model, config.mstep, &params);
    }
    r.params = std::move(params);
    r.tparams = std::move(tp);
    r.loglik = es.loglik;
    r.z = std::move(es.z);
  } catch (const DegenerateFit& e) {
    r.status = FitStatus::degenerate;
    r.diagnostic = e.what();
    return r;
  }

  r.df = count_free_parameters(config.model, static_cast<long>(data.d()), config.G,
                               static_cast<long>(r.tparams.n_free()));
  const CriterionReport c = criteria(r.loglik, r.df, r.z.z);
  r.bic = c.bic;
  r.icl = c.icl;
  r.nec = c.nec;
  r.entropy_total = c.entropy_total;
  r.entropy = entropy_measures(r.z.z).per_row;
  const MapClassification map = map_classify(r.z.z);
  r.classification = map.labels;
  r.uncertainty = map.uncertainty;
  return r;
}

FitResult fit(const Dataset& data, const BoundsSpec& bounds, const FitConfig& config) {
  config.validate(data.d());
  ValidationReport report = validate(data, bounds);
  if (!report.ok()) throw ValidationError(report.describe(data), report);
  Initialization init;
  try {
    init = initialize(data, bounds, config);
  } catch (const DegenerateFit& e) {
    FitResult r;
    r.model = config.model;
    r.G = config.G;
    r.n = static_cast<long>(data.n());
    r.status = FitStatus::degenerate;
    r.diagnostic = e.what();
    return r;
  }
  return fit_from(data, init.tparams, init.z, config);
}

}  // namespace gmmb
