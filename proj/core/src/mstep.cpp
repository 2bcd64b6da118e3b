#include "gmmb/mstep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace gmmb {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// Factors for Sigma = orientation * diag(eigenvalues) * orientation^T,
/// reordered so the shape is decreasing.
CovarianceFactors factors_from_spectrum(const Eigen::VectorXd& eigenvalues,
                                        const Eigen::MatrixXd& orientation) {
  const Eigen::Index d = eigenvalues.size();
  if (!(eigenvalues.minCoeff() > 0.0) || !eigenvalues.allFinite()) {
    throw SingularCovariance("covariance is not positive definite");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eigenvalues[a] > eigenvalues[b]; });
  CovarianceFactors f;
  f.volume = std::exp(eigenvalues.array().log().mean());
  f.shape.resize(d);
  f.orientation.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    f.shape[j] = eigenvalues[src] / f.volume;
    f.orientation.col(j) = orientation.col(src);
  }
  return f;
}

CovarianceFactors diagonal_factors(const Eigen::VectorXd& diag) {
  return factors_from_spectrum(diag, Eigen::MatrixXd::Identity(diag.size(), diag.size()));
}

Eigen::MatrixXd pooled(const WeightedScatter& s) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(s.scatter.front().rows(), s.scatter.front().cols());
  for (const auto& wk : s.scatter) w += wk;
  return w;
}

double geometric_mean(const Eigen::VectorXd& v) { return std::exp(v.array().log().mean()); }

std::vector<CovarianceFactors> vei(const WeightedScatter& s, const MStepControls& c,
                                   const CovarianceFactors* warm) {
  const auto G = static_cast<std::size_t>(s.nk.size());
  const Eigen::Index dim = s.scatter.front().rows();
  const double d = static_cast<double>(dim);
  Eigen::VectorXd b = pooled(s).diagonal();
  if (warm && warm->d() == dim) b = warm->matrix().diagonal();
  b /= geometric_mean(b);
  std::vector<double> vol(G);
  double prev = INFINITY;
  for (int it = 0; it < c.max_inner; ++it) {
    double obj = 0.0;
    for (std::size_t k = 0; k < G; ++k) {
      vol[k] = (s.scatter[k].diagonal().array() / b.array()).sum() / (d * s.nk[static_cast<Eigen::Index>(k)]);
      obj += s.nk[static_cast<Eigen::Index>(k)] * d * std::log(vol[k]);
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(b.size());
    for (std::size_t k = 0; k < G; ++k) next += s.scatter[k].diagonal() / vol[k];
    b = next / geometric_mean(next);
    if (std::abs(prev - obj) <= c.inner_tol * (1.0 + std::abs(obj))) break;
    prev = obj;
  }
  std::vector<CovarianceFactors> out;
  for (std::size_t k = 0; k < G; ++k) {
    vol[k] = (s.scatter[k].diagonal().array() / b.array()).sum() / (d * s.nk[static_cast<Eigen::Index>(k)]);
    out.push_back(diagonal_factors(vol[k] * b));
  }
  return out;
}

struct VveState {
  Eigen::MatrixXd orientation;
  std::vector<Eigen::VectorXd> spectra;  // C_k, in the column order of orientation
};

std::vector<Eigen::VectorXd> vve_spectra(const WeightedScatter& s, const Eigen::MatrixXd& d) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t k = 0; k < s.scatter.size(); ++k) {
    out.push_back((d.transpose() * s.scatter[k] * d).diagonal() / s.nk[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

VveState vve(const WeightedScatter& s, const MStepControls& c, const Eigen::MatrixXd* warm) {
  const auto G = s.scatter.size();
  const Eigen::Index dim = s.scatter.front().rows();
  Eigen::MatrixXd orient;
  if (warm && warm->rows() == dim && warm->cols() == dim) {
    orient = *warm;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pooled(s));
    orient = es.eigenvectors();
  }
  std::vector<double> omega(G);
  for (std::size_t k = 0; k < G; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.scatter[k], Eigen::EigenvaluesOnly);
    omega[k] = es.eigenvalues().maxCoeff();
  }
  double prev = vve_objective(s, orient);
  for (int it = 0; it < c.max_inner; ++it) {
    const auto spectra = vve_spectra(s, orient);
    // Majorize each tr(W_k D C_k^{-1} D^T) by its tangent plane at the
    // current D; the minimizer over orthogonal matrices is a Procrustes
    // rotation.
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t k = 0; k < G; ++k) {
      const Eigen::MatrixXd shifted =
          omega[k] * Eigen::MatrixXd::Identity(dim, dim) - s.scatter[k];
      target += shifted * orient * spectra[k].cwiseInverse().asDiagonal();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::MatrixXd next = svd.matrixU() * svd.matrixV().transpose();
    const double obj = vve_objective(s, next);
    if (!(obj <= prev)) break;
    orient = std::move(next);
    const bool done = prev - obj <= c.inner_tol * (1.0 + std::abs(obj));
    prev = obj;
    if (done) break;
  }
  return {orient, vve_spectra(s, orient)};
}

}  // namespace

WeightedScatter weighted_scatter(const Eigen::Ref<const Eigen::MatrixXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (y.rows() != z.rows()) throw std::invalid_argument("data and responsibilities differ in length");
  WeightedScatter s;
  s.nk = z.colwise().sum().transpose();
  const double n = static_cast<double>(y.rows());
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    if (!(s.nk[k] >= kEmptyComponent * n)) {
      throw DegenerateFit("component " + std::to_string(k + 1) + " is empty");
    }
    Eigen::VectorXd mu = (y.transpose() * z.col(k)) / s.nk[k];
    const Eigen::MatrixXd centered = y.rowwise() - mu.transpose();
    s.scatter.push_back(centered.transpose() * z.col(k).asDiagonal() * centered);
    s.means.push_back(std::move(mu));
  }
  return s;
}

double vve_objective(const WeightedScatter& s, const Eigen::MatrixXd& orientation) {
  double total = 0.0;
  const auto spectra = vve_spectra(s, orientation);
  for (std::size_t k = 0; k < spectra.size(); ++k) {
    total += s.nk[static_cast<Eigen::Index>(k)] *
             (spectra[k].array().log().sum() + static_cast<double>(spectra[k].size()));
  }
  return total;
}

std::vector<CovarianceFactors> estimate_covariances(Model model, const WeightedScatter& s,
                                                    const MStepControls& controls,
                                                    const CovarianceFactors* warm) {
  const auto G = s.scatter.size();
  if (G == 0) throw std::invalid_argument("no components");
  const Eigen::Index dim = s.scatter.front().rows();
  if (!valid_for_dimension(model, dim)) {
    throw std::invalid_argument("model " + std::string(name(model)) + " is not valid for d = " +
                                std::to_string(dim));
  }
  const double n = s.nk.sum();
  const double d = static_cast<double>(dim);
  std::vector<CovarianceFactors> out;
  out.reserve(G);
  auto nk = [&](std::size_t k) { return s.nk[static_cast<Eigen::Index>(k)]; };

  switch (model) {
    case Model::E:
    case Model::EEE: {
      const auto f = CovarianceFactors::from_matrix(pooled(s) / n);
      out.assign(G, f);
      break;
    }
    case Model::V:
    case Model::VVV:
      for (std::size_t k = 0; k < G; ++k) out.push_back(CovarianceFactors::from_matrix(s.scatter[k] / nk(k)));
      break;
    case Model::EII: {
      const double v = pooled(s).trace() / (n * d);
      out.assign(G, diagonal_factors(Eigen::VectorXd::Constant(dim, v)));
      break;
    }
    case Model::VII:
      for (std::size_t k = 0; k < G; ++k) {
        out.push_back(diagonal_factors(Eigen::VectorXd::Constant(dim, s.scatter[k].trace() / (nk(k) * d))));
      }
      break;
    case Model::EEI:
      out.assign(G, diagonal_factors(pooled(s).diagonal() / n));
      break;
    case Model::VVI:
      for (std::size_t k = 0; k < G; ++k) out.push_back(diagonal_factors(s.scatter[k].diagonal() / nk(k)));
      break;
    case Model::EVI: {
      double vol = 0.0;
      for (std::size_t k = 0; k < G; ++k) vol += geometric_mean(s.scatter[k].diagonal());
      vol /= n;
      for (std::size_t k = 0; k < G; ++k) {
        const Eigen::VectorXd w = s.scatter[k].diagonal();
        out.push_back(diagonal_factors(vol * w / geometric_mean(w)));
      }
      break;
    }
    case Model::VEI:
      out = vei(s, controls, warm);
      break;
    case Model::VVE: {
      const VveState st = vve(s, controls, warm ? &warm->orientation : nullptr);
      for (std::size_t k = 0; k < G; ++k) out.push_back(factors_from_spectrum(st.spectra[k], st.orientation));
      break;
    }
  }
  return out;
}

std::vector<CovarianceFactors> checked_covariances(Model model, const WeightedScatter& s, double floor,
                                                   const MStepControls& controls,
                                                   const CovarianceFactors* warm) {
  try {
    auto covs = estimate_covariances(model, s, controls, warm);
    for (std::size_t k = 0; k < covs.size(); ++k) {
      check_factors(covs[k]);
      if (covs[k].eigenvalues().minCoeff() < floor) {
        throw DegenerateFit("component " + std::to_string(k + 1) + " covariance hit the variance floor");
      }
    }
    return covs;
  } catch (const SingularCovariance& e) {
    throw DegenerateFit(std::string("singular covariance: ") + e.what());
  }
}

double expected_log_density(const WeightedScatter& s, const std::vector<CovarianceFactors>& covs) {
  double total = 0.0;
  for (std::size_t k = 0; k < covs.size(); ++k) {
    const auto& f = covs[k];
    const Eigen::VectorXd ev = f.eigenvalues();
    const Eigen::MatrixXd rotated = f.orientation.transpose() * s.scatter[k] * f.orientation;
    const double trace = (rotated.diagonal().array() / ev.array()).sum();
    const double nk = s.nk[static_cast<Eigen::Index>(k)];
    total -= 0.5 * (nk * (static_cast<double>(f.d()) * kLog2Pi + f.log_det()) + trace);
  }
  return total;
}

double variance_floor(const Eigen::Ref<const Eigen::MatrixXd>& y) {
  const Eigen::RowVectorXd mean = y.colwise().mean();
  const double avg_var =
      (y.rowwise() - mean).array().square().colwise().sum().mean() / static_cast<double>(y.rows());
  return kVarianceFloor * avg_var;
}

MixtureParams maximize_theta(Model model, const Eigen::Ref<const Eigen::MatrixXd>& y,
                             const Eigen::Ref<const Eigen::MatrixXd>& z, double floor,
                             const MStepControls& controls, const MixtureParams* warm) {
  const WeightedScatter s = weighted_scatter(y, z);
  const CovarianceFactors* warm_factors = nullptr;
  if (warm && warm->model == model && !warm->covariances.empty()) warm_factors = &warm->covariances.front();
  MixtureParams p;
  p.model = model;
  p.weights = s.nk / s.nk.sum();
  p.means = s.means;
  p.covariances = checked_covariances(model, s, floor, controls, warm_factors);
  return p;
}

}  // namespace gmmb
