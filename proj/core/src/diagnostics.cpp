#include "gmmb/diagnostics.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace gmmb {

double bic(double loglik, long df, long n) {
  return 2.0 * loglik - static_cast<double>(df) * std::log(static_cast<double>(n));
}

double icl(double bic_value, double entropy_total) { return bic_value - 2.0 * entropy_total; }

EntropyMeasures entropy_measures(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  EntropyMeasures m;
  m.per_row = Eigen::VectorXd::Zero(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double e = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      const double p = z(i, k);
      if (p > 0.0) e -= p * std::log(p);
    }
    m.per_row[i] = std::max(e, 0.0);
  }
  m.total = m.per_row.sum();
  if (z.cols() > 1 && z.rows() > 0) {
    m.nec = m.total / (static_cast<double>(z.rows()) * std::log(static_cast<double>(z.cols())));
  }
  return m;
}

MapClassification map_classify(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  MapClassification out;
  out.labels.resize(static_cast<std::size_t>(z.rows()));
  out.uncertainty.resize(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < z.cols(); ++k) {
      if (z(i, k) > z(i, best)) best = k;
    }
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    out.uncertainty[i] = std::max(0.0, 1.0 - z(i, best));
  }
  return out;
}

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("partitions differ in length");
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, count] : cells) index += pairs(count);
  for (const auto& [key, count] : rows) sum_a += pairs(count);
  for (const auto& [key, count] : cols) sum_b += pairs(count);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

CriterionReport criteria(double loglik, long df, const Eigen::Ref<const Eigen::MatrixXd>& z) {
  CriterionReport r;
  r.loglik = loglik;
  r.df = df;
  r.n = static_cast<long>(z.rows());
  r.bic = bic(loglik, df, r.n);
  const EntropyMeasures e = entropy_measures(z);
  r.entropy_total = e.total;
  r.nec = e.nec;
  r.icl = icl(r.bic, e.total);
  return r;
}

}  // namespace gmmb
