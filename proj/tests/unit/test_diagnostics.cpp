#include <gmmb/diagnostics.hpp>
#include <gmmb/sweep.hpp>

#include <doctest.h>

#include "../support/ari_oracle.hpp"
#include "../support/synthetic.hpp"

#include <cmath>
#include <random>

using namespace gmmb;
using doctest::Approx;

TEST_CASE("BIC follows the larger-is-better convention") {
  CHECK(bic(-46.1870, 6, 245) == Approx(-125.3815).epsilon(0.0005 / 125.3815));
  CHECK(bic(-54.6401, 5, 245) == Approx(-136.7865).epsilon(0.0005 / 136.7865));
  CHECK(bic(0.0, 1, 1) == 0.0);
  CHECK(bic(-10, 3, 50) < bic(-10, 2, 50));
  CHECK(bic(-9, 3, 50) > bic(-10, 3, 50));
}

TEST_CASE("entropy and ICL") {
  Eigen::MatrixXd hard(3, 2);
  hard << 1, 0, 0, 1, 1, 0;
  const EntropyMeasures h = entropy_measures(hard);
  CHECK(h.total == 0.0);
  CHECK(h.nec == 0.0);
  CHECK(icl(-12.5, h.total) == -12.5);

  Eigen::MatrixXd half(1, 2);
  half << 0.5, 0.5;
  CHECK(entropy_measures(half).per_row[0] == Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(entropy_measures(half).nec == Approx(1.0).epsilon(1e-15));

  CHECK(entropy_measures(Eigen::MatrixXd::Ones(4, 1)).nec == 0.0);
  CHECK(icl(-125.3815, 2.1316) == Approx(-129.6447).epsilon(1e-12));

  Eigen::MatrixXd z(2, 3);
  z << 0.2, 0.3, 0.5, 0.9, 0.1, 0.0;
  const EntropyMeasures e = entropy_measures(z);
  const double e0 = -(0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5));
  const double e1 = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  CHECK(e.per_row[0] == Approx(e0).epsilon(1e-14));
  CHECK(e.per_row[1] == Approx(e1).epsilon(1e-14));
  CHECK(e.total == Approx(e0 + e1).epsilon(1e-14));
  CHECK(e.nec == Approx((e0 + e1) / (2 * std::log(3.0))).epsilon(1e-14));

  const CriterionReport c = criteria(-100.0, 7, z);
  CHECK(c.n == 2);
  CHECK(c.bic == Approx(-200.0 - 7 * std::log(2.0)));
  CHECK(c.icl == Approx(c.bic - 2 * e.total));
}

TEST_CASE("MAP labels and uncertainty") {
  Eigen::MatrixXd z(3, 2);
  z << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
  const MapClassification m = map_classify(z);
  CHECK(m.labels == std::vector<int>{2, 1, 1});
  CHECK(m.uncertainty[0] == Approx(0.2));
  CHECK(m.uncertainty[1] == 0.5);
  const MapClassification one = map_classify(Eigen::MatrixXd::Ones(2, 1));
  CHECK(one.labels == std::vector<int>{1, 1});
  CHECK(one.uncertainty.maxCoeff() == 0.0);
}

TEST_CASE("entropy and uncertainty stay within their bounds") {
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> gamma(0.3);
  for (int G = 1; G <= 6; ++G) {
    Eigen::MatrixXd z(400, G);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (int k = 0; k < G; ++k) z(i, k) = gamma(rng) + 1e-300;
      z.row(i) /= z.row(i).sum();
    }
    z.row(0).setConstant(1.0 / G);
    const MapClassification m = map_classify(z);
    const EntropyMeasures e = entropy_measures(z);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      CHECK(m.uncertainty[i] >= 0.0);
      CHECK(m.uncertainty[i] <= (G - 1.0) / G + 1e-15);
      CHECK(e.per_row[i] >= 0.0);
      CHECK(e.per_row[i] <= std::log(static_cast<double>(G)) + 1e-12);
    }
    CHECK(e.nec >= 0.0);
    CHECK(e.nec <= 1.0);
    CHECK(icl(-50.0, e.total) <= -50.0);
  }
}

TEST_CASE("adjusted Rand index") {
  const std::vector<int> a{1, 1, 2, 2, 3, 3};
  const std::vector<int> b{1, 1, 1, 2, 2, 2};
  CHECK(adjusted_rand(a, b) == Approx(gmmb::testing::ari_by_pairs(a, b)).epsilon(1e-14));
  CHECK(adjusted_rand(a, a) == 1.0);
  CHECK(adjusted_rand(a, std::vector<int>{7, 7, 0, 0, 5, 5}) == Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(adjusted_rand(std::vector<int>(6, 1), b)) <= 1e-15);
  CHECK(adjusted_rand(std::vector<int>{1}, std::vector<int>{4}) == 1.0);
  CHECK_THROWS_AS(adjusted_rand(a, std::vector<int>{1, 2}), std::invalid_argument);
}

TEST_CASE("adjusted Rand index agrees with pair counting on every small partition") {
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::vector<int>> parts;
    gmmb::testing::for_each_partition(n, 3, [&](const std::vector<int>& p) { parts.push_back(p); });
    for (const auto& p : parts) {
      for (const auto& q : parts) {
        const double v = adjusted_rand(p, q);
        CHECK(std::abs(v - gmmb::testing::ari_by_pairs(p, q)) <= 1e-12);
        CHECK(v == Approx(adjusted_rand(q, p)).epsilon(1e-14));
      }
    }
  }
}

namespace {

Dataset two_groups(int n, std::uint64_t seed) { return Dataset(gmmb::testing::two_cluster_1d(n, 0.5, seed).x); }

}  // namespace

TEST_CASE("sweep picks the criterion maxima and records failures") {
  const Dataset data = two_groups(250, 6);
  const BoundsSpec bounds({Bound::lower_at(0)});
  FitConfig base;
  base.seed = 2;
  const SweepResult s = sweep(data, bounds, {1, 2, 3}, {Model::E, Model::V}, base);
  REQUIRE(s.entries.size() == 6);
  CHECK(s.entries[0].G == 1);
  CHECK(s.entries[1].model == Model::V);
  CHECK(s.entries[5].G == 3);
  double best_bic = -std::numeric_limits<double>::infinity();
  double best_icl = best_bic;
  for (const auto& e : s.entries) {
    if (!e.result.ok()) continue;
    best_bic = std::max(best_bic, e.result.bic);
    best_icl = std::max(best_icl, e.result.icl);
  }
  CHECK(s.best_bic().result.bic == best_bic);
  CHECK(s.best_icl().result.icl == best_icl);
  CHECK(s.best_bic().G == 2);

  const SweepResult threaded = sweep(data, bounds, {1, 2, 3}, {Model::E, Model::V}, base, 4);
  REQUIRE(threaded.entries.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(threaded.entries[i].result.loglik == s.entries[i].result.loglik);
    CHECK(threaded.entries[i].result.classification == s.entries[i].result.classification);
  }
  CHECK(threaded.best_by_bic == s.best_by_bic);

  const SweepResult single = sweep(data, bounds, {1}, {Model::E}, base);
  REQUIRE(single.entries.size() == 1);
  CHECK(single.best_by_bic == 0u);
  CHECK(single.best_by_icl == 0u);
}

TEST_CASE("sweep failures") {
  Eigen::MatrixXd x(12, 1);
  x << 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3;
  const Dataset data(x);
  FitConfig base;
  const SweepResult s = sweep(data, BoundsSpec({Bound::lower_at(0)}), {1, 4}, {Model::V}, base);
  REQUIRE(s.entries.size() == 2);
  CHECK(s.entries[0].result.ok());
  CHECK_FALSE(s.entries[1].result.ok());
  CHECK(s.best_by_bic == 0u);

  CHECK_THROWS_AS(sweep(Dataset(Eigen::MatrixXd::Constant(8, 1, 2.0)), BoundsSpec({Bound::lower_at(0)}), {2, 3},
                        {Model::V}, base),
                  AllFitsFailed);
  CHECK_THROWS_AS(sweep(data, BoundsSpec({Bound::lower_at(0)}), {}, {Model::V}, base), std::invalid_argument);
}
