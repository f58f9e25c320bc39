#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "recsys/recsys.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace recsys;
using testsupport::evec;
using testsupport::pv;
using Catch::Matchers::WithinAbs;

namespace {

CovarianceModel identity_model(Eigen::Index m) {
  CovarianceModel model;
  model.mean = Eigen::VectorXd::Zero(m);
  model.covariance = Eigen::MatrixXd::Identity(m, m);
  model.inverse = Eigen::MatrixXd::Identity(m, m);
  model.regularization_lambda = 0.0;
  return model;
}

std::vector<PreferenceVector> random_vectors(int count, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  std::vector<PreferenceVector> vectors;
  for (int i = 0; i < count; ++i) {
    PreferenceVector v;
    v.user_id = "u" + std::to_string(i);
    v.components.resize(m);
    for (int j = 0; j < m; ++j) v.components[j] = value(rng);
    vectors.push_back(std::move(v));
  }
  return vectors;
}

}  // namespace

TEST_CASE("euclidean distance matches hand values", "[metrics]") {
  CHECK(euclidean_distance(pv("a", {0, 0}), pv("b", {3, 4})) == 5.0);
  const auto a = pv("a", {1.5, -2.25, 7.0});
  CHECK(euclidean_distance(a, a) == 0.0);
  CHECK(euclidean_distance(pv("a", {1, 2, 3}), pv("b", {2, 2, 3})) == 1.0);
  CHECK_THROWS_AS(euclidean_distance(pv("a", {1, 2}), pv("b", {1, 2, 3})), UsageError);
}

TEST_CASE("fit_covariance reproduces the hand-computed sample covariance", "[metrics]") {
  const auto model = fit_covariance({pv("a", {0, 0}), pv("b", {2, 0}), pv("c", {0, 2}), pv("d", {2, 2})});
  CHECK_THAT(model.mean[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(model.mean[1], WithinAbs(1.0, 1e-15));
  CHECK_THAT(model.covariance(0, 0), WithinAbs(4.0 / 3.0, 1e-15));
  CHECK_THAT(model.covariance(1, 1), WithinAbs(4.0 / 3.0, 1e-15));
  CHECK_THAT(model.covariance(0, 1), WithinAbs(0.0, 1e-15));
  CHECK(model.regularization_lambda == 0.0);

  const auto inv = testsupport::inverse2x2(4.0 / 3.0, 0.0, 0.0, 4.0 / 3.0);
  CHECK_THAT(model.inverse(0, 0), WithinAbs(inv[0], 1e-9));
  CHECK_THAT(model.inverse(0, 1), WithinAbs(inv[1], 1e-9));
  CHECK_THAT(model.inverse(1, 0), WithinAbs(inv[2], 1e-9));
  CHECK_THAT(model.inverse(1, 1), WithinAbs(inv[3], 1e-9));
}

TEST_CASE("fit_covariance: sample engineered for S = identity inverts to identity", "[metrics]") {
  const double c = std::sqrt(3.0) / 2.0;
  const auto model = fit_covariance(
      {pv("a", {c, c}), pv("b", {c, -c}), pv("c", {-c, c}), pv("d", {-c, -c})});
  CHECK((model.covariance - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((model.inverse - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_covariance: degenerate samples", "[metrics]") {
  CHECK_THROWS_AS(fit_covariance({pv("a", {1, 1}), pv("b", {1, 1})}), NumericError);
  CHECK_THROWS_AS(fit_covariance({pv("a", {1, 1})}), DataError);
}

TEST_CASE("fit_covariance regularizes a singular covariance and records lambda", "[metrics]") {
  // second component is an exact copy of the first, so S is rank 1
  std::vector<PreferenceVector> vectors;
  for (int i = 0; i < 8; ++i) {
    const double x = static_cast<double>(i);
    vectors.push_back(pv("u" + std::to_string(i), {x, x}));
  }
  const auto model = fit_covariance(vectors);
  CHECK(model.regularization_lambda > 0.0);
  const Eigen::Index m = model.dimension();
  CHECK_THAT(model.regularization_lambda,
             WithinAbs(1e-6 * model.covariance.trace() / static_cast<double>(m), 1e-18));
  const Eigen::MatrixXd regularized =
      model.covariance + model.regularization_lambda * Eigen::MatrixXd::Identity(m, m);
  CHECK((model.inverse * regularized - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <
        1e-6);
}

TEST_CASE("covariance invariants hold on random data", "[metrics]") {
  const auto vectors = random_vectors(60, 5, 99);
  const auto model = fit_covariance(vectors);
  CHECK((model.covariance - model.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
  REQUIRE(model.regularization_lambda == 0.0);
  CHECK((model.inverse * model.covariance - Eigen::MatrixXd::Identity(5, 5))
            .cwiseAbs()
            .maxCoeff() < 1e-6);
}

TEST_CASE("mahalanobis distance: identity model reduces to euclidean", "[metrics]") {
  const auto model = identity_model(8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd a(8), b(8);
    for (int j = 0; j < 8; ++j) {
      a[j] = value(rng);
      b[j] = value(rng);
    }
    CHECK(std::abs(mahalanobis_distance(a, b, model) - euclidean_distance(a, b)) < 1e-9);
  }
}

TEST_CASE("mahalanobis distance: hand-evaluated quadratic form", "[metrics]") {
  CovarianceModel model;
  model.mean = evec({0, 0});
  model.covariance = Eigen::MatrixXd{{4.0, 0.0}, {0.0, 1.0}};
  model.inverse = Eigen::MatrixXd{{0.25, 0.0}, {0.0, 1.0}};
  CHECK_THAT(mahalanobis_distance(evec({2, 0}), evec({0, 0}), model), WithinAbs(1.0, 1e-15));
  CHECK(mahalanobis_distance(evec({3, 7}), evec({3, 7}), model) == 0.0);
  CHECK_THROWS_AS(mahalanobis_distance(evec({1, 2, 3}), evec({1, 2, 3}), model), UsageError);
}

TEST_CASE("distances are symmetric and nonnegative", "[metrics]") {
  const auto vectors = random_vectors(30, 4, 17);
  const auto model = fit_covariance(vectors);
  for (std::size_t i = 0; i + 1 < vectors.size(); i += 2) {
    const auto& a = vectors[i];
    const auto& b = vectors[i + 1];
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
    CHECK(euclidean_distance(a, b) >= 0.0);
    CHECK(std::abs(mahalanobis_distance(a, b, model) - mahalanobis_distance(b, a, model)) <=
          1e-12);
    CHECK(mahalanobis_distance(a, b, model) >= 0.0);
    CHECK(mahalanobis_distance(a, a, model) == 0.0);
  }
}

TEST_CASE("similarity spot values", "[metrics]") {
  const MetricChoice euclid{DistanceKind::euclidean, false};
  CHECK_THAT(similarity(pv("a", {1, 1}), pv("b", {1, 1}), euclid), WithinAbs(1.0, 1e-12));
  CHECK_THAT(similarity(pv("a", {0, 0}), pv("b", {1, 0}), euclid), WithinAbs(0.5, 1e-12));
  CHECK_THAT(similarity(pv("a", {0, 0}), pv("b", {3, 4}), euclid),
             WithinAbs(1.0 / 6.0, 1e-12));
}

TEST_CASE("similarity is strictly decreasing in distance", "[metrics]") {
  const MetricChoice euclid{DistanceKind::euclidean, false};
  const auto origin = pv("o", {0, 0});
  double previous = similarity(origin, origin, euclid);
  for (double d = 0.5; d < 30.0; d += 0.5) {
    const double sim = similarity(origin, pv("x", {d, 0}), euclid);
    CHECK(sim < previous);
    CHECK(sim > 0.0);
    previous = sim;
  }
}

TEST_CASE("preference_distance demands its inputs", "[metrics]") {
  const auto a = pv("a", {1, 2});
  const auto b = pv("b", {3, 4});
  CHECK_THROWS_AS(preference_distance(a, b, {DistanceKind::mahalanobis, false}), UsageError);
  CHECK_THROWS_AS(preference_distance(a, b, {DistanceKind::euclidean, true}), UsageError);
}

TEST_CASE("standardize_first standardizes before measuring", "[metrics]") {
  const std::vector<PreferenceVector> population{pv("a", {0, 0}), pv("b", {2, 200}),
                                                 pv("c", {1, 100}), pv("d", {3, 300})};
  const auto stats = fit_standardization(population);
  const MetricChoice standardized{DistanceKind::euclidean, true};
  const double d = preference_distance(population[0], population[1], standardized, nullptr, &stats);
  const double expected = euclidean_distance(standardize(population[0], stats),
                                             standardize(population[1], stats));
  CHECK(d == expected);
}

TEST_CASE("scaling one component changes euclidean ordering only", "[metrics]") {
  // q's nearest of {c1, c2} flips under euclidean when the first component is
  // blown up 100x, while standardized-euclidean and refit mahalanobis keep
  // their orderings.
  auto make_population = [](double scale) {
    std::vector<PreferenceVector> population{
        pv("q", {0 * scale, 0}),  pv("c1", {1 * scale, 5}),   pv("c2", {4 * scale, 1}),
        pv("p1", {2 * scale, 3}), pv("p2", {-3 * scale, -2}), pv("p3", {5 * scale, -4}),
        pv("p4", {-1 * scale, 2})};
    return population;
  };

  auto orderings = [](const std::vector<PreferenceVector>& population) {
    const auto& q = population[0];
    const auto& c1 = population[1];
    const auto& c2 = population[2];
    const auto stats = fit_standardization(population);
    const auto model = fit_covariance(population);
    const MetricChoice plain{DistanceKind::euclidean, false};
    const MetricChoice standardized{DistanceKind::euclidean, true};
    const MetricChoice maha{DistanceKind::mahalanobis, false};
    return std::array<bool, 3>{
        preference_distance(q, c1, plain) < preference_distance(q, c2, plain),
        preference_distance(q, c1, standardized, nullptr, &stats) <
            preference_distance(q, c2, standardized, nullptr, &stats),
        preference_distance(q, c1, maha, &model) < preference_distance(q, c2, maha, &model)};
  };

  const auto base = orderings(make_population(1.0));
  const auto scaled = orderings(make_population(100.0));
  CHECK(base[0] != scaled[0]);   // euclidean ordering flipped
  CHECK(base[1] == scaled[1]);   // standardized ordering unchanged
  CHECK(base[2] == scaled[2]);   // mahalanobis ordering unchanged
}

TEST_CASE("covariance model JSON round-trip is bit-faithful", "[metrics]") {
  const auto vectors = random_vectors(25, 3, 123);
  const auto model = fit_covariance(vectors);
  const json j = to_json(model);
  const auto restored = covariance_from_json(json::parse(j.dump()));
  CHECK(restored.mean == model.mean);
  CHECK(restored.covariance == model.covariance);
  CHECK(restored.inverse == model.inverse);
  CHECK(restored.regularization_lambda == model.regularization_lambda);
}

TEST_CASE("metric names round-trip and reject junk", "[metrics]") {
  CHECK(distance_kind_from_string("euclidean") == DistanceKind::euclidean);
  CHECK(distance_kind_from_string("mahalanobis") == DistanceKind::mahalanobis);
  CHECK(std::string(to_string(DistanceKind::euclidean)) == "euclidean");
  CHECK_THROWS_AS(distance_kind_from_string("cosine"), UsageError);
}
