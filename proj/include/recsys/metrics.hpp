#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

#include "recsys/errors.hpp"
#include "recsys/preference.hpp"
#include "recsys/types.hpp"

namespace recsys {

enum class DistanceKind { euclidean, mahalanobis };

inline const char* to_string(DistanceKind kind) {
  return kind == DistanceKind::euclidean ? "euclidean" : "mahalanobis";
}

inline DistanceKind distance_kind_from_string(const std::string& s) {
  if (s == "euclidean") return DistanceKind::euclidean;
  if (s == "mahalanobis") return DistanceKind::mahalanobis;
  throw UsageError("unknown metric '" + s + "' (expected euclidean or mahalanobis)");
}

struct MetricChoice {
  DistanceKind kind = DistanceKind::euclidean;
  bool standardize_first = false;
};

/// Sample mean, sample covariance, and a (possibly regularized) inverse.
/// When the covariance is ill-conditioned the inverse is computed from
/// S + lambda*I and the lambda used is recorded; lambda stays 0 otherwise.
struct CovarianceModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd inverse;
  double regularization_lambda = 0.0;

  Eigen::Index dimension() const { return mean.size(); }
};

inline double euclidean_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require_same_dimension(a, b, "euclidean_distance");
  return (a - b).norm();
}

inline double euclidean_distance(const PreferenceVector& a, const PreferenceVector& b) {
  return euclidean_distance(a.components, b.components);
}

/// Fits mean and sample covariance (n-1 denominator) and inverts by Cholesky
/// factorization. If the factorization fails or the eigenvalue condition
/// estimate exceeds `condition_threshold`, the inverse is recomputed from
/// S + lambda*I with lambda = 1e-6 * trace(S)/m.
inline CovarianceModel fit_covariance(const std::vector<PreferenceVector>& vectors,
                                      double condition_threshold = 1e12) {
  if (vectors.size() < 2) {
    throw DataError("covariance fit needs at least 2 vectors, got " +
                    std::to_string(vectors.size()));
  }
  const Eigen::Index m = vectors.front().dimension();
  const Eigen::Index n = static_cast<Eigen::Index>(vectors.size());

  Eigen::MatrixXd data(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    require_same_dimension(vectors[i].components, vectors.front().components, "fit_covariance");
    require_finite(vectors[i].components, "fit_covariance");
    data.row(i) = vectors[i].components.transpose();
  }

  CovarianceModel model;
  model.mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  cov = ((cov + cov.transpose()) / 2.0).eval();  // keep exactly symmetric
  model.covariance = cov;

  const double trace = cov.trace();
  if (!(trace > 0.0)) {
    throw NumericError("singular model: covariance is identically zero (all samples equal)");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double max_eig = eig.eigenvalues().maxCoeff();

  double lambda = 0.0;
  if (min_eig <= 0.0 || max_eig / min_eig > condition_threshold) {
    lambda = 1e-6 * trace / static_cast<double>(m);
  }

  auto try_invert = [m](const Eigen::MatrixXd& s, Eigen::MatrixXd& out) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(m, m);
    out = llt.solve(identity);
    // Newton-Schulz refinement; squares the residual of the Cholesky inverse,
    // which matters near the condition threshold.
    for (int step = 0; step < 2; ++step) {
      const Eigen::MatrixXd residual = identity - s * out;
      if (residual.cwiseAbs().maxCoeff() < 1e-9) break;
      out = out + out * residual;
      out = ((out + out.transpose()) / 2.0).eval();
    }
    return out.allFinite();
  };

  Eigen::MatrixXd inverse;
  bool ok = try_invert(cov + lambda * Eigen::MatrixXd::Identity(m, m), inverse);
  if (!ok && lambda == 0.0) {
    lambda = 1e-6 * trace / static_cast<double>(m);
    ok = try_invert(cov + lambda * Eigen::MatrixXd::Identity(m, m), inverse);
  }
  if (!ok) {
    throw NumericError("singular model: covariance not invertible even after regularization"
                       " (min eigenvalue " + std::to_string(min_eig) + ")");
  }
  model.inverse = inverse;
  model.regularization_lambda = lambda;
  return model;
}

/// sqrt((a-b)^T S^-1 (a-b)) using the model's stored inverse.
inline double mahalanobis_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   const CovarianceModel& model) {
  require_same_dimension(a, b, "mahalanobis_distance");
  require_same_dimension(a, model.mean, "mahalanobis_distance");
  const Eigen::VectorXd diff = a - b;
  const double form = diff.dot(model.inverse * diff);
  return std::sqrt(std::max(form, 0.0));
}

inline double mahalanobis_distance(const PreferenceVector& a, const PreferenceVector& b,
                                   const CovarianceModel& model) {
  return mahalanobis_distance(a.components, b.components, model);
}

/// Distance under the chosen metric, after optional standardization.
inline double preference_distance(const PreferenceVector& a, const PreferenceVector& b,
                                  const MetricChoice& metric,
                                  const CovarianceModel* model = nullptr,
                                  const StandardizationStats* stats = nullptr) {
  if (metric.kind == DistanceKind::mahalanobis && model == nullptr) {
    throw UsageError("mahalanobis metric requires a covariance model");
  }
  if (metric.standardize_first && stats == nullptr) {
    throw UsageError("standardize_first requires standardization stats");
  }
  const PreferenceVector* pa = &a;
  const PreferenceVector* pb = &b;
  PreferenceVector sa, sb;
  if (metric.standardize_first) {
    sa = standardize(a, *stats);
    sb = standardize(b, *stats);
    pa = &sa;
    pb = &sb;
  }
  return metric.kind == DistanceKind::euclidean
             ? euclidean_distance(*pa, *pb)
             : mahalanobis_distance(*pa, *pb, *model);
}

/// sim(A,B) = 1 / (1 + d(A,B)), in (0, 1], 1 iff the (transformed) vectors
/// coincide. Larger means more similar.
inline double similarity(const PreferenceVector& a, const PreferenceVector& b,
                         const MetricChoice& metric, const CovarianceModel* model = nullptr,
                         const StandardizationStats* stats = nullptr) {
  return 1.0 / (1.0 + preference_distance(a, b, metric, model, stats));
}

}  // namespace recsys
