#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "recsys/errors.hpp"
#include "recsys/types.hpp"

namespace recsys {

/// Multivariate normal fitted from long-term historical data: the
/// distribution is pinned down by its first two sample moments.
struct MvnModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dimension() const { return mean.size(); }
};

namespace detail {

/// Cholesky factor of the model covariance; throws a NumericError naming the
/// offending eigenvalue when the covariance is not positive definite.
inline Eigen::MatrixXd mvn_cholesky(const MvnModel& model, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance, Eigen::EigenvaluesOnly);
    throw NumericError(std::string(what) + ": covariance is singular (smallest eigenvalue " +
                       std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  return llt.matrixL();
}

}  // namespace detail

/// mean = sample mean, covariance = sample covariance (n-1 denominator).
/// Needs at least m+1 samples so the covariance can be full rank.
inline MvnModel fit_mvn(const std::vector<PreferenceVector>& samples) {
  if (samples.empty()) throw DataError("mvn fit needs samples");
  const Eigen::Index m = samples.front().dimension();
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  if (n < m + 1) {
    throw DataError("mvn fit needs at least m+1 = " + std::to_string(m + 1) + " samples, got " +
                    std::to_string(n));
  }

  Eigen::MatrixXd data(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    require_same_dimension(samples[i].components, samples.front().components, "fit_mvn");
    require_finite(samples[i].components, "fit_mvn");
    data.row(i) = samples[i].components.transpose();
  }
  MvnModel model;
  model.mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  model.covariance = ((cov + cov.transpose()) / 2.0).eval();

  detail::mvn_cholesky(model, "fit_mvn");  // density must be defined
  return model;
}

/// log of the density; the sum of three well-scaled pieces, so the density
/// itself can be recovered without underflow for quadratic forms well beyond
/// the double underflow range of exp.
inline double mvn_log_pdf(const MvnModel& model, const Eigen::VectorXd& x) {
  require_same_dimension(x, model.mean, "mvn_pdf");
  const Eigen::MatrixXd chol = detail::mvn_cholesky(model, "mvn_pdf");
  const Eigen::VectorXd solved =
      chol.triangularView<Eigen::Lower>().solve(x - model.mean);
  const double quad_form = solved.squaredNorm();
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  const double m = static_cast<double>(model.dimension());
  return -0.5 * (m * std::log(2.0 * std::numbers::pi) + log_det + quad_form);
}

/// (2*pi)^(-m/2) |S|^(-1/2) exp(-(x-mu)^T S^-1 (x-mu) / 2)
inline double mvn_pdf(const MvnModel& model, const Eigen::VectorXd& x) {
  return std::exp(mvn_log_pdf(model, x));
}

/// Standard normal CDF via erfc; absolute error well under 1e-7.
inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

/// Deterministic standard-normal stream: mt19937_64 with 53-bit uniforms fed
/// through Box-Muller. Avoids std::normal_distribution, whose output is
/// implementation-defined.
class NormalSampler {
public:
  static constexpr std::string_view kGeneratorName = "mt19937_64/box-muller";

  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {  // in (0, 1]
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// A Monte Carlo estimate plus the metadata needed to reproduce it.
struct MonteCarloEstimate {
  double value = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::string_view generator = NormalSampler::kGeneratorName;
};

/// P(X <= x componentwise) for X ~ N(mu, S), estimated from n_samples seeded
/// draws (Cholesky transform of standard normals). Sequential by design: the
/// result is a pure function of (model, x, n_samples, seed).
inline MonteCarloEstimate mvn_cdf_monte_carlo(const MvnModel& model, const Eigen::VectorXd& x,
                                              std::int64_t n_samples, std::uint64_t seed) {
  require_same_dimension(x, model.mean, "mvn_cdf_monte_carlo");
  if (n_samples < 1000) {
    throw UsageError("mvn_cdf_monte_carlo needs at least 1000 samples");
  }
  const Eigen::MatrixXd chol = detail::mvn_cholesky(model, "mvn_cdf_monte_carlo");
  const Eigen::Index m = model.dimension();

  NormalSampler normal(seed);
  Eigen::VectorXd z(m);
  std::int64_t below = 0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) z[j] = normal();
    const Eigen::VectorXd draw = model.mean + chol.triangularView<Eigen::Lower>() * z;
    if ((draw.array() <= x.array()).all()) ++below;
  }
  return {static_cast<double>(below) / static_cast<double>(n_samples), n_samples, seed,
          NormalSampler::kGeneratorName};
}

/// Per-component importance weights in [0, 1].
struct WeightVector {
  Eigen::VectorXd weights;
};

/// Compares each component's marginal CDF value F_j = Phi((x_j-mu_j)/sd_j)
/// against the determinant index theta: full weight once F_j reaches theta,
/// proportional weight F_j/theta below it.
inline WeightVector assign_weights(const MvnModel& model, const Eigen::VectorXd& x, double theta) {
  require_same_dimension(x, model.mean, "assign_weights");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw UsageError("determinant index theta must lie in (0, 1)");
  }
  WeightVector out;
  out.weights.resize(model.dimension());
  for (Eigen::Index j = 0; j < model.dimension(); ++j) {
    const double variance = model.covariance(j, j);
    if (!(variance > 0.0)) {
      throw NumericError("assign_weights: component " + std::to_string(j) +
                         " has zero variance");
    }
    const double f = std_normal_cdf((x[j] - model.mean[j]) / std::sqrt(variance));
    out.weights[j] = f >= theta ? 1.0 : f / theta;
  }
  return out;
}

}  // namespace recsys
