#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "recsys/errors.hpp"
#include "recsys/types.hpp"

namespace recsys {

namespace detail {

inline void require_aspects(const std::vector<std::string>& aspects) {
  if (aspects.empty()) throw UsageError("aspect list must not be empty");
  std::set<std::string> unique(aspects.begin(), aspects.end());
  if (unique.size() != aspects.size()) throw UsageError("aspect ids must be distinct");
}

}  // namespace detail

/// Mean observed rating per aspect, 0 for aspects nobody rated. Used as the
/// fill value when standardization is active, so that unrated components end
/// up at (approximately) zero after standardization.
inline std::vector<double> aspect_means(std::span<const RatingRecord> ratings,
                                        const std::vector<std::string>& aspects) {
  detail::require_aspects(aspects);
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& r : ratings) {
    auto& [sum, count] = sums[r.item_id];
    sum += r.rating;
    ++count;
  }
  std::vector<double> means(aspects.size(), 0.0);
  for (std::size_t j = 0; j < aspects.size(); ++j) {
    if (auto it = sums.find(aspects[j]); it != sums.end() && it->second.second > 0) {
      means[j] = it->second.first / static_cast<double>(it->second.second);
    }
  }
  return means;
}

/// Builds one preference vector per user: component j is that user's rating
/// of aspects[j], or fill[j] if unrated. Output is sorted by user_id, so the
/// result does not depend on the order of the input records.
inline std::vector<PreferenceVector> build_vectors(std::span<const RatingRecord> ratings,
                                                   const std::vector<std::string>& aspects,
                                                   const std::vector<double>& fill) {
  detail::require_aspects(aspects);
  if (fill.size() != aspects.size()) {
    throw UsageError("fill vector length must equal the aspect count");
  }
  std::map<std::string, std::size_t> aspect_index;
  for (std::size_t j = 0; j < aspects.size(); ++j) aspect_index.emplace(aspects[j], j);

  std::map<std::string, std::map<std::size_t, double>> per_user;
  for (const auto& r : ratings) {
    if (!std::isfinite(r.rating)) {
      throw DataError("non-finite rating for (" + r.user_id + ", " + r.item_id + ")");
    }
    per_user[r.user_id];  // every user gets a vector, even if only off-aspect ratings
    if (auto it = aspect_index.find(r.item_id); it != aspect_index.end()) {
      per_user[r.user_id][it->second] = r.rating;
    }
  }

  std::vector<PreferenceVector> vectors;
  vectors.reserve(per_user.size());
  for (const auto& [user, rated] : per_user) {
    PreferenceVector v;
    v.user_id = user;
    v.components.resize(static_cast<Eigen::Index>(aspects.size()));
    for (std::size_t j = 0; j < aspects.size(); ++j) {
      auto it = rated.find(j);
      v.components[static_cast<Eigen::Index>(j)] = it != rated.end() ? it->second : fill[j];
    }
    vectors.push_back(std::move(v));
  }
  return vectors;
}

inline std::vector<PreferenceVector> build_vectors(std::span<const RatingRecord> ratings,
                                                   const std::vector<std::string>& aspects,
                                                   double fill = 0.0) {
  detail::require_aspects(aspects);
  return build_vectors(ratings, aspects, std::vector<double>(aspects.size(), fill));
}

/// Per-component sample mean and sample standard deviation (n-1 denominator).
inline StandardizationStats fit_standardization(const std::vector<PreferenceVector>& vectors) {
  if (vectors.size() < 2) {
    throw DataError("standardization needs at least 2 vectors, got " +
                    std::to_string(vectors.size()));
  }
  const Eigen::Index m = vectors.front().dimension();
  const double n = static_cast<double>(vectors.size());

  Eigen::VectorXd means = Eigen::VectorXd::Zero(m);
  for (const auto& v : vectors) {
    require_same_dimension(v.components, means, "fit_standardization");
    require_finite(v.components, "fit_standardization");
    means += v.components;
  }
  means /= n;

  Eigen::VectorXd ss = Eigen::VectorXd::Zero(m);
  for (const auto& v : vectors) {
    ss += (v.components - means).cwiseAbs2();
  }
  StandardizationStats stats;
  stats.means = means;
  stats.std_devs = (ss / (n - 1.0)).cwiseSqrt();
  return stats;
}

/// (v - mean) / std per component. Constant components (std 0) map to 0
/// rather than erroring: they carry no preference signal.
inline PreferenceVector standardize(const PreferenceVector& v, const StandardizationStats& stats) {
  require_same_dimension(v.components, stats.means, "standardize");
  PreferenceVector out;
  out.user_id = v.user_id;
  out.components.resize(v.dimension());
  for (Eigen::Index j = 0; j < v.dimension(); ++j) {
    const double sd = stats.std_devs[j];
    out.components[j] = sd > 0.0 ? (v.components[j] - stats.means[j]) / sd : 0.0;
  }
  return out;
}

inline std::vector<PreferenceVector> standardize_all(const std::vector<PreferenceVector>& vectors,
                                                     const StandardizationStats& stats) {
  std::vector<PreferenceVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(standardize(v, stats));
  return out;
}

}  // namespace recsys
