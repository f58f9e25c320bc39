#pragma once

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <string>

#include "recsys/errors.hpp"

namespace recsys {

/// One user's quantified preference across the predetermined aspects.
/// Component j scores aspect j; all components are finite and the length is
/// the corpus-wide aspect count.
struct PreferenceVector {
  std::string user_id;
  Eigen::VectorXd components;

  Eigen::Index dimension() const { return components.size(); }
};

/// A single (user, item, rating) observation. Ratings use whatever scale the
/// application feeds in; they only need to be finite.
struct RatingRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
};

/// Label multiset, stored as counts keyed by label string.
using LabelCounts = std::map<std::string, int>;

/// An object (video, article, ...) carrying a multiset of labels.
struct LabeledObject {
  std::string object_id;
  LabelCounts labels;

  int total_labels() const {
    int n = 0;
    for (const auto& [label, count] : labels) n += count;
    return n;
  }
};

/// Per-component sample mean and sample standard deviation, fit once and
/// applied to every vector before distance computations when standardization
/// is requested. A zero standard deviation flags a constant component.
struct StandardizationStats {
  Eigen::VectorXd means;
  Eigen::VectorXd std_devs;

  Eigen::Index dimension() const { return means.size(); }
};

inline void require_same_dimension(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   const char* what) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

inline void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw UsageError(std::string(what) + ": vector has non-finite components");
  }
}

}  // namespace recsys
