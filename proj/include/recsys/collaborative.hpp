#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recsys/errors.hpp"
#include "recsys/metrics.hpp"
#include "recsys/types.hpp"

namespace recsys {

struct Neighbor {
  std::string user_id;
  double similarity = 0.0;  // in (0, 1]
};

/// A user's nearest neighbors, sorted by (similarity desc, user_id asc).
/// Never contains the user itself; at most k entries.
struct NeighborSet {
  std::string user_id;
  std::vector<Neighbor> neighbors;
};

struct Recommendation {
  std::string item_id;
  double predicted_score = 0.0;
  int support = 0;  // number of neighbors who rated the item
};

/// Read-only rating lookup, keyed by user then item. Duplicate pairs must
/// already be resolved by ingestion.
class RatingsTable {
public:
  RatingsTable() = default;

  explicit RatingsTable(std::span<const RatingRecord> records) {
    for (const auto& r : records) by_user_[r.user_id][r.item_id] = r.rating;
  }

  const std::map<std::string, double>* ratings_of(const std::string& user_id) const {
    auto it = by_user_.find(user_id);
    return it == by_user_.end() ? nullptr : &it->second;
  }

  std::optional<double> rating(const std::string& user_id, const std::string& item_id) const {
    if (const auto* items = ratings_of(user_id)) {
      if (auto it = items->find(item_id); it != items->end()) return it->second;
    }
    return std::nullopt;
  }

  bool has_user(const std::string& user_id) const { return by_user_.count(user_id) > 0; }

  std::size_t user_count() const { return by_user_.size(); }

private:
  std::map<std::string, std::map<std::string, double>> by_user_;
};

/// The k users most similar to `user_id` under the chosen metric. Ties are
/// broken by ascending user id so the result is reproducible.
inline NeighborSet top_k_neighbors(const std::string& user_id,
                                   const std::vector<PreferenceVector>& vectors, std::size_t k,
                                   const MetricChoice& metric,
                                   const CovarianceModel* model = nullptr,
                                   const StandardizationStats* stats = nullptr) {
  if (k == 0) throw UsageError("neighborhood size k must be at least 1");
  const PreferenceVector* self = nullptr;
  for (const auto& v : vectors) {
    if (v.user_id == user_id) {
      self = &v;
      break;
    }
  }
  if (self == nullptr) throw DataError("unknown user '" + user_id + "'");

  NeighborSet result;
  result.user_id = user_id;
  result.neighbors.reserve(vectors.size() > 0 ? vectors.size() - 1 : 0);
  for (const auto& v : vectors) {
    if (v.user_id == user_id) continue;
    result.neighbors.push_back({v.user_id, similarity(*self, v, metric, model, stats)});
  }
  std::sort(result.neighbors.begin(), result.neighbors.end(),
            [](const Neighbor& a, const Neighbor& b) {
              if (a.similarity != b.similarity) return a.similarity > b.similarity;
              return a.user_id < b.user_id;
            });
  if (result.neighbors.size() > k) result.neighbors.resize(k);
  return result;
}

/// Similarity-weighted mean of the neighbors' ratings of `item_id`; empty
/// when no neighbor rated the item. Always a convex combination of the
/// contributing ratings.
inline std::optional<double> predict_rating(const NeighborSet& neighbors,
                                            const std::string& item_id,
                                            const RatingsTable& ratings) {
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (const auto& nb : neighbors.neighbors) {
    if (auto r = ratings.rating(nb.user_id, item_id)) {
      weighted_sum += nb.similarity * *r;
      weight_total += nb.similarity;
    }
  }
  if (weight_total <= 0.0) return std::nullopt;
  return weighted_sum / weight_total;
}

/// Items the user has not rated, scored from the neighbors' feedback and
/// sorted by (predicted score desc, support desc, item_id asc).
inline std::vector<Recommendation> recommend(const std::string& user_id, std::size_t n,
                                             const NeighborSet& neighbors,
                                             const RatingsTable& ratings, int min_support = 1) {
  if (n == 0) throw UsageError("recommendation count n must be at least 1");
  if (min_support < 1) throw UsageError("min_support must be at least 1");

  const auto* own = ratings.ratings_of(user_id);

  // candidate items: anything a neighbor rated, minus the user's own items
  std::map<std::string, std::pair<double, std::pair<double, int>>> acc;  // item -> (wsum, (wtot, support))
  for (const auto& nb : neighbors.neighbors) {
    const auto* items = ratings.ratings_of(nb.user_id);
    if (items == nullptr) continue;
    for (const auto& [item, rating] : *items) {
      if (own != nullptr && own->count(item) > 0) continue;
      auto& [wsum, rest] = acc[item];
      wsum += nb.similarity * rating;
      rest.first += nb.similarity;
      rest.second += 1;
    }
  }

  std::vector<Recommendation> recs;
  recs.reserve(acc.size());
  for (const auto& [item, agg] : acc) {
    const auto& [wsum, rest] = agg;
    if (rest.second < min_support || rest.first <= 0.0) continue;
    recs.push_back({item, wsum / rest.first, rest.second});
  }
  std::sort(recs.begin(), recs.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.predicted_score != b.predicted_score) return a.predicted_score > b.predicted_score;
    if (a.support != b.support) return a.support > b.support;
    return a.item_id < b.item_id;
  });
  if (recs.size() > n) recs.resize(n);
  return recs;
}

}  // namespace recsys
