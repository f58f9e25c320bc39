#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recsys/bm25.hpp"
#include "recsys/collaborative.hpp"
#include "recsys/errors.hpp"
#include "recsys/metrics.hpp"
#include "recsys/mvn.hpp"
#include "recsys/quantile.hpp"
#include "recsys/types.hpp"

// JSON forms of the domain types. nlohmann/json emits finite doubles with the
// shortest decimal representation that parses back to the same bits, which is
// what makes the persisted artifacts round-trip exactly.

namespace recsys {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw DataError(std::string(what) + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& entry : arr) {
    if (!entry.is_number()) throw DataError(std::string(what) + ": expected numbers");
    v[i++] = entry.get<double>();
  }
  require_finite(v, what);
  return v;
}

/// Square matrix as a flat row-major array.
inline json to_json(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

inline Eigen::MatrixXd matrix_from_json(const json& arr, Eigen::Index dim, const char* what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != dim * dim) {
    throw DataError(std::string(what) + ": expected " + std::to_string(dim * dim) +
                    " row-major entries");
  }
  Eigen::MatrixXd m(dim, dim);
  Eigen::Index i = 0;
  for (const auto& entry : arr) {
    if (!entry.is_number() || !std::isfinite(entry.get<double>())) {
      throw DataError(std::string(what) + ": expected finite numbers");
    }
    m(i / dim, i % dim) = entry.get<double>();
    ++i;
  }
  return m;
}

inline json to_json(const StandardizationStats& stats) {
  return json{{"means", to_json(stats.means)}, {"std_devs", to_json(stats.std_devs)}};
}

inline StandardizationStats standardization_from_json(const json& j) {
  StandardizationStats stats;
  stats.means = vector_from_json(j.at("means"), "standardization.means");
  stats.std_devs = vector_from_json(j.at("std_devs"), "standardization.std_devs");
  if (stats.means.size() != stats.std_devs.size()) {
    throw DataError("standardization: means/std_devs length mismatch");
  }
  return stats;
}

inline json to_json(const CovarianceModel& model) {
  return json{{"mean", to_json(model.mean)},
              {"covariance", to_json(model.covariance)},
              {"inverse", to_json(model.inverse)},
              {"lambda", model.regularization_lambda}};
}

inline CovarianceModel covariance_from_json(const json& j) {
  CovarianceModel model;
  model.mean = vector_from_json(j.at("mean"), "covariance.mean");
  const Eigen::Index dim = model.mean.size();
  model.covariance = matrix_from_json(j.at("covariance"), dim, "covariance.covariance");
  model.inverse = matrix_from_json(j.at("inverse"), dim, "covariance.inverse");
  model.regularization_lambda = j.at("lambda").get<double>();
  if ((model.covariance - model.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DataError("covariance: stored matrix is not symmetric");
  }
  return model;
}

inline json to_json(const MvnModel& model) {
  return json{{"mean", to_json(model.mean)}, {"covariance", to_json(model.covariance)}};
}

inline MvnModel mvn_from_json(const json& j) {
  MvnModel model;
  model.mean = vector_from_json(j.at("mean"), "mvn.mean");
  model.covariance = matrix_from_json(j.at("covariance"), model.mean.size(), "mvn.covariance");
  return model;
}

inline ordered_json to_json(const QuantileInterval& interval) {
  return ordered_json{{"r", interval.r},         {"s", interval.s},
                      {"coverage", interval.coverage}, {"lower", interval.lower},
                      {"upper", interval.upper}, {"n", interval.n},
                      {"p", interval.p}};
}

/// One JSON line per recommendation.
inline std::string to_json_line(const std::string& user_id, const Recommendation& rec) {
  return ordered_json{{"user_id", user_id},
                      {"item_id", rec.item_id},
                      {"score", rec.predicted_score},
                      {"support", rec.support}}
      .dump();
}

inline std::string to_json_line(const ScoredObject& scored) {
  return ordered_json{{"object_id", scored.object_id}, {"score", scored.score}}.dump();
}

/// Synonym table file: a single JSON object mapping surface -> canonical.
inline SynonymTable synonym_table_from_json(const json& j) {
  if (!j.is_object()) throw DataError("synonym table: expected a JSON object");
  std::map<std::string, std::string> raw;
  for (const auto& [surface, canonical] : j.items()) {
    if (!canonical.is_string()) {
      throw DataError("synonym table: value for '" + surface + "' must be a string");
    }
    raw[surface] = canonical.get<std::string>();
  }
  return SynonymTable::from_map(raw);
}

inline SynonymTable load_synonym_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synonym table: " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw DataError("synonym table: invalid JSON in " + path.string());
  return synonym_table_from_json(j);
}

inline json documents_to_json(const LabelCorpus& corpus) {
  json docs = json::object();
  for (const auto& [id, labels] : corpus.documents()) {
    json counts = json::object();
    for (const auto& [label, count] : labels) counts[label] = count;
    docs[id] = std::move(counts);
  }
  return docs;
}

inline std::vector<LabeledObject> labeled_objects_from_json(const json& docs) {
  if (!docs.is_object()) throw DataError("corpus.documents: expected an object");
  std::vector<LabeledObject> objects;
  for (const auto& [id, counts] : docs.items()) {
    LabeledObject object;
    object.object_id = id;
    if (!counts.is_object()) throw DataError("corpus.documents: expected count maps");
    for (const auto& [label, count] : counts.items()) {
      if (!count.is_number_integer() || count.get<int>() < 1) {
        throw DataError("corpus.documents: counts must be positive integers");
      }
      object.labels[label] = count.get<int>();
    }
    objects.push_back(std::move(object));
  }
  return objects;
}

}  // namespace recsys
