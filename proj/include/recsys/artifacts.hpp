#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recsys/bm25.hpp"
#include "recsys/collaborative.hpp"
#include "recsys/errors.hpp"
#include "recsys/ingest.hpp"
#include "recsys/metrics.hpp"
#include "recsys/mvn.hpp"
#include "recsys/preference.hpp"
#include "recsys/serialize.hpp"

namespace recsys {

inline constexpr const char* kArtifactVersion = "1";
inline constexpr const char* kModelFileName = "model.json";
inline constexpr const char* kManifestFileName = "manifest.json";

/// Resolved run configuration. Every knob has a documented range; unknown
/// keys in the config file are rejected rather than ignored.
struct Config {
  DistanceKind metric = DistanceKind::euclidean;
  bool standardize = false;
  int k_neighbors = 20;
  int min_support = 1;
  int top_n = 10;
  double k1 = 1.2;
  double b = 0.75;
  double theta = 0.5;
  double quantile_p = 0.9;
  double confidence = 0.9;
  double condition_threshold = 1e12;
  std::uint64_t seed = 42;
  bool mvn_filter = false;
  std::vector<std::string> aspects;  // the predetermined aspect item ids

  MetricChoice metric_choice() const { return {metric, standardize}; }
  Bm25Params bm25_params() const { return {k1, b}; }
};

inline void validate(const Config& config) {
  if (config.k_neighbors < 1) throw UsageError("config: k_neighbors must be >= 1");
  if (config.min_support < 1) throw UsageError("config: min_support must be >= 1");
  if (config.top_n < 1) throw UsageError("config: top_n must be >= 1");
  validate(Bm25Params{config.k1, config.b});
  auto in_unit_interval = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit_interval(config.theta)) throw UsageError("config: theta must be in (0, 1)");
  if (!in_unit_interval(config.quantile_p)) throw UsageError("config: quantile_p must be in (0, 1)");
  if (!in_unit_interval(config.confidence)) throw UsageError("config: confidence must be in (0, 1)");
  if (!(config.condition_threshold > 0.0)) {
    throw UsageError("config: condition_threshold must be positive");
  }
  if (config.aspects.empty()) throw UsageError("config: aspects must list at least one item id");
  std::set<std::string> unique(config.aspects.begin(), config.aspects.end());
  if (unique.size() != config.aspects.size()) throw UsageError("config: aspect ids must be distinct");
}

inline json to_json(const Config& config) {
  return json{{"metric", to_string(config.metric)},
              {"standardize", config.standardize},
              {"k_neighbors", config.k_neighbors},
              {"min_support", config.min_support},
              {"top_n", config.top_n},
              {"k1", config.k1},
              {"b", config.b},
              {"theta", config.theta},
              {"quantile_p", config.quantile_p},
              {"confidence", config.confidence},
              {"condition_threshold", config.condition_threshold},
              {"seed", config.seed},
              {"mvn_filter", config.mvn_filter},
              {"aspects", config.aspects}};
}

inline Config config_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  static const std::set<std::string> known = {
      "metric",     "standardize", "k_neighbors",         "min_support", "top_n",
      "k1",         "b",           "theta",               "quantile_p",  "confidence",
      "condition_threshold",       "seed",                "mvn_filter",  "aspects"};
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) throw UsageError("config: unknown key '" + key + "'");
  }
  Config config;
  try {
    if (j.contains("metric")) config.metric = distance_kind_from_string(j.at("metric").get<std::string>());
    if (j.contains("standardize")) config.standardize = j.at("standardize").get<bool>();
    if (j.contains("k_neighbors")) config.k_neighbors = j.at("k_neighbors").get<int>();
    if (j.contains("min_support")) config.min_support = j.at("min_support").get<int>();
    if (j.contains("top_n")) config.top_n = j.at("top_n").get<int>();
    if (j.contains("k1")) config.k1 = j.at("k1").get<double>();
    if (j.contains("b")) config.b = j.at("b").get<double>();
    if (j.contains("theta")) config.theta = j.at("theta").get<double>();
    if (j.contains("quantile_p")) config.quantile_p = j.at("quantile_p").get<double>();
    if (j.contains("confidence")) config.confidence = j.at("confidence").get<double>();
    if (j.contains("condition_threshold")) {
      config.condition_threshold = j.at("condition_threshold").get<double>();
    }
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mvn_filter")) config.mvn_filter = j.at("mvn_filter").get<bool>();
    if (j.contains("aspects")) config.aspects = j.at("aspects").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  validate(config);
  return config;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw UsageError("config: invalid JSON in " + path.string());
  return config_from_json(j);
}

/// Everything the offline phase produces and the real-time commands consume.
struct ModelArtifacts {
  std::string version = kArtifactVersion;
  Config config;
  std::vector<PreferenceVector> vectors;  // raw (unstandardized) user vectors
  std::vector<RatingRecord> ratings;
  StandardizationStats standardization;
  std::optional<CovarianceModel> covariance;
  std::optional<MvnModel> mvn;
  LabelCorpus corpus;

  Bm25Params params() const { return config.bm25_params(); }

  /// Vectors in the space the metric models were fit on.
  std::vector<PreferenceVector> metric_vectors() const {
    return config.standardize ? standardize_all(vectors, standardization) : vectors;
  }
};

struct TrainInputs {
  std::filesystem::path ratings;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> synonyms;
  std::filesystem::path config;
};

struct TrainResult {
  ModelArtifacts artifacts;
  RatingsIngest ratings_ingest;  // carries overwrite count and rejected rows
  LabelsIngest labels_ingest;
};

/// The whole offline phase, in memory: ingest, build vectors, fit statistics
/// and (as configured) the covariance and MVN models, build the label corpus.
inline TrainResult train_pipeline(const TrainInputs& inputs, const Config& config) {
  validate(config);
  TrainResult result;
  result.artifacts.config = config;
  result.ratings_ingest = ingest_ratings(inputs.ratings);
  result.labels_ingest = ingest_labels(inputs.labels);

  SynonymTable synonyms;
  if (inputs.synonyms) synonyms = load_synonym_table(*inputs.synonyms);

  const auto& records = result.ratings_ingest.records;
  // With standardization active, unrated aspects are filled with the aspect's
  // observed mean so they standardize to zero; otherwise the fill is 0.
  result.artifacts.vectors =
      config.standardize ? build_vectors(records, config.aspects, aspect_means(records, config.aspects))
                         : build_vectors(records, config.aspects, 0.0);
  result.artifacts.ratings = records;
  std::sort(result.artifacts.ratings.begin(), result.artifacts.ratings.end(),
            [](const RatingRecord& a, const RatingRecord& b) {
              return std::tie(a.user_id, a.item_id) < std::tie(b.user_id, b.item_id);
            });

  result.artifacts.standardization = fit_standardization(result.artifacts.vectors);

  const std::vector<PreferenceVector> metric_vectors = result.artifacts.metric_vectors();
  if (config.metric == DistanceKind::mahalanobis) {
    result.artifacts.covariance = fit_covariance(metric_vectors, config.condition_threshold);
  }
  if (config.mvn_filter) {
    result.artifacts.mvn = fit_mvn(metric_vectors);
  }
  result.artifacts.corpus = build_corpus(result.labels_ingest.objects, synonyms);
  return result;
}

inline json to_json(const ModelArtifacts& artifacts) {
  json vectors = json::array();
  for (const auto& v : artifacts.vectors) {
    vectors.push_back(json{{"user_id", v.user_id}, {"components", to_json(v.components)}});
  }
  json ratings = json::array();
  for (const auto& r : artifacts.ratings) {
    ratings.push_back(json{{"user_id", r.user_id}, {"item_id", r.item_id}, {"rating", r.rating}});
  }
  return json{{"version", artifacts.version},
              {"config", to_json(artifacts.config)},
              {"vectors", std::move(vectors)},
              {"ratings", std::move(ratings)},
              {"standardization", to_json(artifacts.standardization)},
              {"covariance", artifacts.covariance ? to_json(*artifacts.covariance) : json(nullptr)},
              {"mvn", artifacts.mvn ? to_json(*artifacts.mvn) : json(nullptr)},
              {"corpus", json{{"documents", documents_to_json(artifacts.corpus)}}}};
}

inline ModelArtifacts artifacts_from_json(const json& j) {
  ModelArtifacts artifacts;
  try {
    artifacts.version = j.at("version").get<std::string>();
    if (artifacts.version != kArtifactVersion) {
      throw DataError("artifact version mismatch: file has '" + artifacts.version +
                      "', this build reads '" + kArtifactVersion + "'");
    }
    artifacts.config = config_from_json(j.at("config"));
    for (const auto& entry : j.at("vectors")) {
      PreferenceVector v;
      v.user_id = entry.at("user_id").get<std::string>();
      v.components = vector_from_json(entry.at("components"), "vectors.components");
      artifacts.vectors.push_back(std::move(v));
    }
    for (const auto& entry : j.at("ratings")) {
      artifacts.ratings.push_back({entry.at("user_id").get<std::string>(),
                                   entry.at("item_id").get<std::string>(),
                                   entry.at("rating").get<double>()});
    }
    artifacts.standardization = standardization_from_json(j.at("standardization"));
    if (!j.at("covariance").is_null()) {
      artifacts.covariance = covariance_from_json(j.at("covariance"));
    }
    if (!j.at("mvn").is_null()) {
      artifacts.mvn = mvn_from_json(j.at("mvn"));
    }
    // stored documents are already canonical; rebuilding recovers the derived
    // statistics (doc_freq, avgdl, postings) exactly
    artifacts.corpus =
        build_corpus(labeled_objects_from_json(j.at("corpus").at("documents")), SynonymTable{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("artifact: malformed model file: ") + e.what());
  }

  if (artifacts.config.metric == DistanceKind::mahalanobis && !artifacts.covariance) {
    throw DataError(
        "artifact: metric is mahalanobis but no covariance model is stored; "
        "re-run train with this config to fit one");
  }
  const auto m = static_cast<Eigen::Index>(artifacts.config.aspects.size());
  if (artifacts.standardization.dimension() != m) {
    throw DataError("artifact: standardization dimension does not match the aspect count");
  }
  for (const auto& v : artifacts.vectors) {
    if (v.dimension() != m) {
      throw DataError("artifact: vector for user '" + v.user_id + "' has wrong dimension");
    }
  }
  return artifacts;
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw NumericError("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file_bytes(path));
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << bytes) || !out.flush()) {
    throw DataError("cannot write file: " + path.string());
  }
}

}  // namespace detail

/// Writes model.json plus a manifest holding the content hashes of the
/// inputs (for stale-model detection) and of the model file itself. Output is
/// byte-for-byte reproducible for identical inputs and config.
inline void save_artifacts(const ModelArtifacts& artifacts, const TrainInputs& inputs,
                           const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string model_bytes = to_json(artifacts).dump(2) + "\n";
  detail::write_file(out_dir / kModelFileName, model_bytes);

  auto input_entry = [](const std::filesystem::path& path) {
    return json{{"path", path.string()}, {"sha256", sha256_file(path)}};
  };
  json manifest{{"version", artifacts.version},
                {"inputs",
                 json{{"ratings", input_entry(inputs.ratings)},
                      {"labels", input_entry(inputs.labels)},
                      {"synonyms", inputs.synonyms ? input_entry(*inputs.synonyms) : json(nullptr)},
                      {"config", input_entry(inputs.config)}}},
                {"artifacts", json{{kModelFileName, json{{"sha256", sha256_hex(model_bytes)}}}}}};
  detail::write_file(out_dir / kManifestFileName, manifest.dump(2) + "\n");
}

inline ModelArtifacts load_artifacts(const std::filesystem::path& dir) {
  const auto model_path = dir / kModelFileName;
  const auto manifest_path = dir / kManifestFileName;
  if (!std::filesystem::exists(model_path) || !std::filesystem::exists(manifest_path)) {
    throw DataError("model directory '" + dir.string() + "' does not contain " + kModelFileName +
                    " and " + kManifestFileName);
  }
  json manifest = json::parse(read_file_bytes(manifest_path), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("version")) {
    throw DataError("artifact: malformed manifest in " + dir.string());
  }
  if (manifest.at("version").get<std::string>() != kArtifactVersion) {
    throw DataError("artifact version mismatch in manifest: file has '" +
                    manifest.at("version").get<std::string>() + "', this build reads '" +
                    kArtifactVersion + "'");
  }
  json model = json::parse(read_file_bytes(model_path), nullptr, false);
  if (model.is_discarded()) throw DataError("artifact: invalid JSON in " + model_path.string());
  return artifacts_from_json(model);
}

}  // namespace recsys
