// Command-line front end: `train` runs the offline phase and freezes model
// artifacts; `recommend`, `labels`, `similar` and `quantile` answer queries
// against them. Machine-readable output goes to stdout, diagnostics to stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "recsys/recsys.hpp"

namespace fs = std::filesystem;

namespace {

fs::path resolve_model_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("RECSYS_MODEL_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  throw recsys::UsageError("no model directory: pass --model-dir or set RECSYS_MODEL_DIR");
}

void print_ingest_diagnostics(const std::string& path, const recsys::RatingsIngest& ratings,
                              const std::string& labels_path, const recsys::LabelsIngest& labels) {
  for (const auto& d : ratings.rejected) {
    std::cerr << "warning: " << path << ":" << d.line << ": " << d.message << "\n";
  }
  if (ratings.overwrites > 0) {
    std::cerr << "note: " << ratings.overwrites
              << " duplicate (user,item) row(s) overwritten, last value wins\n";
  }
  for (const auto& d : labels.rejected) {
    std::cerr << "warning: " << labels_path << ":" << d.line << ": " << d.message << "\n";
  }
}

struct TrainArgs {
  std::string ratings, labels, synonyms, config, model_dir;
  std::int64_t seed = -1;
};

int run_train(const TrainArgs& args) {
  recsys::TrainInputs inputs;
  inputs.ratings = args.ratings;
  inputs.labels = args.labels;
  if (!args.synonyms.empty()) inputs.synonyms = args.synonyms;
  inputs.config = args.config;
  const fs::path out_dir = resolve_model_dir(args.model_dir);

  recsys::Config config = recsys::load_config(inputs.config);
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  const bool out_dir_existed = fs::exists(out_dir);
  try {
    recsys::TrainResult result = recsys::train_pipeline(inputs, config);
    print_ingest_diagnostics(args.ratings, result.ratings_ingest, args.labels,
                             result.labels_ingest);
    recsys::save_artifacts(result.artifacts, inputs, out_dir);
  } catch (...) {
    // no partial output: drop whatever this run created
    std::error_code ec;
    if (!out_dir_existed) {
      fs::remove_all(out_dir, ec);
    } else {
      fs::remove(out_dir / recsys::kModelFileName, ec);
      fs::remove(out_dir / recsys::kManifestFileName, ec);
    }
    throw;
  }
  std::cerr << "trained model written to " << out_dir.string() << "\n";
  return 0;
}

int run_recommend(const std::string& model_dir, const std::string& user, int top) {
  const recsys::ModelArtifacts artifacts = recsys::load_artifacts(resolve_model_dir(model_dir));
  const recsys::Config& config = artifacts.config;

  bool known = false;
  for (const auto& v : artifacts.vectors) known = known || v.user_id == user;
  if (!known) throw recsys::DataError("unknown user '" + user + "'");

  const recsys::MetricChoice metric = config.metric_choice();
  const recsys::CovarianceModel* model =
      artifacts.covariance ? &*artifacts.covariance : nullptr;
  const recsys::NeighborSet neighbors =
      recsys::top_k_neighbors(user, artifacts.vectors, static_cast<std::size_t>(config.k_neighbors),
                              metric, model, &artifacts.standardization);
  const recsys::RatingsTable ratings(artifacts.ratings);
  const int n = top > 0 ? top : config.top_n;
  const auto recs =
      recsys::recommend(user, static_cast<std::size_t>(n), neighbors, ratings, config.min_support);
  for (const auto& rec : recs) {
    std::cout << recsys::to_json_line(user, rec) << "\n";
  }
  return 0;
}

int run_labels(const std::string& model_dir, const std::string& object, double p_override) {
  const recsys::ModelArtifacts artifacts = recsys::load_artifacts(resolve_model_dir(model_dir));
  const double p = p_override > 0.0 ? p_override : artifacts.config.quantile_p;
  const auto scored =
      recsys::recommend_by_labels(artifacts.corpus, object, artifacts.params(), p);
  for (const auto& s : scored) {
    std::cout << recsys::to_json_line(s) << "\n";
  }
  return 0;
}

int run_similar(const std::string& model_dir, const std::vector<std::string>& users) {
  const recsys::ModelArtifacts artifacts = recsys::load_artifacts(resolve_model_dir(model_dir));
  const recsys::PreferenceVector* a = nullptr;
  const recsys::PreferenceVector* b = nullptr;
  for (const auto& v : artifacts.vectors) {
    if (v.user_id == users[0]) a = &v;
    if (v.user_id == users[1]) b = &v;
  }
  if (a == nullptr) throw recsys::DataError("unknown user '" + users[0] + "'");
  if (b == nullptr) throw recsys::DataError("unknown user '" + users[1] + "'");

  const recsys::MetricChoice metric = artifacts.config.metric_choice();
  const recsys::CovarianceModel* model =
      artifacts.covariance ? &*artifacts.covariance : nullptr;
  const double d = recsys::preference_distance(*a, *b, metric, model, &artifacts.standardization);
  recsys::ordered_json report{{"user_a", users[0]},
                              {"user_b", users[1]},
                              {"metric", recsys::to_string(metric.kind)},
                              {"standardized", metric.standardize_first},
                              {"distance", d},
                              {"similarity", 1.0 / (1.0 + d)}};
  std::cout << report.dump() << "\n";
  return 0;
}

int run_quantile(const std::string& input, double p, double confidence) {
  std::ifstream in(input);
  if (!in) throw recsys::DataError("cannot open input file: " + input);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = recsys::detail::trim(line);
    if (trimmed.empty()) continue;
    double value = 0.0;
    if (!recsys::detail::parse_double(trimmed, value)) {
      throw recsys::DataError(input + ":" + std::to_string(line_no) + ": not a finite number: '" +
                              std::string(trimmed) + "'");
    }
    values.push_back(value);
  }
  if (values.size() < 2) {
    throw recsys::DataError(input + ": need at least 2 values, got " +
                            std::to_string(values.size()));
  }
  const double estimate = recsys::empirical_quantile(values, p);
  const recsys::QuantileInterval interval = recsys::quantile_ci(values, p, confidence);
  recsys::ordered_json out{{"estimate", estimate}, {"interval", recsys::to_json(interval)}};
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-based recommendation and ranking engine"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train", "run the offline phase: fit models from data files and write artifacts");
  train->add_option("--ratings", train_args.ratings, "ratings CSV (user_id,item_id,rating)")
      ->required();
  train->add_option("--labels", train_args.labels, "labels JSON-lines file")->required();
  train->add_option("--synonyms", train_args.synonyms, "synonym table JSON (surface -> canonical)");
  train->add_option("--config", train_args.config, "config JSON file")->required();
  train->add_option("--model-dir", train_args.model_dir,
                    "output directory for artifacts (or RECSYS_MODEL_DIR)");
  train->add_option("--seed", train_args.seed, "override the config random seed")
      ->check(CLI::NonNegativeNumber);

  std::string model_dir, user, object_id;
  std::vector<std::string> user_pair;
  int top = 0;
  double p = 0.0;

  auto* recommend = app.add_subcommand("recommend", "collaborative-filter recommendations for a user");
  recommend->add_option("--model-dir", model_dir, "model directory (or RECSYS_MODEL_DIR)");
  recommend->add_option("--user", user, "target user id")->required();
  recommend->add_option("--top", top, "number of recommendations (default: config top_n)");

  auto* labels = app.add_subcommand("labels", "label-based recommendations for an object");
  labels->add_option("--model-dir", model_dir, "model directory (or RECSYS_MODEL_DIR)");
  labels->add_option("--object", object_id, "seed object id")->required();
  labels->add_option("--p", p, "quantile threshold in (0,1) (default: config quantile_p)");

  auto* similar = app.add_subcommand("similar", "distance and similarity between two users");
  similar->add_option("--model-dir", model_dir, "model directory (or RECSYS_MODEL_DIR)");
  similar->add_option("--user", user_pair, "user id (pass exactly twice)")
      ->required()
      ->expected(2);

  std::string quantile_input;
  double quantile_p = 0.5, quantile_confidence = 0.9;
  auto* quantile = app.add_subcommand(
      "quantile", "p-quantile estimate and order-statistic confidence interval");
  quantile->add_option("input", quantile_input, "file with one real number per line")->required();
  quantile->add_option("--p", quantile_p, "quantile level in (0,1)")->capture_default_str();
  quantile->add_option("--confidence", quantile_confidence, "required interval coverage in (0,1)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // any command-line problem is a usage error
  }

  try {
    if (train->parsed()) return run_train(train_args);
    if (recommend->parsed()) return run_recommend(model_dir, user, top);
    if (labels->parsed()) return run_labels(model_dir, object_id, p);
    if (similar->parsed()) return run_similar(model_dir, user_pair);
    if (quantile->parsed()) return run_quantile(quantile_input, quantile_p, quantile_confidence);
  } catch (const recsys::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
