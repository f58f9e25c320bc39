#pragma once

// Shared test scaffolding: temp dirs, small builders, the planted-cluster
// population, input-file fixtures, and a runner for the CLI binary.

#include <sys/wait.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "recsys/recsys.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
public:
  TempDir() {
    const fs::path base = fs::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (int attempt = 0; attempt < 64; ++attempt) {
      fs::path candidate = base / ("recsys_test_" + std::to_string(rng()));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create a temp directory");
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

inline std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline recsys::PreferenceVector pv(std::string id, std::initializer_list<double> comps) {
  recsys::PreferenceVector v;
  v.user_id = std::move(id);
  v.components =
      Eigen::Map<const Eigen::VectorXd>(std::data(comps), static_cast<Eigen::Index>(comps.size()));
  return v;
}

inline Eigen::VectorXd evec(std::initializer_list<double> comps) {
  return Eigen::Map<const Eigen::VectorXd>(std::data(comps),
                                           static_cast<Eigen::Index>(comps.size()));
}

/// Two groups of users around well-separated bases (0 and 20 per component).
/// Noise is uniform in [-1, 1], tiny against the separation, so every user's
/// neighborhood stays inside its own group.
inline std::vector<recsys::PreferenceVector> planted_clusters(std::size_t per_group = 50,
                                                              int m = 8,
                                                              std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  std::vector<recsys::PreferenceVector> vectors;
  vectors.reserve(2 * per_group);
  auto make_group = [&](char tag, double base) {
    for (std::size_t i = 0; i < per_group; ++i) {
      char id[16];
      std::snprintf(id, sizeof(id), "%c%02zu", tag, i);
      recsys::PreferenceVector v;
      v.user_id = id;
      v.components.resize(m);
      for (int j = 0; j < m; ++j) v.components[j] = base + noise(rng);
      vectors.push_back(std::move(v));
    }
  };
  make_group('a', 0.0);
  make_group('b', 20.0);
  return vectors;
}

struct FixtureFiles {
  fs::path ratings;
  fs::path labels;
  fs::path synonyms;
  fs::path config;
};

/// A small deterministic world. Aspect items asp0/asp1 place each user at an
/// exact 2-D position; preference items carry group taste:
///   ua1 (0,0) rated only aspects; uex duplicates ua1; ufar sits at (3,4);
///   ua2/ua3 near the origin love itemA2..4 and pan itemB1..3, ub1..3 at
///   (10,10) do the reverse; uall rated every item at 3.
/// Labels: v1 [cat,pet], v2 duplicates v1, v5 [Kitty,pet] matches v1 through
/// the kitty->cat synonym, v3 [dog,pet], v4 [fish].
inline FixtureFiles write_cli_fixture(const fs::path& dir,
                                      const std::string& metric = "euclidean",
                                      bool standardize = false) {
  FixtureFiles files{dir / "ratings.csv", dir / "labels.jsonl", dir / "synonyms.json",
                     dir / "config.json"};

  std::string csv = "user_id,item_id,rating\n";
  auto aspect_rows = [&](const std::string& user, double x, double y) {
    csv += user + ",asp0," + std::to_string(x) + "\n";
    csv += user + ",asp1," + std::to_string(y) + "\n";
  };
  auto pref_rows = [&](const std::string& user, double item_a, double item_b) {
    for (const char* item : {"itemA2", "itemA3", "itemA4"}) {
      csv += user + "," + item + "," + std::to_string(item_a) + "\n";
    }
    for (const char* item : {"itemB1", "itemB2", "itemB3"}) {
      csv += user + "," + item + "," + std::to_string(item_b) + "\n";
    }
  };
  aspect_rows("ua1", 0, 0);
  aspect_rows("uex", 0, 0);
  aspect_rows("ufar", 3, 4);
  aspect_rows("ua2", 0.1, 0);
  pref_rows("ua2", 5, 1);
  aspect_rows("ua3", 0, 0.1);
  pref_rows("ua3", 5, 1);
  aspect_rows("ub1", 10, 10);
  pref_rows("ub1", 1, 5);
  aspect_rows("ub2", 10.1, 10);
  pref_rows("ub2", 1, 5);
  aspect_rows("ub3", 10, 10.1);
  pref_rows("ub3", 1, 5);
  aspect_rows("uall", 5, 5);
  pref_rows("uall", 3, 3);
  write_file(files.ratings, csv);

  write_file(files.labels,
             R"({"object_id":"v1","labels":["cat","pet"]})" "\n"
             R"({"object_id":"v2","labels":["cat","pet"]})" "\n"
             R"({"object_id":"v3","labels":["dog","pet"]})" "\n"
             R"({"object_id":"v4","labels":["fish"]})" "\n"
             R"({"object_id":"v5","labels":["Kitty","pet"]})" "\n");
  write_file(files.synonyms, R"({"kitty": "cat"})" "\n");
  write_file(files.config, std::string("{\"metric\": \"") + metric +
                               "\", \"standardize\": " + (standardize ? "true" : "false") +
                               ", \"aspects\": [\"asp0\", \"asp1\"]}\n");
  return files;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string quoted = "'";
  for (char c : s) {
    if (c == '\'') {
      quoted += "'\\''";
    } else {
      quoted += c;
    }
  }
  quoted += "'";
  return quoted;
}

/// Runs the CLI through /bin/sh, capturing stdout/stderr separately. An
/// `env_prefix` such as "RECSYS_MODEL_DIR=/x" is prepended verbatim.
inline CliResult run_cli(const std::vector<std::string>& args, const std::string& env_prefix = "") {
  TempDir capture;
  const fs::path out_path = capture.path() / "out";
  const fs::path err_path = capture.path() / "err";
  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += " ";
  cmd += shell_quote(RECSYS_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote(out_path.string()) + " 2>" + shell_quote(err_path.string());

  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  result.out = read_all(out_path);
  result.err = read_all(err_path);
  return result;
}

}  // namespace testsupport
