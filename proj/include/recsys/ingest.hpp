#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "recsys/errors.hpp"
#include "recsys/types.hpp"

namespace recsys {

/// A rejected input row: 1-based line number plus the reason.
struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct RatingsIngest {
  std::vector<RatingRecord> records;
  std::size_t overwrites = 0;  // duplicate (user,item) pairs resolved last-wins
  std::vector<Diagnostic> rejected;
};

struct LabelsIngest {
  std::vector<LabeledObject> objects;
  std::vector<Diagnostic> rejected;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open input file: " + path.string());
  }
  return in;
}

}  // namespace detail

/// Reads a ratings CSV (header `user_id,item_id,rating`). Malformed rows are
/// rejected with a line-numbered diagnostic; duplicate (user,item) pairs keep
/// the last value seen and are counted as overwrites. Rejection of more than
/// half the data rows is treated as a corrupt file.
inline RatingsIngest ingest_ratings(const std::filesystem::path& path) {
  static constexpr std::string_view kHeader = "user_id,item_id,rating";
  std::ifstream in = detail::open_input(path);

  RatingsIngest result;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;  // (user,item) -> records index

  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = detail::trim(line);
    if (row.empty()) continue;
    if (!saw_header) {
      if (row != kHeader) {
        throw DataError(path.string() + ":" + std::to_string(line_no) +
                        ": expected header '" + std::string(kHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    ++data_rows;

    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? std::string_view::npos : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      result.rejected.push_back({line_no, "expected exactly 3 comma-separated fields"});
      continue;
    }
    std::string user(detail::trim(row.substr(0, c1)));
    std::string item(detail::trim(row.substr(c1 + 1, c2 - c1 - 1)));
    std::string_view rating_field = row.substr(c2 + 1);
    double rating = 0.0;
    if (user.empty() || item.empty()) {
      result.rejected.push_back({line_no, "empty user_id or item_id"});
      continue;
    }
    if (!detail::parse_double(rating_field, rating)) {
      result.rejected.push_back(
          {line_no, "non-numeric rating '" + std::string(detail::trim(rating_field)) + "'"});
      continue;
    }

    auto key = std::make_pair(user, item);
    if (auto it = seen.find(key); it != seen.end()) {
      result.records[it->second].rating = rating;  // last wins
      ++result.overwrites;
    } else {
      seen.emplace(std::move(key), result.records.size());
      result.records.push_back({std::move(user), std::move(item), rating});
    }
  }
  if (!saw_header) {
    throw DataError(path.string() + ": missing header row");
  }
  if (data_rows > 0 && 2 * result.rejected.size() > data_rows) {
    throw DataError(path.string() + ": " + std::to_string(result.rejected.size()) + " of " +
                    std::to_string(data_rows) + " rows rejected; refusing to continue");
  }
  return result;
}

/// Reads labelled objects from a JSON-lines file, one object per line with
/// fields `object_id` (string) and `labels` (array of strings). An object with
/// an empty labels array is rejected with a diagnostic; a duplicate object_id
/// is fatal.
inline LabelsIngest ingest_labels(const std::filesystem::path& path) {
  std::ifstream in = detail::open_input(path);

  LabelsIngest result;
  std::set<std::string> ids;

  std::string line;
  std::size_t line_no = 0;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++data_rows;

    nlohmann::json record = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      result.rejected.push_back({line_no, "not a JSON object"});
      continue;
    }
    if (!record.contains("object_id") || !record["object_id"].is_string() ||
        !record.contains("labels") || !record["labels"].is_array()) {
      result.rejected.push_back({line_no, "missing object_id string or labels array"});
      continue;
    }

    LabeledObject object;
    object.object_id = record["object_id"].get<std::string>();
    bool ok = true;
    for (const auto& entry : record["labels"]) {
      if (!entry.is_string()) {
        result.rejected.push_back({line_no, "labels array contains a non-string entry"});
        ok = false;
        break;
      }
      ++object.labels[entry.get<std::string>()];
    }
    if (!ok) continue;
    if (object.labels.empty()) {
      result.rejected.push_back({line_no, "object '" + object.object_id + "' has no labels"});
      continue;
    }
    if (!ids.insert(object.object_id).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate object_id '" +
                      object.object_id + "'");
    }
    result.objects.push_back(std::move(object));
  }
  if (data_rows > 0 && 2 * result.rejected.size() > data_rows) {
    throw DataError(path.string() + ": " + std::to_string(result.rejected.size()) + " of " +
                    std::to_string(data_rows) + " lines rejected; refusing to continue");
  }
  return result;
}

}  // namespace recsys
