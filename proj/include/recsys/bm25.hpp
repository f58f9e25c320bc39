#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recsys/errors.hpp"
#include "recsys/quantile.hpp"
#include "recsys/types.hpp"

namespace recsys {

namespace detail {

inline std::string fold_label(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace detail

/// Maps surface labels to canonical group identifiers so that synonymous
/// labels count as one term. Lookup lowercases and trims first; labels absent
/// from the table map to themselves. Group identifiers are normalized and
/// chains are resolved when the table is built, which makes canonicalization
/// idempotent.
class SynonymTable {
public:
  SynonymTable() = default;

  static SynonymTable from_map(const std::map<std::string, std::string>& raw) {
    std::map<std::string, std::string> folded;
    for (const auto& [surface, canonical] : raw) {
      folded[detail::fold_label(surface)] = detail::fold_label(canonical);
    }
    // resolve surface -> a -> b chains; a cycle collapses to its smallest member
    SynonymTable table;
    for (const auto& [surface, canonical] : folded) {
      std::string target = canonical;
      std::vector<std::string> path{surface};
      while (true) {
        if (std::find(path.begin(), path.end(), target) != path.end()) {
          target = *std::min_element(path.begin(), path.end());
          break;
        }
        auto it = folded.find(target);
        if (it == folded.end() || it->second == target) break;
        path.push_back(target);
        target = it->second;
      }
      if (target != surface) table.map_[surface] = target;
    }
    return table;
  }

  std::string canonical(std::string_view label) const {
    std::string folded = detail::fold_label(label);
    auto it = map_.find(folded);
    return it == map_.end() ? folded : it->second;
  }

  const std::map<std::string, std::string>& entries() const { return map_; }

private:
  std::map<std::string, std::string> map_;
};

/// Lowercases, then splits on anything that is not alphanumeric. Bytes above
/// 0x7f are treated as word characters, so UTF-8 sequences survive intact.
/// Labels supplied as discrete array entries are trusted as already divided
/// and never go through this.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0x80 || std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Canonicalizes a label multiset: lowercase, trim, map through the table,
/// merging multiplicities. Labels that are empty after trimming are dropped.
inline LabelCounts canonicalize(const LabelCounts& labels, const SynonymTable& table) {
  LabelCounts out;
  for (const auto& [label, count] : labels) {
    std::string canon = table.canonical(label);
    if (canon.empty()) continue;
    out[canon] += count;
  }
  return out;
}

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

inline void validate(const Bm25Params& params) {
  if (!(params.k1 >= 0.0)) throw UsageError("bm25 parameter k1 must be >= 0");
  if (!(params.b >= 0.0 && params.b <= 1.0)) throw UsageError("bm25 parameter b must be in [0, 1]");
}

struct ScoredObject {
  std::string object_id;
  double score = 0.0;
};

/// Canonical-label corpus with the statistics BM25 needs: document frequency
/// per term, average document length, and an inverted index from term to
/// (object, in-document count) postings.
class LabelCorpus {
public:
  using Postings = std::vector<std::pair<std::string, int>>;

  LabelCorpus() = default;

  int doc_count() const { return static_cast<int>(documents_.size()); }

  double avgdl() const {
    return static_cast<double>(total_labels_) / static_cast<double>(documents_.size());
  }

  int doc_frequency(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return it == doc_freq_.end() ? 0 : it->second;
  }

  bool contains(const std::string& object_id) const { return documents_.count(object_id) > 0; }

  const LabelCounts& document(const std::string& object_id) const {
    auto it = documents_.find(object_id);
    if (it == documents_.end()) throw DataError("unknown object '" + object_id + "'");
    return it->second;
  }

  int document_length(const std::string& object_id) const {
    auto it = doc_len_.find(object_id);
    if (it == doc_len_.end()) throw DataError("unknown object '" + object_id + "'");
    return it->second;
  }

  const std::map<std::string, LabelCounts>& documents() const { return documents_; }
  const std::map<std::string, int>& doc_frequencies() const { return doc_freq_; }

  const Postings* postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
  }

  friend LabelCorpus build_corpus(const std::vector<LabeledObject>&, const SynonymTable&);

private:
  std::map<std::string, LabelCounts> documents_;
  std::map<std::string, int> doc_len_;
  std::map<std::string, int> doc_freq_;
  std::map<std::string, Postings> postings_;
  long long total_labels_ = 0;
};

inline LabelCorpus build_corpus(const std::vector<LabeledObject>& objects,
                                const SynonymTable& table) {
  if (objects.empty()) throw DataError("cannot build a corpus from zero objects");
  LabelCorpus corpus;
  for (const auto& object : objects) {
    LabelCounts canon = canonicalize(object.labels, table);
    if (canon.empty()) {
      throw DataError("object '" + object.object_id + "' has no labels after canonicalization");
    }
    if (!corpus.documents_.emplace(object.object_id, std::move(canon)).second) {
      throw DataError("duplicate object_id '" + object.object_id + "'");
    }
  }
  for (const auto& [id, labels] : corpus.documents_) {
    int length = 0;
    for (const auto& [term, count] : labels) {
      length += count;
      corpus.doc_freq_[term] += 1;
      corpus.postings_[term].emplace_back(id, count);
    }
    corpus.doc_len_[id] = length;
    corpus.total_labels_ += length;
  }
  return corpus;
}

/// ln((N - n + 0.5)/(n + 0.5) + 1) for a term contained in n of N documents.
/// The +1 inside the logarithm keeps this strictly positive for every
/// 0 <= n <= N.
inline double idf_value(int doc_count, int doc_frequency) {
  const double n = static_cast<double>(doc_frequency);
  const double total = static_cast<double>(doc_count);
  return std::log((total - n + 0.5) / (n + 0.5) + 1.0);
}

inline double idf(const LabelCorpus& corpus, const std::string& term) {
  return idf_value(corpus.doc_count(), corpus.doc_frequency(term));
}

namespace detail {

inline double bm25_term(double idf, int tf, const Bm25Params& params, int doc_len, double avgdl) {
  if (tf == 0) return 0.0;
  const double f = static_cast<double>(tf);
  const double denom =
      f + params.k1 * (1.0 - params.b + params.b * static_cast<double>(doc_len) / avgdl);
  return idf * (params.k1 + 1.0) * f / denom;
}

}  // namespace detail

/// score(D,Q) = sum over distinct query terms of
///   IDF(q) * (k1+1) f(q,D) / (f(q,D) + k1 (1 - b + b |D|/avgdl)).
/// Query-side multiplicities do not multiply a term's contribution; the
/// document-side frequency f(q,D) already carries the repetition signal.
inline double bm25_score(const LabelCorpus& corpus, const LabelCounts& query,
                         const std::string& doc_id, const Bm25Params& params) {
  validate(params);
  const LabelCounts& doc = corpus.document(doc_id);
  const int doc_len = corpus.document_length(doc_id);
  double score = 0.0;
  for (const auto& [term, query_count] : query) {
    (void)query_count;
    auto it = doc.find(term);
    if (it == doc.end()) continue;
    score += detail::bm25_term(idf(corpus, term), it->second, params, doc_len, corpus.avgdl());
  }
  return score;
}

/// Keywords of one document: weight = (f/|D|) * idf, sorted by
/// (weight desc, label asc), truncated to top_k. Uses the same IDF variant as
/// BM25 so the module has a single rarity scale.
inline std::vector<std::pair<std::string, double>> tfidf_keywords(const LabelCorpus& corpus,
                                                                  const std::string& doc_id,
                                                                  std::size_t top_k) {
  if (top_k == 0) throw UsageError("top_k must be at least 1");
  const LabelCounts& doc = corpus.document(doc_id);
  const double doc_len = corpus.document_length(doc_id);
  std::vector<std::pair<std::string, double>> keywords;
  keywords.reserve(doc.size());
  for (const auto& [term, count] : doc) {
    keywords.emplace_back(term, static_cast<double>(count) / doc_len * idf(corpus, term));
  }
  std::sort(keywords.begin(), keywords.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (keywords.size() > top_k) keywords.resize(top_k);
  return keywords;
}

/// Labels-as-query recommendation: the seed object's labels are the query,
/// every other object is scored with BM25, and only objects scoring strictly
/// above the empirical p-quantile of the candidate scores are returned,
/// best first.
inline std::vector<ScoredObject> recommend_by_labels(const LabelCorpus& corpus,
                                                     const std::string& seed_object,
                                                     const Bm25Params& params, double p) {
  validate(params);
  detail::require_probability(p, "p");
  const LabelCounts& query = corpus.document(seed_object);
  if (corpus.doc_count() < 2) {
    throw DataError("label recommendation needs at least 2 objects in the corpus");
  }

  // walk the inverted index; candidates sharing no term keep score 0
  std::map<std::string, double> scores;
  for (const auto& [id, labels] : corpus.documents()) {
    if (id != seed_object) scores.emplace(id, 0.0);
  }
  for (const auto& [term, query_count] : query) {
    (void)query_count;
    const auto* postings = corpus.postings(term);
    if (postings == nullptr) continue;
    const double term_idf = idf(corpus, term);
    for (const auto& [doc_id, tf] : *postings) {
      if (doc_id == seed_object) continue;
      scores[doc_id] +=
          detail::bm25_term(term_idf, tf, params, corpus.document_length(doc_id), corpus.avgdl());
    }
  }

  std::vector<double> all_scores;
  all_scores.reserve(scores.size());
  for (const auto& [id, score] : scores) all_scores.push_back(score);
  const double threshold = empirical_quantile(all_scores, p);

  std::vector<ScoredObject> result;
  for (const auto& [id, score] : scores) {
    if (score > threshold) result.push_back({id, score});
  }
  std::sort(result.begin(), result.end(), [](const ScoredObject& a, const ScoredObject& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.object_id < b.object_id;
  });
  return result;
}

}  // namespace recsys
