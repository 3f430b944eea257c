#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace s2k {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Lowercased word terms (ASCII alphanumeric runs; non-ASCII bytes kept as
/// word characters) with stopwords removed.
class TermAnalyzer {
 public:
  TermAnalyzer();
  explicit TermAnalyzer(std::vector<std::string> stopwords);
  std::vector<std::string> terms(std::string_view text) const;
  static std::vector<std::string> default_stopwords();

 private:
  std::set<std::string, std::less<>> stopwords_;
};

struct ScoredPair {
  std::string pair_id;
  double score = 0;
  bool operator==(const ScoredPair&) const = default;
};

/// Immutable Okapi BM25 index:
///
///   score(D, Q) = Σ_{t ∈ Q} idf(t) · tf(t, D) (k1 + 1) / (tf(t, D) + k1 (1 − b + b |D| / avgdl))
///   idf(t)      = ln(1 + (N − df(t) + 0.5) / (df(t) + 0.5))
///
/// Query terms are taken with multiplicity. The smoothed idf never goes
/// negative, so every score is ≥ 0.
class Bm25Index {
 public:
  struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
  };

  /// `docs[i] = (pair_id, indexed text)`; pair ids must be unique.
  static Bm25Index build(const std::vector<std::pair<std::string, std::string>>& docs, Bm25Params params = {},
                         TermAnalyzer analyzer = {});

  /// Scores every indexed pair against `query`, in index order.
  std::vector<double> score_all(std::string_view query) const;

  /// Top `k` pairs by descending score, ties by ascending pair id. Pairs in
  /// `exclude` and pairs whose indexed text equals `query` are skipped.
  std::vector<ScoredPair> retrieve_top_k(std::string_view query, std::size_t k,
                                         const std::set<std::string>& exclude = {}) const;

  double idf(const std::string& term) const;
  std::size_t size() const { return ids_.size(); }
  double avgdl() const { return avgdl_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
  const std::vector<std::string>& pair_ids() const { return ids_; }
  const std::unordered_map<std::string, std::vector<Posting>>& postings() const { return postings_; }
  const Bm25Params& params() const { return params_; }
  const TermAnalyzer& analyzer() const { return analyzer_; }

 private:
  Bm25Params params_;
  TermAnalyzer analyzer_;
  std::vector<std::string> ids_;
  std::vector<std::string> texts_;
  std::vector<std::uint32_t> doc_lengths_;
  double avgdl_ = 0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace s2k
