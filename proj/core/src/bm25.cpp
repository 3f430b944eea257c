#include "s2k/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "s2k/error.hpp"
#include "s2k/text.hpp"

namespace s2k {

std::vector<std::string> TermAnalyzer::default_stopwords() {
  return {"a",    "an",   "and",  "are",  "as",   "at",   "be",    "by",   "for",  "from", "has",
          "have", "how",  "in",   "is",   "it",   "its",  "of",    "on",   "or",   "that", "the",
          "this", "to",   "was",  "were", "what", "when", "which", "who",  "why",  "with", "does",
          "do",   "can",  "their", "these", "those", "into", "than", "then", "there", "been", "being"};
}

TermAnalyzer::TermAnalyzer() : TermAnalyzer(default_stopwords()) {}

TermAnalyzer::TermAnalyzer(std::vector<std::string> stopwords) : stopwords_(stopwords.begin(), stopwords.end()) {}

std::vector<std::string> TermAnalyzer::terms(std::string_view s) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords_.count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

Bm25Index Bm25Index::build(const std::vector<std::pair<std::string, std::string>>& docs, Bm25Params params,
                           TermAnalyzer analyzer) {
  if (docs.empty()) throw PreconditionError("Bm25Index::build: no pairs to index");
  Bm25Index idx;
  idx.params_ = params;
  idx.analyzer_ = std::move(analyzer);
  std::map<std::string, std::size_t> seen;
  double total = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& [id, text] = docs[d];
    if (!seen.emplace(id, d).second) throw PreconditionError("Bm25Index::build: duplicate pair id " + id);
    idx.ids_.push_back(id);
    idx.texts_.push_back(text);
    auto terms = idx.analyzer_.terms(text);
    idx.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total += static_cast<double>(terms.size());
    std::map<std::string, std::uint32_t> tf;
    for (auto& t : terms) ++tf[t];
    for (const auto& [t, n] : tf) idx.postings_[t].push_back({static_cast<std::uint32_t>(d), n});
  }
  idx.avgdl_ = total / static_cast<double>(docs.size());
  return idx;
}

double Bm25Index::idf(const std::string& term) const {
  auto it = postings_.find(term);
  const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
  const double n = static_cast<double>(ids_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::score_all(std::string_view query) const {
  std::vector<double> scores(ids_.size(), 0.0);
  const double k1 = params_.k1, b = params_.b;
  for (const auto& term : analyzer_.terms(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = avgdl_ > 0 ? doc_lengths_[p.doc] / avgdl_ : 0.0;
      scores[p.doc] += w * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
    }
  }
  return scores;
}

std::vector<ScoredPair> Bm25Index::retrieve_top_k(std::string_view query, std::size_t k,
                                                  const std::set<std::string>& exclude) const {
  if (k < 1) throw PreconditionError("retrieve_top_k: k must be >= 1");
  auto scores = score_all(query);
  std::vector<std::size_t> order;
  for (std::size_t d = 0; d < ids_.size(); ++d) {
    if (exclude.count(ids_[d]) || texts_[d] == query) continue;
    order.push_back(d);
  }
  auto better = [&](std::size_t a, std::size_t c) {
    if (scores[a] != scores[c]) return scores[a] > scores[c];
    return ids_[a] < ids_[c];
  };
  const auto n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), better);
  std::vector<ScoredPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({ids_[order[i]], scores[order[i]]});
  return out;
}

}  // namespace s2k
