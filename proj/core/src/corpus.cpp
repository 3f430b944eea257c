#include "s2k/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>

#include <toml.hpp>

#include "s2k/error.hpp"
#include "s2k/jsonl.hpp"

namespace s2k {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> string_array(const toml::table& t, std::string_view key) {
  std::vector<std::string> out;
  if (auto arr = t[key].as_array()) {
    for (const auto& v : *arr) {
      auto s = v.value<std::string>();
      if (!s) throw ConfigError("cleaning." + std::string(key) + ": expected strings");
      out.push_back(*s);
    }
  }
  return out;
}

std::string clean_pass(const std::string& in, const CleaningConfig& rules,
                       const std::vector<std::regex>& drop, const std::vector<std::regex>& strip) {
  std::string s;
  s.reserve(in.size());
  for (char c : in) {
    auto u = static_cast<unsigned char>(c);
    if (rules.remove_control_chars && (u < 0x20 || u == 0x7F) && c != '\n' && c != '\t') continue;
    s += c;
  }
  for (const auto& re : strip) s = std::regex_replace(s, re, "");
  for (const auto& nav : rules.navigation) {
    if (nav.empty()) continue;
    for (auto pos = s.find(nav); pos != std::string::npos; pos = s.find(nav, pos)) s.erase(pos, nav.size());
  }

  auto lines = text::split(s, '\n');
  std::unordered_map<std::string, std::size_t> seen;
  if (rules.repeated_line_threshold > 0) {
    for (const auto& l : lines) {
      auto t = std::string(text::trim(l));
      if (!t.empty()) ++seen[t];
    }
  }
  std::vector<std::string> kept;
  for (auto& l : lines) {
    auto t = std::string(text::trim(l));
    if (std::any_of(drop.begin(), drop.end(), [&](const std::regex& re) { return std::regex_match(t, re); }))
      continue;
    if (rules.repeated_line_threshold > 0 && !t.empty() && seen[t] >= rules.repeated_line_threshold) continue;
    // Trailing whitespace is never meaningful.
    while (!l.empty() && text::is_space(l.back())) l.pop_back();
    kept.push_back(std::move(l));
  }

  // Collapse runs of blank lines to a single blank line.
  std::vector<std::string> collapsed;
  for (auto& l : kept) {
    if (l.empty() && (collapsed.empty() || collapsed.back().empty())) continue;
    collapsed.push_back(std::move(l));
  }
  while (!collapsed.empty() && collapsed.back().empty()) collapsed.pop_back();
  return std::string(text::trim(text::join(collapsed, "\n")));
}

}  // namespace

CleaningConfig CleaningConfig::load(const std::string& path) {
  CleaningConfig cfg;
  if (path.empty()) return cfg;
  toml::table root;
  try {
    root = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw ConfigError("cleaning rules " + path + ": " + std::string(e.description()));
  }
  const toml::table* t = root["cleaning"].as_table();
  if (!t) t = &root;
  for (const auto& [k, v] : *t) {
    static const std::vector<std::string> known = {"drop_lines", "strip", "navigation",
                                                   "repeated_line_threshold", "remove_control_chars"};
    if (std::find(known.begin(), known.end(), std::string(k.str())) == known.end() && !v.is_table())
      throw ConfigError("cleaning." + std::string(k.str()) + ": unknown key");
  }
  cfg.drop_lines = string_array(*t, "drop_lines");
  cfg.strip = string_array(*t, "strip");
  cfg.navigation = string_array(*t, "navigation");
  cfg.repeated_line_threshold =
      static_cast<std::size_t>((*t)["repeated_line_threshold"].value_or<int64_t>(0));
  cfg.remove_control_chars = (*t)["remove_control_chars"].value_or(true);
  return cfg;
}

RawDocument clean_document(const RawDocument& doc, const CleaningConfig& rules) {
  if (text::trim(doc.text).empty()) throw PreconditionError("clean_document: empty text for " + doc.doc_id);
  std::vector<std::regex> drop, strip;
  try {
    for (const auto& r : rules.drop_lines) drop.emplace_back(r);
    for (const auto& r : rules.strip) strip.emplace_back(r);
  } catch (const std::regex_error& e) {
    throw ConfigError(std::string("cleaning: bad regex: ") + e.what());
  }

  RawDocument out = doc;
  std::string cur = doc.text;
  // Iterate to a fixed point so cleaning is idempotent even when one rule
  // exposes a match for another.
  for (int i = 0; i < 16; ++i) {
    auto next = clean_pass(cur, rules, drop, strip);
    if (next == cur) break;
    cur = std::move(next);
  }
  if (cur.empty()) throw EmptyAfterCleaning("document " + doc.doc_id + " has no content after cleaning");
  out.text = std::move(cur);
  return out;
}

std::vector<DocumentChunk> segment_corpus(const RawDocument& doc, std::size_t budget,
                                          const Tokenizer& tokenizer,
                                          const SentenceSplitter& splitter) {
  if (budget < 16) throw PreconditionError("segment_corpus: budget must be >= 16");
  const std::string_view text = doc.text;
  const auto sentences = splitter.split(text);

  std::vector<DocumentChunk> chunks;
  auto make_chunk = [&](std::size_t first, std::size_t last, std::size_t tokens, bool oversize) {
    DocumentChunk c;
    std::ostringstream id;
    id << doc.doc_id << "#" << chunks.size();
    c.chunk_id = id.str();
    c.doc_id = doc.doc_id;
    c.text = std::string(text.substr(sentences[first].begin, sentences[last].end - sentences[first].begin));
    c.token_count = tokens;
    c.sentence_span = {first, last};
    c.oversize = oversize;
    chunks.push_back(std::move(c));
  };

  std::size_t first = 0;
  std::size_t current_tokens = 0;
  bool open = false;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (!open) {
      first = i;
      current_tokens = tokenizer.count(text.substr(sentences[i].begin, sentences[i].end - sentences[i].begin));
      open = true;
    } else {
      auto candidate = text.substr(sentences[first].begin, sentences[i].end - sentences[first].begin);
      auto n = tokenizer.count(candidate);
      if (n <= budget) {
        current_tokens = n;
        continue;
      }
      make_chunk(first, i - 1, current_tokens, false);
      first = i;
      current_tokens = tokenizer.count(text.substr(sentences[i].begin, sentences[i].end - sentences[i].begin));
    }
    if (current_tokens > budget) {
      make_chunk(i, i, current_tokens, true);
      open = false;
    }
  }
  if (open) make_chunk(first, sentences.size() - 1, current_tokens, false);
  for (auto& c : chunks) {
    if (c.token_count == 0) throw TokenizerFailure("tokenizer produced no tokens for chunk " + c.chunk_id);
  }
  return chunks;
}

std::vector<RawDocument> load_documents(const std::string& path) {
  std::vector<RawDocument> docs;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      docs.push_back({f.stem().string(), ss.str(), {}});
    }
  } else if (fs::path(path).extension() == ".txt") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    docs.push_back({fs::path(path).stem().string(), ss.str(), {}});
  } else {
    for (const auto& j : read_jsonl(path)) docs.push_back(document_from_json(j));
  }
  std::vector<std::string> ids;
  for (const auto& d : docs) ids.push_back(d.doc_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw SchemaError("duplicate doc_id in " + path);
  return docs;
}

nlohmann::json to_json(const DocumentChunk& c) {
  nlohmann::json j = {{"chunk_id", c.chunk_id},
                      {"doc_id", c.doc_id},
                      {"text", c.text},
                      {"token_count", c.token_count},
                      {"sentence_span", {c.sentence_span.first, c.sentence_span.second}}};
  if (c.oversize) j["oversize"] = true;
  return j;
}

DocumentChunk chunk_from_json(const nlohmann::json& j) {
  try {
    DocumentChunk c;
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    c.token_count = j.at("token_count").get<std::size_t>();
    c.sentence_span = {j.at("sentence_span").at(0).get<std::size_t>(), j.at("sentence_span").at(1).get<std::size_t>()};
    c.oversize = j.value("oversize", false);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("chunk record: ") + e.what());
  }
}

nlohmann::json to_json(const RawDocument& d) {
  nlohmann::json j = {{"doc_id", d.doc_id}, {"text", d.text}};
  if (!d.source_meta.empty()) j["source_meta"] = d.source_meta;
  return j;
}

RawDocument document_from_json(const nlohmann::json& j) {
  try {
    RawDocument d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    if (j.contains("source_meta") && !j["source_meta"].is_null()) {
      if (!j["source_meta"].is_object()) throw SchemaError("document " + d.doc_id + ": source_meta must be an object");
      d.source_meta = j["source_meta"];
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("document record: ") + e.what());
  }
}

}  // namespace s2k
