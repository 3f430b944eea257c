#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/text.hpp"

namespace s2k {

struct RawDocument {
  std::string doc_id;
  std::string text;
  /// Free-form provenance carried through unchanged.
  nlohmann::json source_meta = nlohmann::json::object();
};

struct DocumentChunk {
  std::string chunk_id;
  std::string doc_id;
  std::string text;
  std::size_t token_count = 0;
  /// Inclusive sentence indices in the parent document.
  std::pair<std::size_t, std::size_t> sentence_span{0, 0};
  /// Single sentence longer than the budget.
  bool oversize = false;
};

/// Declarative cleaning rules. Regexes use ECMAScript syntax.
struct CleaningConfig {
  /// A line matching any of these (whole line) is removed.
  std::vector<std::string> drop_lines;
  /// Every match of these is deleted wherever it occurs.
  std::vector<std::string> strip;
  /// Literal navigation strings removed wherever they occur.
  std::vector<std::string> navigation;
  /// Non-blank lines repeated at least this often within a document are
  /// removed; 0 disables the check.
  std::size_t repeated_line_threshold = 0;
  bool remove_control_chars = true;

  /// Reads `[cleaning]` from a TOML file (or an empty config for "").
  static CleaningConfig load(const std::string& path);
};

/// Removes boilerplate per `rules`. The result is a fixed point:
/// clean_document(clean_document(d)) == clean_document(d).
/// Throws EmptyAfterCleaning when no text survives.
RawDocument clean_document(const RawDocument& doc, const CleaningConfig& rules);

/// Greedy sentence packing into chunks of at most `budget` tokens.
/// Throws PreconditionError for budget < 16.
std::vector<DocumentChunk> segment_corpus(const RawDocument& doc, std::size_t budget,
                                          const Tokenizer& tokenizer,
                                          const SentenceSplitter& splitter);

/// Reads either a JSONL file of `{doc_id, text, source_meta}` records or a
/// directory of `.txt` files (doc_id = file stem, sorted by name).
std::vector<RawDocument> load_documents(const std::string& path);

nlohmann::json to_json(const DocumentChunk& c);
DocumentChunk chunk_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RawDocument& d);
RawDocument document_from_json(const nlohmann::json& j);

}  // namespace s2k
