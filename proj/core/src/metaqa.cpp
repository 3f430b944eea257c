#include "s2k/metaqa.hpp"

#include "s2k/error.hpp"
#include "s2k/prompts.hpp"

namespace s2k {

const std::vector<std::string>& banned_question_phrases() {
  static const std::vector<std::string> kPhrases = {"as described in the text", "according to the passage",
                                                     "in the document", "from the chunk"};
  return kPhrases;
}

PromptContext build_meta_prompt(const DocumentChunk& chunk) {
  if (text::trim(chunk.text).empty()) throw PreconditionError("build_meta_prompt: chunk " + chunk.chunk_id + " is empty");
  PromptContext ctx;
  ctx.add(Role::user, prompts::render(prompts::kMetaQuestion, {{"article_text", chunk.text}}), "meta_prompt");
  return ctx;
}

namespace {

// End of the balanced object starting at `open`, skipping braces inside
// JSON strings; npos when unbalanced.
std::size_t matching_brace(const std::string& s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string::npos;
}

}  // namespace

std::variant<MetaQuestion, Filtered> parse_question_response(const std::string& raw) {
  for (auto open = raw.find('{'); open != std::string::npos; open = raw.find('{', open + 1)) {
    auto close = matching_brace(raw, open);
    if (close == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(raw.begin() + static_cast<std::ptrdiff_t>(open),
                                             raw.begin() + static_cast<std::ptrdiff_t>(close) + 1, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("question") || !j["question"].is_string()) continue;
    auto q = std::string(text::trim(j["question"].get<std::string>()));
    if (q.empty()) return Filtered{"empty question"};
    for (const auto& phrase : banned_question_phrases()) {
      if (text::contains_ci(q, phrase)) return Filtered{"context-dependent phrase: " + phrase};
    }
    MetaQuestion mq;
    mq.question = std::move(q);
    return mq;
  }
  throw UnparseableResponse("no JSON object with a \"question\" field in reply");
}

MetaQaOutcome generate_meta_question(const DocumentChunk& chunk, const Backend& backend,
                                     const MetaQaOptions& options) {
  MetaQaOutcome outcome;
  const auto ctx = build_meta_prompt(chunk);
  const auto model = backend.descriptor().model_name;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    ++outcome.attempts;
    auto decode = options.decode;
    decode.seed = options.decode.seed + static_cast<std::uint64_t>(attempt);
    auto raw = backend.generate_text(ctx, decode);
    try {
      auto parsed = parse_question_response(raw);
      if (auto* f = std::get_if<Filtered>(&parsed)) {
        outcome.dropped_reason = "filtered: " + f->reason;
        return outcome;
      }
      auto q = std::get<MetaQuestion>(std::move(parsed));
      q.question_id = chunk.chunk_id + "/q";
      q.chunk_id = chunk.chunk_id;
      q.generator_model = model;
      outcome.question = std::move(q);
      return outcome;
    } catch (const UnparseableResponse& e) {
      outcome.dropped_reason = std::string("unparseable: ") + e.what();
    }
  }
  return outcome;
}

nlohmann::json to_json(const MetaQuestion& q) {
  return {{"question_id", q.question_id},
          {"chunk_id", q.chunk_id},
          {"question", q.question},
          {"generator_model", q.generator_model}};
}

MetaQuestion meta_question_from_json(const nlohmann::json& j) {
  try {
    MetaQuestion q;
    q.question_id = j.at("question_id").get<std::string>();
    q.chunk_id = j.at("chunk_id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.generator_model = j.value("generator_model", "");
    if (text::trim(q.question).empty()) throw SchemaError("empty question " + q.question_id);
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("question record: ") + e.what());
  }
}

}  // namespace s2k
