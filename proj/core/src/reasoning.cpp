#include "s2k/reasoning.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "s2k/error.hpp"
#include "s2k/prompts.hpp"

namespace s2k {

std::string_view to_string(ReasoningType t) {
  switch (t) {
    case ReasoningType::deductive:
      return "deductive";
    case ReasoningType::inductive:
      return "inductive";
    case ReasoningType::case_based:
      return "case_based";
  }
  return "deductive";
}

ReasoningType parse_reasoning_type(std::string_view name) {
  auto n = text::to_lower_ascii(text::trim(name));
  if (n == "deductive") return ReasoningType::deductive;
  if (n == "inductive") return ReasoningType::inductive;
  if (n == "case" || n == "case_based" || n == "case-based") return ReasoningType::case_based;
  throw UnknownReasoningType("unknown reasoning type '" + std::string(name) + "'");
}

std::vector<QuestionChunkPair> make_pairs(const std::vector<MetaQuestion>& questions,
                                          const std::vector<DocumentChunk>& chunks) {
  std::map<std::string, const DocumentChunk*> by_id;
  for (const auto& c : chunks) by_id[c.chunk_id] = &c;
  std::vector<QuestionChunkPair> out;
  for (const auto& q : questions) {
    auto it = by_id.find(q.chunk_id);
    if (it == by_id.end()) throw PreconditionError("question " + q.question_id + " references unknown chunk");
    out.push_back({q.question_id, q.chunk_id, q.question, it->second->text});
  }
  return out;
}

Bm25Index build_pair_index(const std::vector<QuestionChunkPair>& pairs, Bm25Params params) {
  std::vector<std::pair<std::string, std::string>> docs;
  docs.reserve(pairs.size());
  for (const auto& p : pairs) docs.emplace_back(p.question_id, p.indexed_text());
  return Bm25Index::build(docs, params);
}

std::string format_input_block(const std::vector<QuestionChunkPair>& pairs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out << "\n";
    // Newlines inside a chunk would break the numbered-line layout.
    std::string chunk = pairs[i].chunk;
    std::replace(chunk.begin(), chunk.end(), '\n', ' ');
    out << (i + 1) << ". " << pairs[i].question << " (Text: " << chunk << ")";
  }
  return out.str();
}

PromptContext build_reasoning_prompt(ReasoningType type, const std::vector<QuestionChunkPair>& pairs) {
  if (pairs.empty() || pairs.size() > 10)
    throw PreconditionError("build_reasoning_prompt: need 1..10 pairs, got " + std::to_string(pairs.size()));
  std::string_view tmpl;
  switch (type) {
    case ReasoningType::deductive:
      tmpl = prompts::kDeductive;
      break;
    case ReasoningType::inductive:
      tmpl = prompts::kInductive;
      break;
    case ReasoningType::case_based:
      tmpl = prompts::kCaseBased;
      break;
  }
  PromptContext ctx;
  ctx.add(Role::user, prompts::render(tmpl, {{"meta_knowledge_from_sampling", format_input_block(pairs)}}),
          "reasoning_prompt");
  return ctx;
}

namespace {

// "A." / "A)" / "A:" at line start (after optional whitespace, markdown
// bold or list marker). Returns the letter and the option text.
std::optional<std::pair<char, std::string>> option_line(std::string_view line) {
  auto t = text::trim(line);
  while (!t.empty() && (t.front() == '*' || t.front() == '-')) t.remove_prefix(1);
  t = text::trim(t);
  if (t.size() < 2) return std::nullopt;
  char letter = t[0];
  if (letter < 'A' || letter > 'D') return std::nullopt;
  if (t[1] != '.' && t[1] != ')' && t[1] != ':') return std::nullopt;
  auto rest = t.substr(2);
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  return std::make_pair(letter, std::string(text::trim(rest)));
}

std::string clean_stem(std::string stem) {
  auto t = std::string(text::trim(stem));
  for (std::string_view label : {"Output:", "**Output:**", "Question:", "**Question:**"}) {
    if (t.rfind(label, 0) == 0) t = std::string(text::trim(std::string_view(t).substr(label.size())));
  }
  return t;
}

}  // namespace

ReasoningQA parse_reasoning_response(ReasoningType type, const std::string& raw) {
  static constexpr std::string_view kMarker = "Correct Answer:";
  auto marker = raw.rfind(kMarker);
  if (marker == std::string::npos) throw MalformedGeneration("no 'Correct Answer:' line");
  auto gold_text = std::string(text::trim(std::string_view(raw).substr(marker + kMarker.size())));
  while (!gold_text.empty() && gold_text.front() == '*') gold_text.erase(0, 1);
  gold_text = std::string(text::trim(gold_text));
  auto body = std::string_view(raw).substr(0, marker);
  // Drop markdown emphasis left on the marker's own line ("**Correct Answer:**").
  while (!body.empty() && (body.back() == '*' || text::is_space(body.back()))) body.remove_suffix(1);

  ReasoningQA qa;
  qa.type = type;
  if (type == ReasoningType::case_based) {
    qa.question = clean_stem(std::string(body));
    if (qa.question.empty()) throw MalformedGeneration("case-based item has no question");
    if (gold_text.empty()) throw MalformedGeneration("case-based item has no answer");
    qa.gold = gold_text;
    return qa;
  }

  std::string stem;
  bool in_options = false;
  char last = 0;
  for (const auto& line : text::split(body, '\n')) {
    auto opt = option_line(line);
    if (opt && opt->first == static_cast<char>(last == 0 ? 'A' : last + 1)) {
      in_options = true;
      last = opt->first;
      qa.options[opt->first] = opt->second;
      continue;
    }
    if (in_options) {
      // Continuation of a wrapped option.
      auto t = text::trim(line);
      if (!t.empty()) qa.options[last] += " " + std::string(t);
      continue;
    }
    stem += line;
    stem += '\n';
  }
  qa.question = clean_stem(stem);
  for (char c : {'A', 'B', 'C', 'D'}) {
    if (!qa.options.count(c) || qa.options[c].empty())
      throw MalformedGeneration(std::string("missing option ") + c);
  }
  if (qa.question.empty()) throw MalformedGeneration("multiple-choice item has no stem");
  auto g = text::trim(gold_text);
  if (g.empty() || g[0] < 'A' || g[0] > 'D' ||
      (g.size() > 1 && std::isalnum(static_cast<unsigned char>(g[1]))))
    throw MalformedGeneration("gold answer is not a single option letter: '" + gold_text + "'");
  qa.gold = std::string(1, g[0]);
  return qa;
}

std::vector<ScoredPair> sample_pairs(const QuestionChunkPair& seed, const std::vector<QuestionChunkPair>& pairs,
                                     const Bm25Index& index, const ReasoningOptions& options) {
  if (options.sampling == SamplingMode::relevance)
    return index.retrieve_top_k(seed.question, options.k, {seed.question_id});
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].question_id != seed.question_id) pool.push_back(i);
  }
  std::mt19937_64 rng(options.seed ^ fnv1a64(seed.question_id));
  const auto n = std::min(options.k, pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<ScoredPair> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({pairs[pool[i]].question_id, 0.0});
  return out;
}

ReasoningSeedResult generate_for_seed(const QuestionChunkPair& seed, const std::vector<QuestionChunkPair>& pairs,
                                      const Bm25Index& index, const Backend& backend,
                                      const ReasoningOptions& options, std::map<ReasoningType, std::size_t>& used) {
  ReasoningSeedResult result;
  result.seed_id = seed.question_id;
  result.retrieved = sample_pairs(seed, pairs, index, options);

  std::map<std::string, const QuestionChunkPair*> by_id;
  for (const auto& p : pairs) by_id[p.question_id] = &p;
  std::vector<QuestionChunkPair> sampled;
  std::vector<std::string> ids;
  for (const auto& r : result.retrieved) {
    sampled.push_back(*by_id.at(r.pair_id));
    ids.push_back(r.pair_id);
  }
  if (sampled.empty()) {
    for (auto t : options.types) result.failures.push_back({seed.question_id, t, "no related pairs"});
    return result;
  }

  for (auto type : options.types) {
    auto q = options.quota.find(type);
    if (q != options.quota.end() && used[type] >= q->second) continue;
    auto ctx = build_reasoning_prompt(type, sampled);
    std::string last_error;
    bool ok = false;
    for (int attempt = 0; attempt <= options.max_retries && !ok; ++attempt) {
      auto decode = options.decode;
      decode.seed = options.seed + static_cast<std::uint64_t>(attempt);
      try {
        auto qa = parse_reasoning_response(type, backend.generate_text(ctx, decode));
        qa.qa_id = seed.question_id + "/" + std::string(to_string(type));
        qa.source_pair_ids = ids;
        result.items.push_back(std::move(qa));
        ++used[type];
        ok = true;
      } catch (const MalformedGeneration& e) {
        last_error = std::string("MalformedGeneration: ") + e.what();
      } catch (const Error& e) {
        last_error = e.kind() + ": " + e.what();
        break;
      }
    }
    if (!ok) result.failures.push_back({seed.question_id, type, last_error});
  }
  return result;
}

std::vector<ReasoningSeedResult> generate_reasoning_set(const std::vector<QuestionChunkPair>& pairs,
                                                        const Bm25Index& index, const Backend& backend,
                                                        const ReasoningOptions& options) {
  std::vector<ReasoningSeedResult> out;
  std::map<ReasoningType, std::size_t> used;
  const auto n = options.max_seeds == 0 ? pairs.size() : std::min(options.max_seeds, pairs.size());
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_for_seed(pairs[i], pairs, index, backend, options, used));
  return out;
}

nlohmann::json to_json(const ReasoningQA& qa) {
  nlohmann::json j = {{"qa_id", qa.qa_id},
                      {"reasoning_type", to_string(qa.type)},
                      {"question", qa.question},
                      {"gold", qa.gold},
                      {"source_pair_ids", qa.source_pair_ids}};
  if (!qa.options.empty()) {
    nlohmann::json opts = nlohmann::json::object();
    for (const auto& [k, v] : qa.options) opts[std::string(1, k)] = v;
    j["options"] = opts;
  }
  return j;
}

ReasoningQA reasoning_qa_from_json(const nlohmann::json& j) {
  try {
    ReasoningQA qa;
    qa.qa_id = j.at("qa_id").get<std::string>();
    qa.type = parse_reasoning_type(j.at("reasoning_type").get<std::string>());
    qa.question = j.at("question").get<std::string>();
    qa.gold = j.at("gold").get<std::string>();
    qa.source_pair_ids = j.at("source_pair_ids").get<std::vector<std::string>>();
    if (j.contains("options")) {
      for (const auto& [k, v] : j["options"].items()) qa.options[k.at(0)] = v.get<std::string>();
    }
    return qa;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("reasoning record: ") + e.what());
  }
}

}  // namespace s2k
