#include "s2k/fusion.hpp"

#include <cmath>
#include <map>

namespace s2k {

namespace {
constexpr std::string_view kSystemPrompt = "Answer the question accurately and concisely.";
}

void FusionConfig::validate() const {
  if (window < 1) throw ConfigError("fusion.W: must be >= 1");
  if (max_length < window) throw ConfigError("fusion.L: must be >= fusion.W");
  if (std::isnan(margin)) throw ConfigError("fusion.C: must not be NaN");
}

std::string_view to_string(KnowledgeSource s) { return s == KnowledgeSource::internal ? "internal" : "external"; }

KnowledgeSource decide_window(double mean_internal, double mean_external, double margin) {
  return mean_internal >= mean_external + margin ? KnowledgeSource::internal : KnowledgeSource::external;
}

std::vector<TokenId> FusionTrace::tokens() const {
  std::vector<TokenId> out;
  for (const auto& s : segments) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

PromptContext internal_context(const std::string& question, const std::string& answer_prefix) {
  PromptContext ctx;
  ctx.add(Role::system, std::string(kSystemPrompt), "system");
  ctx.add(Role::user, "Question: " + question, "question");
  ctx.set_assistant_prefix(answer_prefix);
  return ctx;
}

PromptContext external_context(const std::string& question, const std::string& document,
                               const std::string& answer_prefix) {
  PromptContext ctx;
  ctx.add(Role::system, std::string(kSystemPrompt), "system");
  ctx.add(Role::user, "Document: " + document, "document");
  ctx.add(Role::user, "Question: " + question, "question");
  ctx.set_assistant_prefix(answer_prefix);
  return ctx;
}

FusionTrace fuse_answer(const MetaQuestion& q, const DocumentChunk& d, const FusionConfig& cfg,
                        const Backend& backend, const FusionOptions& options) {
  cfg.validate();
  FusionTrace trace;
  trace.question_id = q.question_id;
  trace.chunk_id = d.chunk_id;
  trace.question = q.question;

  std::vector<TokenId> fused;
  std::size_t internal_tokens = 0;
  auto finish = [&](Termination how) {
    trace.terminated_by = how;
    trace.answer_text = backend.decode(fused);
    trace.internal_fraction =
        fused.empty() ? 0.0 : static_cast<double>(internal_tokens) / static_cast<double>(fused.size());
  };

  try {
    while (fused.size() < cfg.max_length) {
      const auto prefix = backend.decode(fused);
      const auto ctx_i = internal_context(q.question, prefix);
      const auto ctx_e = external_context(q.question, d.text, prefix);
      if (options.on_step) options.on_step(ctx_i, ctx_e);

      const std::size_t w = std::min(cfg.window, cfg.max_length - fused.size());
      auto t_i = backend.propose_window(ctx_i, w, options.decode);
      auto t_e = backend.propose_window(ctx_e, w, options.decode);
      if (t_i.tokens.empty() || t_e.tokens.empty()) throw BackendUnavailable("backend returned an empty window");

      SegmentChoice seg;
      seg.p_internal = t_i.mean_logprob();
      seg.p_external = t_e.mean_logprob();
      seg.margin_used = cfg.margin;
      seg.source = decide_window(seg.p_internal, seg.p_external, cfg.margin);
      auto& chosen = seg.source == KnowledgeSource::internal ? t_i : t_e;
      seg.tokens = chosen.tokens;
      seg.text = backend.decode(seg.tokens);
      fused.insert(fused.end(), seg.tokens.begin(), seg.tokens.end());
      if (seg.source == KnowledgeSource::internal) internal_tokens += seg.tokens.size();
      trace.segments.push_back(std::move(seg));

      if (chosen.ended || chosen.tokens.back() == kEos) {
        finish(Termination::eos);
        return trace;
      }
    }
  } catch (const FusionInterrupted&) {
    throw;
  } catch (const std::exception& e) {
    finish(Termination::length_cap);
    throw FusionInterrupted(std::string("fusion of ") + q.question_id + " interrupted: " + e.what(), trace);
  }
  finish(Termination::length_cap);
  return trace;
}

FusionSummary fuse_corpus(const std::vector<MetaQuestion>& questions, const std::vector<DocumentChunk>& chunks,
                          const FusionConfig& cfg, const Backend& backend,
                          const std::function<void(const FusionTrace&)>& sink, const std::set<std::string>& done,
                          const FusionOptions& options) {
  cfg.validate();
  std::map<std::string, const DocumentChunk*> by_id;
  for (const auto& c : chunks) by_id[c.chunk_id] = &c;
  for (const auto& q : questions) {
    if (!by_id.count(q.chunk_id))
      throw PreconditionError("question " + q.question_id + " references unknown chunk " + q.chunk_id);
  }

  FusionSummary summary;
  double fraction_sum = 0;
  for (const auto& q : questions) {
    if (done.count(q.question_id)) {
      ++summary.skipped;
      continue;
    }
    try {
      auto trace = fuse_answer(q, *by_id.at(q.chunk_id), cfg, backend, options);
      fraction_sum += trace.internal_fraction;
      ++summary.traces;
      sink(trace);
    } catch (const Error& e) {
      summary.failures.push_back({q.question_id, e.kind() + ": " + e.what()});
    }
  }
  if (summary.traces > 0) summary.internal_fraction_mean = fraction_sum / static_cast<double>(summary.traces);
  return summary;
}

nlohmann::json to_json(const FusionTrace& t) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : t.segments) {
    segs.push_back({{"source", to_string(s.source)},
                    {"text", s.text},
                    {"n_tokens", s.tokens.size()},
                    {"p_I", s.p_internal},
                    {"p_E", s.p_external}});
  }
  return {{"question_id", t.question_id},
          {"chunk_id", t.chunk_id},
          {"question", t.question},
          {"answer_text", t.answer_text},
          {"segments", segs},
          {"internal_fraction", t.internal_fraction},
          {"terminated_by", t.terminated_by == Termination::eos ? "eos" : "length_cap"}};
}

FusionTrace fusion_trace_from_json(const nlohmann::json& j) {
  try {
    FusionTrace t;
    t.question_id = j.at("question_id").get<std::string>();
    t.chunk_id = j.value("chunk_id", "");
    t.question = j.value("question", "");
    t.answer_text = j.at("answer_text").get<std::string>();
    t.internal_fraction = j.at("internal_fraction").get<double>();
    t.terminated_by = j.at("terminated_by").get<std::string>() == "eos" ? Termination::eos : Termination::length_cap;
    for (const auto& s : j.at("segments")) {
      SegmentChoice c;
      c.source = s.at("source").get<std::string>() == "internal" ? KnowledgeSource::internal : KnowledgeSource::external;
      c.text = s.at("text").get<std::string>();
      c.p_internal = s.at("p_I").is_number() ? s.at("p_I").get<double>() : -INFINITY;
      c.p_external = s.at("p_E").is_number() ? s.at("p_E").get<double>() : -INFINITY;
      t.segments.push_back(std::move(c));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fusion trace record: ") + e.what());
  }
}

}  // namespace s2k
