#include "s2k/selective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "s2k/error.hpp"
#include "s2k/jsonl.hpp"

namespace s2k {

namespace {

double plogp(double p) { return p > 0 ? p * std::log(p) : 0.0; }

}  // namespace

double entropy(const TokenDistribution& dist, bool accept_truncated) {
  double sum = 0, h = 0;
  for (double p : dist.probs) {
    if (p < 0 || std::isnan(p)) throw NormalizationError("negative or NaN probability");
    sum += p;
    h -= plogp(p);
  }
  if (dist.coverage == Coverage::full) {
    if (std::abs(sum - 1.0) > 1e-6) throw NormalizationError("distribution sums to " + std::to_string(sum));
    return std::max(0.0, h);
  }
  if (!accept_truncated) throw PreconditionError("entropy over a top-k distribution needs truncation accepted");
  if (sum > 1.0 + 1e-6) throw NormalizationError("top-k mass exceeds 1");
  h -= plogp(std::max(0.0, 1.0 - sum));
  return std::max(0.0, h);
}

double weight(bool correct, double h, std::size_t vocab_size) {
  if (!correct) return 1.0;
  if (vocab_size < 2) return 0.0;
  const double max_h = std::log(static_cast<double>(vocab_size));
  return std::clamp(h, 0.0, max_h) / max_h;
}

TokenWeightRecord make_record(std::size_t position, const TokenDistribution& dist, TokenId target,
                              bool accept_truncated) {
  TokenWeightRecord r;
  r.position = position;
  r.target = target;
  r.argmax = dist.argmax();
  r.correct = r.argmax == target;
  r.h = entropy(dist, accept_truncated);
  const double max_h = std::log(static_cast<double>(std::max<std::size_t>(dist.vocab_size, 2)));
  r.h_norm = std::clamp(r.h / max_h, 0.0, 1.0);
  r.omega = weight(r.correct, r.h, dist.vocab_size);
  const double p = std::max(dist.prob(target), std::numeric_limits<double>::min());
  r.nll = -std::log(p);
  return r;
}

double weighted_loss(const std::vector<TokenWeightRecord>& records) {
  if (records.empty()) return 0.0;
  double s = 0;
  for (const auto& r : records) s += r.omega * r.nll;
  return s / static_cast<double>(records.size());
}

double WeightedExample::unweighted_loss() const {
  if (records.empty()) return 0.0;
  double s = 0;
  for (const auto& r : records) s += r.nll;
  return s / static_cast<double>(records.size());
}

WeightedExample annotate_distributions(std::string example_id, std::string prompt,
                                       const std::vector<TokenId>& targets,
                                       const std::vector<TokenDistribution>& dists, bool accept_truncated) {
  if (targets.size() != dists.size())
    throw PreconditionError("annotate: " + std::to_string(dists.size()) + " distributions for " +
                            std::to_string(targets.size()) + " targets");
  WeightedExample ex;
  ex.example_id = std::move(example_id);
  ex.prompt = std::move(prompt);
  ex.answer_tokens = targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    ex.records.push_back(make_record(t, dists[t], targets[t], accept_truncated));
    if (dists[t].coverage == Coverage::top_k) ex.truncated = true;
  }
  ex.loss_ref = weighted_loss(ex.records);
  return ex;
}

WeightedExample annotate_example(std::string example_id, const PromptContext& prompt, const std::string& answer,
                                 const Backend& backend, const AnnotateOptions& options) {
  const auto desc = backend.descriptor();
  if (!desc.capabilities.teacher_forcing)
    throw UnsupportedCapability("backend '" + desc.kind + "' cannot teacher-force");
  if (!desc.capabilities.full_distributions && !options.accept_truncated)
    throw UnsupportedCapability("backend '" + desc.kind + "' returns top-k distributions only");
  auto targets = backend.encode(answer);
  if (options.append_eos) targets.push_back(kEos);
  auto dists = backend.score_teacher_forced(prompt, targets);
  auto ex = annotate_distributions(std::move(example_id), prompt.serialize(), targets, dists, options.accept_truncated);
  ex.answer = answer;
  ex.tokenizer_id = desc.tokenizer_id;
  for (auto id : targets) ex.token_texts.push_back(backend.token_text(id));
  return ex;
}

nlohmann::json to_json(const WeightedExample& ex) {
  nlohmann::json weights = nlohmann::json::array(), nll = nlohmann::json::array(), h = nlohmann::json::array(),
                 correct = nlohmann::json::array();
  for (const auto& r : ex.records) {
    weights.push_back(r.omega);
    nll.push_back(r.nll);
    h.push_back(r.h);
    correct.push_back(r.correct ? 1 : 0);
  }
  return {{"schema", "s2k.weighted/1"},
          {"example_id", ex.example_id},
          {"prompt", ex.prompt},
          {"answer", ex.answer},
          {"tokens", ex.token_texts},
          {"target_ids", ex.answer_tokens},
          {"weights", weights},
          {"nll", nll},
          {"entropy", h},
          {"correct", correct},
          {"loss_ref", ex.loss_ref}};
}

WeightedExample weighted_example_from_json(const nlohmann::json& j) {
  try {
    WeightedExample ex;
    ex.example_id = j.at("example_id").get<std::string>();
    ex.prompt = j.at("prompt").get<std::string>();
    ex.answer = j.at("answer").get<std::string>();
    ex.token_texts = j.at("tokens").get<std::vector<std::string>>();
    ex.answer_tokens = j.at("target_ids").get<std::vector<TokenId>>();
    const auto& w = j.at("weights");
    const auto& nll = j.at("nll");
    const auto& h = j.at("entropy");
    const auto& correct = j.at("correct");
    if (w.size() != ex.answer_tokens.size() || nll.size() != w.size() || h.size() != w.size() ||
        correct.size() != w.size())
      throw SchemaError("weighted record " + ex.example_id + ": per-token arrays differ in length");
    for (std::size_t t = 0; t < w.size(); ++t) {
      TokenWeightRecord r;
      r.position = t;
      r.target = ex.answer_tokens[t];
      r.correct = correct[t].get<int>() != 0;
      r.argmax = r.correct ? r.target : -1;
      r.omega = w[t].get<double>();
      r.nll = nll[t].get<double>();
      r.h = h[t].get<double>();
      ex.records.push_back(r);
    }
    ex.loss_ref = j.at("loss_ref").get<double>();
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("weighted record: ") + e.what());
  }
}

nlohmann::json export_weighted_dataset(const std::vector<WeightedExample>& examples, const std::string& path,
                                       const ExportInfo& info) {
  std::set<std::string> tokenizers, ids;
  bool truncated = false;
  std::size_t tokens = 0;
  std::string body;
  for (const auto& ex : examples) {
    if (ex.records.size() != ex.answer_tokens.size())
      throw SchemaError("example " + ex.example_id + ": records do not align with answer tokens");
    if (!ids.insert(ex.example_id).second) throw SchemaError("duplicate example id " + ex.example_id);
    for (const auto& r : ex.records) {
      if (!(r.omega >= 0.0 && r.omega <= 1.0)) throw SchemaError("example " + ex.example_id + ": weight outside [0,1]");
    }
    tokenizers.insert(ex.tokenizer_id);
    truncated = truncated || ex.truncated;
    tokens += ex.records.size();
    body += dump_line(to_json(ex));
    body += '\n';
  }
  if (tokenizers.size() > 1) throw SchemaError("examples were tokenized by more than one tokenizer");

  write_file_atomic(path, body);
  nlohmann::json manifest = {{"format", "s2k-weighted/1"},
                             {"examples", examples.size()},
                             {"tokens", tokens},
                             {"config_hash", info.config_hash},
                             {"backend", info.backend},
                             {"tokenizer_id", tokenizers.empty() ? "" : *tokenizers.begin()},
                             {"entropy", truncated ? "truncated" : "full"},
                             {"sha256", sha256_hex(body)}};
  write_file_atomic(path + ".manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace s2k
