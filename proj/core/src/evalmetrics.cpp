#include "s2k/evalmetrics.hpp"

#include <map>

#include "s2k/error.hpp"
#include "s2k/rewards.hpp"

namespace s2k {

namespace {

std::size_t uniform_k(const std::vector<GenerationSet>& sets) {
  if (sets.empty()) throw EmptyInput("no generation sets");
  const auto k = sets.front().answers.size();
  if (k == 0) throw PreconditionError("k must be >= 1");
  for (const auto& s : sets) {
    if (s.answers.size() != k)
      throw PreconditionError("question " + s.question_id + " has " + std::to_string(s.answers.size()) +
                              " generations, expected " + std::to_string(k));
  }
  return k;
}

}  // namespace

bool GenerationSet::correct(std::size_t j) const {
  auto want = normalize_answer(gold);
  return answers.at(j) && want && *answers[j] == *want;
}

std::optional<std::string> GenerationSet::majority() const {
  // Key "\x01" stands for the unextractable value; real answers never hold it.
  std::map<std::string, std::size_t> count;
  auto key = [](const std::optional<std::string>& a) { return a ? "\x02" + *a : std::string("\x01"); };
  for (const auto& a : answers) ++count[key(a)];
  std::size_t best = 0;
  std::optional<std::string> winner;
  for (const auto& a : answers) {
    auto c = count[key(a)];
    if (c > best) {
      best = c;
      winner = a;
    }
  }
  return winner;
}

double avg_at_k(const std::vector<GenerationSet>& sets) {
  const auto k = uniform_k(sets);
  std::size_t hits = 0;
  for (const auto& s : sets) {
    for (std::size_t j = 0; j < k; ++j) hits += s.correct(j) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(k * sets.size());
}

double cons_at_k(const std::vector<GenerationSet>& sets) {
  uniform_k(sets);
  std::size_t hits = 0;
  for (const auto& s : sets) {
    auto m = s.majority();
    auto want = normalize_answer(s.gold);
    if (m && want && *m == *want) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sets.size());
}

double pass_at_k(const std::vector<GenerationSet>& sets) {
  const auto k = uniform_k(sets);
  std::size_t hits = 0;
  for (const auto& s : sets) {
    for (std::size_t j = 0; j < k; ++j) {
      if (s.correct(j)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(sets.size());
}

EvalReport evaluate(const std::vector<GenerationSet>& sets) {
  EvalReport r;
  r.k = uniform_k(sets);
  r.n_questions = sets.size();
  r.avg_at_k = avg_at_k(sets);
  r.cons_at_k = cons_at_k(sets);
  r.pass_at_k = pass_at_k(sets);
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  const auto k = std::to_string(r.k);
  return {{"avg@" + k, r.avg_at_k},
          {"cons@" + k, r.cons_at_k},
          {"pass@" + k, r.pass_at_k},
          {"N_questions", r.n_questions},
          {"k", r.k}};
}

std::vector<GenerationSet> generation_sets_from_jsonl(const std::vector<nlohmann::json>& lines, std::size_t k) {
  if (k == 0) throw PreconditionError("k must be >= 1");
  std::vector<GenerationSet> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& j = lines[i];
    const auto where = "generations line " + std::to_string(i + 1);
    try {
      GenerationSet s;
      s.question_id = j.value("question_id", std::to_string(i));
      s.gold = normalize_answer(j.at("gold").get<std::string>()).value_or("");
      if (j.contains("answers")) {
        for (const auto& a : j["answers"]) {
          s.answers.push_back(a.is_null() ? std::nullopt : normalize_answer(a.get<std::string>()));
        }
      } else {
        for (const auto& t : j.at("texts")) s.answers.push_back(extract_answer(t.get<std::string>()));
      }
      if (s.answers.size() < k)
        throw SchemaError(where + ": " + std::to_string(s.answers.size()) + " generations, need " + std::to_string(k));
      s.answers.resize(k);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace s2k
