#include "s2k/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "s2k/error.hpp"

namespace s2k {
namespace fs = std::filesystem;

namespace {

class Reader {
 public:
  Reader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  std::string field(std::string_view key) const { return path_ + "." + std::string(key); }

  void allow(std::initializer_list<std::string_view> keys) const {
    std::set<std::string_view> ok(keys);
    for (const auto& [k, v] : t_) {
      if (!ok.count(k.str())) throw ConfigError(field(k.str()) + ": unknown key");
    }
  }

  template <class T>
  void get(std::string_view key, T& out) const {
    auto node = t_[key];
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      auto v = node.template value_exact<bool>();
      if (!v) throw ConfigError(field(key) + ": expected boolean");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      auto v = node.template value_exact<std::string>();
      if (!v) throw ConfigError(field(key) + ": expected string");
      out = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
      auto v = node.template value<double>();
      if (!v) throw ConfigError(field(key) + ": expected number");
      out = *v;
    } else {
      auto v = node.template value_exact<std::int64_t>();
      if (!v) throw ConfigError(field(key) + ": expected integer");
      if (*v < 0) throw ConfigError(field(key) + ": must be >= 0");
      out = static_cast<T>(*v);
    }
  }

  void get_signed(std::string_view key, int& out) const {
    auto node = t_[key];
    if (!node) return;
    auto v = node.template value_exact<std::int64_t>();
    if (!v) throw ConfigError(field(key) + ": expected integer");
    out = static_cast<int>(*v);
  }

  const toml::table& table() const { return t_; }

 private:
  const toml::table& t_;
  std::string path_;
};

const toml::table& section(const toml::table& root, std::string_view name) {
  static const toml::table empty;
  auto node = root[name];
  if (!node) return empty;
  if (!node.is_table()) throw ConfigError(std::string(name) + ": expected a table");
  return *node.as_table();
}

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

void check_config(const PipelineConfig& cfg) {
  if (cfg.corpus.budget < 16) throw ConfigError("corpus.budget: must be >= 16");
  if (cfg.fusion.window < 1) throw ConfigError("fusion.W: must be >= 1");
  if (cfg.fusion.max_length < cfg.fusion.window) throw ConfigError("fusion.L: must be >= fusion.W");
  if (std::isnan(cfg.fusion.margin)) throw ConfigError("fusion.C: must be a number");
  if (!(cfg.fusion_temperature > 0)) throw ConfigError("fusion.temperature: must be > 0");
  if (!(cfg.metaqa.temperature > 0)) throw ConfigError("metaqa.temperature: must be > 0");
  if (cfg.metaqa.max_retries < 0) throw ConfigError("metaqa.max_retries: must be >= 0");
  if (cfg.retrieval.k < 1) throw ConfigError("retrieval.k: must be >= 1");
  if (cfg.retrieval.k > 10) throw ConfigError("retrieval.k: reasoning prompts take at most 10 pairs");
  if (!(cfg.retrieval.k1 >= 0)) throw ConfigError("retrieval.k1: must be >= 0");
  if (!(cfg.retrieval.b >= 0 && cfg.retrieval.b <= 1)) throw ConfigError("retrieval.b: must be in [0, 1]");
  if (cfg.retrieval.types.empty()) throw ConfigError("retrieval.types: must not be empty");
  if (cfg.retrieval.max_retries < 0) throw ConfigError("retrieval.max_retries: must be >= 0");
  if (!(cfg.retrieval.temperature > 0)) throw ConfigError("retrieval.temperature: must be > 0");
  if (cfg.metrics.k < 1) throw ConfigError("metrics.k: must be >= 1");
  const auto& kind = cfg.backend.kind;
  if (kind != "mock" && kind != "ngram" && kind != "remote")
    throw ConfigError("backend.kind: expected mock, ngram or remote, got '" + kind + "'");
  if (!(cfg.backend.cache_weight >= 0 && cfg.backend.cache_weight <= 1))
    throw ConfigError("backend.cache_weight: must be in [0, 1]");
  if (kind == "remote" && cfg.backend.remote.base_url.empty())
    throw ConfigError("backend.base_url: required for the remote backend");
  if (cfg.backend.remote.max_inflight < 1) throw ConfigError("backend.max_inflight: must be >= 1");
  if (cfg.backend.remote.timeout_ms < 1) throw ConfigError("backend.timeout_ms: must be >= 1");
  if (cfg.run.threads < 1) throw ConfigError("run.threads: must be >= 1");
}

PipelineConfig parse_config(std::string_view toml_text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  for (const auto& [k, v] : root) {
    static const std::set<std::string_view> sections = {"corpus",  "metaqa",  "fusion", "retrieval",
                                                        "metrics", "backend", "run"};
    if (!sections.count(k.str())) throw ConfigError(std::string(k.str()) + ": unknown key");
  }

  PipelineConfig cfg;
  {
    Reader r(section(root, "corpus"), "corpus");
    r.allow({"input", "budget", "clean_rules"});
    r.get("input", cfg.corpus.input);
    r.get("budget", cfg.corpus.budget);
    r.get("clean_rules", cfg.corpus.clean_rules);
    cfg.corpus.input = resolve(cfg.corpus.input, base_dir);
    cfg.corpus.clean_rules = resolve(cfg.corpus.clean_rules, base_dir);
  }
  {
    Reader r(section(root, "metaqa"), "metaqa");
    r.allow({"max_retries", "temperature"});
    r.get_signed("max_retries", cfg.metaqa.max_retries);
    r.get("temperature", cfg.metaqa.temperature);
  }
  {
    Reader r(section(root, "fusion"), "fusion");
    r.allow({"W", "C", "L", "greedy", "temperature"});
    if (auto w = r.table()["W"].value_exact<std::int64_t>(); w && *w < 1)
      throw ConfigError("fusion.W: must be >= 1");
    r.get("W", cfg.fusion.window);
    r.get("C", cfg.fusion.margin);
    r.get("L", cfg.fusion.max_length);
    r.get("greedy", cfg.fusion_greedy);
    r.get("temperature", cfg.fusion_temperature);
  }
  {
    Reader r(section(root, "retrieval"), "retrieval");
    r.allow({"k", "k1", "b", "sampling", "types", "quota", "max_seeds", "max_retries", "temperature"});
    r.get("k", cfg.retrieval.k);
    r.get("k1", cfg.retrieval.k1);
    r.get("b", cfg.retrieval.b);
    std::string sampling = "relevance";
    r.get("sampling", sampling);
    if (sampling == "relevance") {
      cfg.retrieval.sampling = SamplingMode::relevance;
    } else if (sampling == "random") {
      cfg.retrieval.sampling = SamplingMode::random;
    } else {
      throw ConfigError("retrieval.sampling: expected relevance or random, got '" + sampling + "'");
    }
    if (auto node = r.table()["types"]) {
      auto arr = node.as_array();
      if (!arr) throw ConfigError("retrieval.types: expected an array of strings");
      cfg.retrieval.types.clear();
      for (const auto& v : *arr) {
        auto s = v.value_exact<std::string>();
        if (!s) throw ConfigError("retrieval.types: expected an array of strings");
        try {
          cfg.retrieval.types.push_back(parse_reasoning_type(*s));
        } catch (const UnknownReasoningType& e) {
          throw ConfigError(std::string("retrieval.types: ") + e.what());
        }
      }
    }
    if (auto node = r.table()["quota"]) {
      auto t = node.as_table();
      if (!t) throw ConfigError("retrieval.quota: expected a table");
      for (const auto& [k, v] : *t) {
        ReasoningType type;
        try {
          type = parse_reasoning_type(k.str());
        } catch (const UnknownReasoningType&) {
          throw ConfigError("retrieval.quota." + std::string(k.str()) + ": unknown reasoning type");
        }
        auto n = v.value_exact<std::int64_t>();
        if (!n || *n < 0) throw ConfigError("retrieval.quota." + std::string(k.str()) + ": expected integer >= 0");
        cfg.retrieval.quota[type] = static_cast<std::size_t>(*n);
      }
    }
    r.get("max_seeds", cfg.retrieval.max_seeds);
    r.get_signed("max_retries", cfg.retrieval.max_retries);
    r.get("temperature", cfg.retrieval.temperature);
  }
  {
    Reader r(section(root, "metrics"), "metrics");
    r.allow({"k"});
    if (auto k = r.table()["k"].value_exact<std::int64_t>(); k && *k < 1) throw ConfigError("metrics.k: must be >= 1");
    r.get("k", cfg.metrics.k);
  }
  {
    Reader r(section(root, "backend"), "backend");
    r.allow({"kind", "cache_weight", "context_limit", "accept_truncated", "base_url", "path", "model", "api_key_env",
             "max_inflight", "retry_max", "timeout_ms", "backoff_base_ms", "vocab_size"});
    auto& rc = cfg.backend.remote;
    r.get("kind", cfg.backend.kind);
    r.get("cache_weight", cfg.backend.cache_weight);
    r.get("context_limit", cfg.backend.context_limit);
    r.get("accept_truncated", cfg.backend.accept_truncated);
    r.get("base_url", rc.base_url);
    r.get("path", rc.path);
    r.get("model", rc.model);
    r.get("api_key_env", rc.api_key_env);
    r.get("max_inflight", rc.max_inflight);
    r.get("retry_max", rc.retry_max);
    r.get_signed("timeout_ms", rc.timeout_ms);
    r.get_signed("backoff_base_ms", rc.backoff_base_ms);
    r.get("vocab_size", rc.vocab_size);
    rc.context_limit = cfg.backend.context_limit;
  }
  {
    Reader r(section(root, "run"), "run");
    r.allow({"seed", "out_dir", "threads"});
    r.get("seed", cfg.run.seed);
    r.get("out_dir", cfg.run.out_dir);
    r.get("threads", cfg.run.threads);
    cfg.run.out_dir = resolve(cfg.run.out_dir, base_dir);
  }
  check_config(cfg);
  return cfg;
}

PipelineConfig validate_config(const std::string& path) {
  if (path.empty()) {
    PipelineConfig cfg;
    check_config(cfg);
    return cfg;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto base = fs::path(path).parent_path().string();
  return parse_config(buf.str(), base.empty() ? "." : base);
}

namespace {

nlohmann::json number(double x) {
  // JSON has no infinities; keep them readable and hashable.
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace

nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json types = nlohmann::json::array();
  for (auto t : cfg.retrieval.types) types.push_back(to_string(t));
  nlohmann::json quota = nlohmann::json::object();
  for (const auto& [t, n] : cfg.retrieval.quota) quota[std::string(to_string(t))] = n;
  const auto& rc = cfg.backend.remote;
  return {
      {"corpus", {{"input", cfg.corpus.input}, {"budget", cfg.corpus.budget}, {"clean_rules", cfg.corpus.clean_rules}}},
      {"metaqa", {{"max_retries", cfg.metaqa.max_retries}, {"temperature", cfg.metaqa.temperature}}},
      {"fusion",
       {{"W", cfg.fusion.window},
        {"C", number(cfg.fusion.margin)},
        {"L", cfg.fusion.max_length},
        {"greedy", cfg.fusion_greedy},
        {"temperature", cfg.fusion_temperature}}},
      {"retrieval",
       {{"k", cfg.retrieval.k},
        {"k1", cfg.retrieval.k1},
        {"b", cfg.retrieval.b},
        {"sampling", cfg.retrieval.sampling == SamplingMode::relevance ? "relevance" : "random"},
        {"types", types},
        {"quota", quota},
        {"max_seeds", cfg.retrieval.max_seeds},
        {"max_retries", cfg.retrieval.max_retries},
        {"temperature", cfg.retrieval.temperature}}},
      {"metrics", {{"k", cfg.metrics.k}}},
      {"backend",
       {{"kind", cfg.backend.kind},
        {"cache_weight", cfg.backend.cache_weight},
        {"context_limit", cfg.backend.context_limit},
        {"accept_truncated", cfg.backend.accept_truncated},
        {"base_url", rc.base_url},
        {"model", rc.model},
        {"vocab_size", rc.vocab_size}}},
      {"run", {{"seed", cfg.run.seed}}},
  };
}

}  // namespace s2k
