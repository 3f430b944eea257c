#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/fusion.hpp"
#include "s2k/reasoning.hpp"
#include "s2k/remote.hpp"

namespace s2k {

struct PipelineConfig {
  struct Corpus {
    /// Document directory, .txt file or JSONL file.
    std::string input;
    std::size_t budget = 512;
    /// TOML file with a [cleaning] table; empty means no cleaning rules.
    std::string clean_rules;
  } corpus;

  struct MetaQa {
    int max_retries = 2;
    double temperature = 0.7;
  } metaqa;

  FusionConfig fusion;
  /// Window proposals decode greedily unless this is false.
  bool fusion_greedy = true;
  double fusion_temperature = 1.0;

  struct Retrieval {
    std::size_t k = 10;
    double k1 = 1.2;
    double b = 0.75;
    SamplingMode sampling = SamplingMode::relevance;
    std::vector<ReasoningType> types = {ReasoningType::deductive, ReasoningType::inductive,
                                        ReasoningType::case_based};
    std::map<ReasoningType, std::size_t> quota;
    std::size_t max_seeds = 0;
    int max_retries = 2;
    double temperature = 0.7;
  } retrieval;

  struct Metrics {
    std::size_t k = 5;
  } metrics;

  struct Backend {
    std::string kind = "mock";
    double cache_weight = 0.5;
    std::size_t context_limit = 0;
    bool accept_truncated = false;
    RemoteConfig remote;
  } backend;

  struct Run {
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    std::size_t threads = 1;
  } run;
};

/// Parses TOML text. Relative paths resolve against `base_dir`. Unknown
/// keys, wrong types and out-of-range values throw ConfigError whose
/// message starts with the dotted field path.
PipelineConfig parse_config(std::string_view toml_text, const std::string& base_dir = ".");

/// Reads and validates a config file; "" yields all defaults.
PipelineConfig validate_config(const std::string& path);

/// Range checks shared by the parser and command-line overrides.
void check_config(const PipelineConfig& cfg);

/// Canonical form: every parameter that affects outputs.
nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace s2k
