#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "s2k/config.hpp"
#include "s2k/error.hpp"
#include "s2k/evalmetrics.hpp"
#include "s2k/jsonl.hpp"
#include "s2k/pipeline.hpp"
#include "s2k/rewards.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::optional<std::size_t> max_inflight;
  std::optional<std::size_t> retry_max;
  std::optional<int> timeout_ms;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool with_backend) {
  app->add_option("--config", c.config, "TOML config file");
  app->add_option("--seed", c.seed, "global seed");
  app->add_option("--threads", c.threads, "worker threads per stage");
  app->add_flag("-q,--quiet", c.quiet, "no progress lines");
  if (!with_backend) return;
  app->add_option("--backend", c.backend, "mock | ngram | remote");
  app->add_option("--max-inflight", c.max_inflight, "remote in-flight request cap");
  app->add_option("--retry-max", c.retry_max, "remote retries per request");
  app->add_option("--timeout-ms", c.timeout_ms, "remote request timeout");
}

s2k::PipelineConfig load(const Common& c) {
  auto cfg = s2k::validate_config(c.config);
  if (c.seed) cfg.run.seed = *c.seed;
  if (!c.backend.empty()) cfg.backend.kind = c.backend;
  if (c.max_inflight) cfg.backend.remote.max_inflight = *c.max_inflight;
  if (c.retry_max) cfg.backend.remote.retry_max = *c.retry_max;
  if (c.timeout_ms) cfg.backend.remote.timeout_ms = *c.timeout_ms;
  if (c.threads) cfg.run.threads = *c.threads;
  return cfg;
}

s2k::RunOptions run_options(const Common& c) {
  auto o = s2k::RunOptions::from_env();
  if (!c.quiet) o.log = [](const std::string& m) { std::cerr << "s2k: " << m << "\n"; };
  return o;
}

std::string sibling(const std::string& path, const std::string& name) {
  return (fs::path(path).parent_path() / name).string();
}

void print_report(const s2k::StageReport& r) {
  std::cout << s2k::to_string(r.stage) << ": "
            << (r.skipped ? "skipped (up to date)"
                          : std::to_string(r.records) + " records, " + std::to_string(r.ok) + " ok, " +
                                std::to_string(r.dropped) + " dropped, " + std::to_string(r.failed) + " failed, " +
                                std::to_string(r.computed) + " computed, " + std::to_string(r.resumed) + " resumed")
            << " -> " << r.output << "\n";
}

int run_single(s2k::Pipeline& p, s2k::Stage s) {
  print_report(p.run_stage(s));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"s2k: post-training data toolchain"};
  app.require_subcommand(1);
  Common common;

  // chunk
  auto* chunk = app.add_subcommand("chunk", "clean and segment a corpus into token-balanced chunks");
  std::string chunk_in, chunk_out, clean_rules;
  std::optional<std::size_t> budget;
  chunk->add_option("--in", chunk_in, "directory of .txt files, a .txt file or JSONL")->required();
  chunk->add_option("--out", chunk_out, "output chunks JSONL")->required();
  chunk->add_option("--budget", budget, "max tokens per chunk");
  chunk->add_option("--clean-rules", clean_rules, "TOML cleaning rules");
  add_common(chunk, common, false);

  // metaqa
  auto* metaqa = app.add_subcommand("metaqa", "generate one meta question per chunk");
  std::string mq_chunks, mq_out;
  metaqa->add_option("--chunks", mq_chunks)->required();
  metaqa->add_option("--out", mq_out)->required();
  add_common(metaqa, common, true);

  // fuse
  auto* fuse = app.add_subcommand("fuse", "fuse internal and external answers window by window");
  std::string fu_questions, fu_chunks, fu_out;
  std::optional<std::size_t> fu_w, fu_l;
  std::optional<double> fu_c;
  fuse->add_option("--questions", fu_questions)->required();
  fuse->add_option("--chunks", fu_chunks)->required();
  fuse->add_option("--out", fu_out);
  fuse->add_option("--W", fu_w, "window size");
  fuse->add_option("--C", fu_c, "margin toward external knowledge");
  fuse->add_option("--L", fu_l, "max answer length");
  add_common(fuse, common, true);

  // reason
  auto* reason = app.add_subcommand("reason", "generate multi-step reasoning QA from related pairs");
  std::string re_pairs, re_questions, re_chunks, re_out, re_types, re_sampling;
  std::optional<std::size_t> re_k;
  reason->add_option("--pairs", re_pairs, "JSONL of {question_id, question, chunk}");
  reason->add_option("--questions", re_questions);
  reason->add_option("--chunks", re_chunks);
  reason->add_option("--out", re_out);
  reason->add_option("--k", re_k, "related pairs per seed");
  reason->add_option("--types", re_types, "comma list of deductive,inductive,case");
  reason->add_option("--sampling", re_sampling, "relevance | random");
  add_common(reason, common, true);

  // weight
  auto* weight = app.add_subcommand("weight", "export per-token Selective-SFT weights");
  std::string we_fused, we_chunks, we_out;
  weight->add_option("--fused", we_fused)->required();
  weight->add_option("--chunks", we_chunks, "chunks the n-gram backend trains on (default: next to --fused)");
  weight->add_option("--out", we_out);
  add_common(weight, common, true);

  // score-reward
  auto* score = app.add_subcommand("score-reward", "score transcripts with the accuracy + format reward");
  std::string sr_in, sr_out;
  score->add_option("--in", sr_in, "JSONL of {text, gold}")->required();
  score->add_option("--out", sr_out, "JSONL of {acc, fmt, total, extracted}; stdout when omitted");

  // eval
  auto* eval = app.add_subcommand("eval", "Avg@k, Cons@k and Pass@k over generations");
  std::string ev_in, ev_report;
  std::optional<std::size_t> ev_k;
  eval->add_option("--in", ev_in, "JSONL of {question_id, gold, answers|texts}")->required();
  eval->add_option("--k", ev_k, "generations per question");
  eval->add_option("--report", ev_report, "report JSON path");
  eval->add_option("--config", common.config);

  // run-all
  auto* run_all = app.add_subcommand("run-all", "run every stage with manifests and resume");
  std::string ra_out, ra_in, ra_only;
  run_all->add_option("--out-dir", ra_out, "run directory (overrides run.out_dir)");
  run_all->add_option("--in", ra_in, "corpus (overrides corpus.input)");
  run_all->add_option("--only", ra_only, "run a single stage");
  add_common(run_all, common, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score) {
      std::string body;
      for (const auto& j : s2k::read_jsonl(sr_in)) {
        if (!j.contains("text") || !j["text"].is_string() || !j.contains("gold") || !j["gold"].is_string())
          throw s2k::SchemaError("score-reward: each line needs string fields text and gold");
        body += s2k::dump_line(s2k::to_json(s2k::total_reward(j["text"].get<std::string>(), j["gold"].get<std::string>())));
        body += "\n";
      }
      if (sr_out.empty()) {
        std::cout << body;
      } else {
        s2k::write_file_atomic(sr_out, body);
      }
      return 0;
    }

    if (*eval) {
      auto cfg = s2k::validate_config(common.config);
      const auto k = ev_k.value_or(cfg.metrics.k);
      auto report = s2k::evaluate(s2k::generation_sets_from_jsonl(s2k::read_jsonl(ev_in), k));
      auto text = s2k::to_json(report).dump(2) + "\n";
      if (!ev_report.empty()) s2k::write_file_atomic(ev_report, text);
      std::cout << text;
      return 0;
    }

    auto cfg = load(common);
    if (*chunk) {
      if (budget) cfg.corpus.budget = *budget;
      cfg.corpus.input = chunk_in;
      if (!clean_rules.empty()) cfg.corpus.clean_rules = clean_rules;
      s2k::check_config(cfg);
      s2k::Pipeline p(cfg, run_options(common));
      p.set_path(s2k::Artifact::chunks, chunk_out);
      return run_single(p, s2k::Stage::chunk);
    }
    if (*metaqa) {
      s2k::Pipeline p(cfg, run_options(common));
      p.set_path(s2k::Artifact::chunks, mq_chunks);
      p.set_path(s2k::Artifact::questions, mq_out);
      return run_single(p, s2k::Stage::metaqa);
    }
    if (*fuse) {
      if (fu_w) cfg.fusion.window = *fu_w;
      if (fu_c) cfg.fusion.margin = *fu_c;
      if (fu_l) cfg.fusion.max_length = *fu_l;
      s2k::check_config(cfg);
      s2k::Pipeline p(cfg, run_options(common));
      p.set_path(s2k::Artifact::questions, fu_questions);
      p.set_path(s2k::Artifact::chunks, fu_chunks);
      p.set_path(s2k::Artifact::fused, fu_out.empty() ? sibling(fu_questions, "fused.jsonl") : fu_out);
      return run_single(p, s2k::Stage::fuse);
    }
    if (*reason) {
      if (re_k) cfg.retrieval.k = *re_k;
      if (!re_types.empty()) {
        cfg.retrieval.types.clear();
        for (const auto& t : s2k::text::split(re_types, ',')) {
          cfg.retrieval.types.push_back(s2k::parse_reasoning_type(t));
        }
      }
      if (re_sampling == "random") {
        cfg.retrieval.sampling = s2k::SamplingMode::random;
      } else if (!re_sampling.empty() && re_sampling != "relevance") {
        throw s2k::ConfigError("retrieval.sampling: expected relevance or random, got '" + re_sampling + "'");
      }
      s2k::check_config(cfg);
      s2k::Pipeline p(cfg, run_options(common));
      std::string anchor;
      if (!re_pairs.empty()) {
        p.set_path(s2k::Artifact::pairs, re_pairs);
        anchor = re_pairs;
      } else {
        if (re_questions.empty() || re_chunks.empty())
          throw s2k::PreconditionError("reason: give --pairs, or --questions with --chunks");
        p.set_path(s2k::Artifact::questions, re_questions);
        p.set_path(s2k::Artifact::chunks, re_chunks);
        anchor = re_questions;
      }
      p.set_path(s2k::Artifact::reasoning, re_out.empty() ? sibling(anchor, "reasoning.jsonl") : re_out);
      return run_single(p, s2k::Stage::reason);
    }
    if (*weight) {
      s2k::Pipeline p(cfg, run_options(common));
      p.set_path(s2k::Artifact::fused, we_fused);
      p.set_path(s2k::Artifact::chunks, we_chunks.empty() ? sibling(we_fused, "chunks.jsonl") : we_chunks);
      p.set_path(s2k::Artifact::weighted, we_out.empty() ? sibling(we_fused, "weighted.jsonl") : we_out);
      return run_single(p, s2k::Stage::weight);
    }
    if (*run_all) {
      if (!ra_out.empty()) cfg.run.out_dir = ra_out;
      if (!ra_in.empty()) cfg.corpus.input = ra_in;
      s2k::Pipeline p(cfg, run_options(common));
      if (!ra_only.empty()) return run_single(p, s2k::parse_stage(ra_only));
      for (const auto& r : p.run_all()) print_report(r);
      return 0;
    }
  } catch (const s2k::ConfigError& e) {
    std::cerr << "s2k: ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const s2k::Error& e) {
    std::cerr << "s2k: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "s2k: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
