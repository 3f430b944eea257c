#include "s2k/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "s2k/bm25.hpp"
#include "s2k/corpus.hpp"
#include "s2k/error.hpp"
#include "s2k/fusion.hpp"
#include "s2k/jsonl.hpp"
#include "s2k/metaqa.hpp"
#include "s2k/mock.hpp"
#include "s2k/ngram.hpp"
#include "s2k/reasoning.hpp"
#include "s2k/remote.hpp"
#include "s2k/selective.hpp"

namespace s2k {
namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::chunk:
      return "chunk";
    case Stage::metaqa:
      return "metaqa";
    case Stage::fuse:
      return "fuse";
    case Stage::reason:
      return "reason";
    case Stage::weight:
      return "weight";
  }
  return "chunk";
}

Stage parse_stage(std::string_view name) {
  for (auto s : all_stages()) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::chunk, Stage::metaqa, Stage::fuse, Stage::reason, Stage::weight};
  return stages;
}

std::string_view schema_of(Artifact a) {
  switch (a) {
    case Artifact::chunks:
      return "s2k.chunk/1";
    case Artifact::questions:
      return "s2k.question/1";
    case Artifact::pairs:
      return "s2k.pair/1";
    case Artifact::fused:
      return "s2k.fused/1";
    case Artifact::reasoning:
      return "s2k.reasoning/1";
    case Artifact::weighted:
      return "s2k.weighted/1";
    default:
      return "";
  }
}

void check_schema(const nlohmann::json& record, Artifact a) {
  if (!record.contains("schema")) return;
  if (!record["schema"].is_string() || record["schema"].get<std::string>() != schema_of(a))
    throw SchemaError("record has schema " + record["schema"].dump() + ", expected " + std::string(schema_of(a)));
}

RunOptions RunOptions::from_env() {
  RunOptions o;
  if (const char* n = std::getenv("S2K_FAULT_AFTER_ITEMS"); n && *n) {
    try {
      o.fault_after_items = static_cast<std::size_t>(std::stoull(n));
    } catch (const std::exception&) {
      throw ConfigError("S2K_FAULT_AFTER_ITEMS: expected a count, got '" + std::string(n) + "'");
    }
  }
  if (const char* s = std::getenv("S2K_FAULT_AFTER_STAGE"); s && *s) o.fault_after_stage = parse_stage(s);
  return o;
}

std::string digest_path(const std::string& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string listing;
    for (const auto& f : files) {
      listing += fs::relative(f, path).generic_string() + "\n" + sha256_file(f.string()) + "\n";
    }
    return sha256_hex(listing);
  }
  if (!fs::exists(path, ec)) throw IoError("missing input " + path);
  return sha256_file(path);
}

std::shared_ptr<const Backend> make_backend(const PipelineConfig& cfg, const std::vector<std::string>& texts) {
  if (cfg.backend.kind == "remote") return std::make_shared<RemoteBackend>(cfg.backend.remote);
  NgramBackendOptions opts;
  opts.cache_weight = cfg.backend.cache_weight;
  opts.context_limit = cfg.backend.context_limit;
  auto ngram = NgramBackend::from_texts(texts, std::make_shared<WordTokenizer>(), opts);
  if (cfg.backend.kind == "ngram") return ngram;
  return std::make_shared<CompositeBackend>(ngram, synthetic_reply, "mock");
}

namespace {

template <class T, class F>
std::vector<T> read_records(const std::string& path, Artifact a, F&& parse) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) {
    check_schema(j, a);
    out.push_back(parse(j));
  }
  return out;
}

std::uint64_t item_seed(std::uint64_t seed, const std::string& id) { return seed ^ fnv1a64(id); }

nlohmann::json tagged(nlohmann::json j, Artifact a) {
  j["schema"] = schema_of(a);
  return j;
}

nlohmann::json backend_params(const PipelineConfig& cfg) {
  nlohmann::json j = {{"kind", cfg.backend.kind},
                      {"cache_weight", cfg.backend.cache_weight},
                      {"context_limit", cfg.backend.context_limit}};
  if (cfg.backend.kind == "remote") {
    j["base_url"] = cfg.backend.remote.base_url;
    j["model"] = cfg.backend.remote.model;
    j["vocab_size"] = cfg.backend.remote.vocab_size;
  }
  return j;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, RunOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
  check_config(config_);
  backend_ = options_.backend;
  const fs::path dir = config_.run.out_dir;
  paths_[Artifact::corpus] = config_.corpus.input;
  paths_[Artifact::clean_rules] = config_.corpus.clean_rules;
  paths_[Artifact::chunks] = (dir / "chunks.jsonl").string();
  paths_[Artifact::questions] = (dir / "questions.jsonl").string();
  paths_[Artifact::fused] = (dir / "fused.jsonl").string();
  paths_[Artifact::reasoning] = (dir / "reasoning.jsonl").string();
  paths_[Artifact::weighted] = (dir / "weighted.jsonl").string();
}

Pipeline::~Pipeline() = default;

void Pipeline::set_path(Artifact a, std::string path) { paths_[a] = std::move(path); }

std::string Pipeline::path(Artifact a) const {
  auto it = paths_.find(a);
  return it == paths_.end() ? std::string() : it->second;
}

Artifact Pipeline::output(Stage s) const {
  switch (s) {
    case Stage::chunk:
      return Artifact::chunks;
    case Stage::metaqa:
      return Artifact::questions;
    case Stage::fuse:
      return Artifact::fused;
    case Stage::reason:
      return Artifact::reasoning;
    case Stage::weight:
      return Artifact::weighted;
  }
  return Artifact::chunks;
}

std::string Pipeline::manifest_path(Stage s) const {
  auto parent = fs::path(path(output(s))).parent_path();
  return (parent / (std::string(to_string(s)) + ".manifest.json")).string();
}

std::vector<std::pair<std::string, Artifact>> Pipeline::inputs(Stage s) const {
  switch (s) {
    case Stage::chunk:
      return {{"corpus", Artifact::corpus}, {"clean_rules", Artifact::clean_rules}};
    case Stage::metaqa:
      return {{"chunks", Artifact::chunks}};
    case Stage::fuse:
      return {{"questions", Artifact::questions}, {"chunks", Artifact::chunks}};
    case Stage::reason:
      if (!path(Artifact::pairs).empty()) return {{"pairs", Artifact::pairs}};
      return {{"questions", Artifact::questions}, {"chunks", Artifact::chunks}};
    case Stage::weight:
      // The built-in backends train on the chunks; a remote model does not.
      if (config_.backend.kind == "remote") return {{"fused", Artifact::fused}};
      return {{"fused", Artifact::fused}, {"chunks", Artifact::chunks}};
  }
  return {};
}

std::map<std::string, std::string> Pipeline::input_digests(Stage s) const {
  std::map<std::string, std::string> out;
  for (const auto& [label, a] : inputs(s)) {
    const auto p = path(a);
    if (a == Artifact::clean_rules && p.empty()) {
      out[label] = "";
      continue;
    }
    if (p.empty()) {
      if (a == Artifact::corpus) throw ConfigError("corpus.input: required for the chunk stage");
      throw PreconditionError(std::string(to_string(s)) + ": no path for input " + label);
    }
    out[label] = digest_path(p);
  }
  return out;
}

std::string Pipeline::run_id() const { return sha256_hex(dump_line(to_json(config_))).substr(0, 16); }

std::string Pipeline::config_hash(Stage s) const {
  const auto full = to_json(config_);
  nlohmann::json params;
  switch (s) {
    case Stage::chunk:
      params = {{"budget", config_.corpus.budget}, {"tokenizer", WordTokenizer().id()}};
      break;
    case Stage::metaqa:
      params = {{"metaqa", full["metaqa"]}, {"backend", backend_params(config_)}, {"seed", config_.run.seed}};
      break;
    case Stage::fuse:
      params = {{"fusion", full["fusion"]}, {"backend", backend_params(config_)}, {"seed", config_.run.seed}};
      break;
    case Stage::reason:
      params = {{"retrieval", full["retrieval"]}, {"backend", backend_params(config_)}, {"seed", config_.run.seed}};
      break;
    case Stage::weight:
      params = {{"accept_truncated", config_.backend.accept_truncated}, {"backend", backend_params(config_)}};
      break;
  }
  params["stage"] = to_string(s);
  params["schema"] = schema_of(output(s));
  return sha256_hex(dump_line(params));
}

void Pipeline::log(const std::string& msg) const {
  if (options_.log) options_.log(msg);
}

const Backend& Pipeline::backend() {
  if (!backend_) {
    std::vector<std::string> texts;
    if (fs::exists(path(Artifact::chunks))) {
      for (const auto& j : read_jsonl(path(Artifact::chunks))) texts.push_back(j.at("text").get<std::string>());
    } else if (!path(Artifact::pairs).empty() && fs::exists(path(Artifact::pairs))) {
      for (const auto& j : read_jsonl(path(Artifact::pairs))) texts.push_back(j.at("chunk").get<std::string>());
    }
    backend_ = make_backend(config_, texts);
  }
  return *backend_;
}

void Pipeline::check_chain(Stage s) const {
  static const std::map<Artifact, Stage> producer = {
      {Artifact::chunks, Stage::chunk}, {Artifact::questions, Stage::metaqa}, {Artifact::fused, Stage::fuse}};
  for (const auto& [label, a] : inputs(s)) {
    auto it = producer.find(a);
    if (it == producer.end()) continue;
    const auto file = path(a);
    if (!fs::exists(file)) throw IoError(std::string(to_string(s)) + ": missing input " + file);
    const auto mpath = (fs::path(file).parent_path() / (std::string(to_string(it->second)) + ".manifest.json")).string();
    // Inputs from outside a run directory carry no manifest to check.
    if (!fs::exists(mpath)) continue;
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(read_file(mpath));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(mpath + ": " + e.what());
    }
    if (m.value("/output/file"_json_pointer, "") != fs::path(file).filename().string()) continue;
    if (m.value("/output/sha256"_json_pointer, "") != sha256_file(file))
      throw StaleInput(file + " does not match " + mpath + "; rerun stage " + std::string(to_string(it->second)));
  }
}

bool Pipeline::up_to_date(Stage s, const std::map<std::string, std::string>& digests) const {
  const auto mpath = manifest_path(s);
  const auto out = path(output(s));
  if (!fs::exists(mpath) || !fs::exists(out)) return false;
  try {
    auto m = nlohmann::json::parse(read_file(mpath));
    return m.value("status", "") == "complete" && m.value("config_hash", "") == config_hash(s) &&
           m.at("inputs") == nlohmann::json(digests) && m.at("output").at("sha256") == sha256_file(out);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

void Pipeline::count_item() {
  std::lock_guard lock(count_mu_);
  ++computed_total_;
  if (options_.fault_after_items && computed_total_ >= *options_.fault_after_items)
    throw InjectedFault("injected fault after " + std::to_string(computed_total_) + " items");
}

Pipeline::Prepared Pipeline::prepare(Stage s) {
  Prepared p;
  switch (s) {
    case Stage::chunk: {
      auto docs = std::make_shared<std::vector<RawDocument>>(load_documents(path(Artifact::corpus)));
      auto rules = std::make_shared<CleaningConfig>(CleaningConfig::load(path(Artifact::clean_rules)));
      for (const auto& d : *docs) p.ids.push_back(d.doc_id);
      const auto budget = config_.corpus.budget;
      p.run = [docs, rules, budget](std::size_t i) {
        Item item;
        try {
          auto cleaned = clean_document((*docs)[i], *rules);
          WordTokenizer tok;
          RuleSentenceSplitter splitter;
          for (const auto& c : segment_corpus(cleaned, budget, tok, splitter))
            item.records.push_back(tagged(to_json(c), Artifact::chunks));
          item.status = "ok";
        } catch (const EmptyAfterCleaning& e) {
          item.status = "dropped";
          item.reason = std::string("EmptyAfterCleaning: ") + e.what();
        }
        return item;
      };
      break;
    }
    case Stage::metaqa: {
      auto chunks = std::make_shared<std::vector<DocumentChunk>>(
          read_records<DocumentChunk>(path(Artifact::chunks), Artifact::chunks, chunk_from_json));
      for (const auto& c : *chunks) p.ids.push_back(c.chunk_id);
      const Backend* be = &backend();
      MetaQaOptions base;
      base.max_retries = config_.metaqa.max_retries;
      base.decode.temperature = config_.metaqa.temperature;
      const auto seed = config_.run.seed;
      p.run = [chunks, be, base, seed](std::size_t i) {
        Item item;
        auto opts = base;
        opts.decode.seed = item_seed(seed, (*chunks)[i].chunk_id);
        auto outcome = generate_meta_question((*chunks)[i], *be, opts);
        if (outcome.question) {
          item.status = "ok";
          item.records.push_back(tagged(to_json(*outcome.question), Artifact::questions));
        } else {
          item.status = "dropped";
          item.reason = outcome.dropped_reason;
        }
        return item;
      };
      break;
    }
    case Stage::fuse: {
      auto questions = std::make_shared<std::vector<MetaQuestion>>(
          read_records<MetaQuestion>(path(Artifact::questions), Artifact::questions, meta_question_from_json));
      auto chunks = std::make_shared<std::map<std::string, DocumentChunk>>();
      for (auto& c : read_records<DocumentChunk>(path(Artifact::chunks), Artifact::chunks, chunk_from_json))
        (*chunks)[c.chunk_id] = std::move(c);
      for (const auto& q : *questions) {
        if (!chunks->count(q.chunk_id))
          throw PreconditionError("question " + q.question_id + " references unknown chunk " + q.chunk_id);
        p.ids.push_back(q.question_id);
      }
      const Backend* be = &backend();
      const auto cfg = config_.fusion;
      FusionOptions base;
      base.decode.greedy = config_.fusion_greedy;
      base.decode.temperature = config_.fusion_temperature;
      const auto seed = config_.run.seed;
      p.run = [questions, chunks, be, cfg, base, seed](std::size_t i) {
        Item item;
        const auto& q = (*questions)[i];
        auto opts = base;
        opts.decode.seed = item_seed(seed, q.question_id);
        try {
          auto trace = fuse_answer(q, chunks->at(q.chunk_id), cfg, *be, opts);
          item.status = "ok";
          item.records.push_back(tagged(to_json(trace), Artifact::fused));
        } catch (const FusionInterrupted& e) {
          item.status = "failed";
          item.reason = std::string("FusionInterrupted: ") + e.what();
        }
        return item;
      };
      p.extra = [](const std::vector<Item>& items) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& it : items) {
          for (const auto& r : it.records) {
            sum += r.at("internal_fraction").get<double>();
            ++n;
          }
        }
        return nlohmann::json{{"internal_fraction_mean", n ? nlohmann::json(sum / static_cast<double>(n))
                                                           : nlohmann::json(nullptr)}};
      };
      break;
    }
    case Stage::reason: {
      auto pairs = std::make_shared<std::vector<QuestionChunkPair>>();
      if (!path(Artifact::pairs).empty()) {
        for (const auto& j : read_jsonl(path(Artifact::pairs))) {
          check_schema(j, Artifact::pairs);
          try {
            pairs->push_back({j.at("question_id").get<std::string>(), j.value("chunk_id", ""),
                              j.at("question").get<std::string>(), j.at("chunk").get<std::string>()});
          } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("pair record: ") + e.what());
          }
        }
      } else {
        auto questions =
            read_records<MetaQuestion>(path(Artifact::questions), Artifact::questions, meta_question_from_json);
        auto chunks = read_records<DocumentChunk>(path(Artifact::chunks), Artifact::chunks, chunk_from_json);
        *pairs = make_pairs(questions, chunks);
      }
      if (pairs->empty()) break;
      auto index = std::make_shared<Bm25Index>(build_pair_index(*pairs, {config_.retrieval.k1, config_.retrieval.b}));
      ReasoningOptions opts;
      opts.k = config_.retrieval.k;
      opts.types = config_.retrieval.types;
      opts.quota = config_.retrieval.quota;
      opts.sampling = config_.retrieval.sampling;
      opts.seed = config_.run.seed;
      opts.max_retries = config_.retrieval.max_retries;
      opts.decode.temperature = config_.retrieval.temperature;
      const auto n = config_.retrieval.max_seeds == 0 ? pairs->size()
                                                      : std::min(config_.retrieval.max_seeds, pairs->size());
      for (std::size_t i = 0; i < n; ++i) p.ids.push_back((*pairs)[i].question_id);
      // Quotas make each seed depend on the ones before it.
      p.sequential = !opts.quota.empty();
      auto used = std::make_shared<std::map<ReasoningType, std::size_t>>();
      p.replay = [used](const Item& item) {
        for (const auto& r : item.records) ++(*used)[parse_reasoning_type(r.at("reasoning_type").get<std::string>())];
      };
      const Backend* be = &backend();
      p.run = [pairs, index, be, opts, used](std::size_t i) {
        Item item;
        auto local = opts;
        local.decode.seed = item_seed(opts.seed, (*pairs)[i].question_id);
        std::map<ReasoningType, std::size_t> scratch;
        auto& counter = opts.quota.empty() ? scratch : *used;
        auto res = generate_for_seed((*pairs)[i], *pairs, *index, *be, local, counter);
        for (const auto& qa : res.items) item.records.push_back(tagged(to_json(qa), Artifact::reasoning));
        std::vector<std::string> notes;
        for (const auto& f : res.failures) notes.push_back(std::string(to_string(f.type)) + ": " + f.error);
        item.reason = text::join(notes, "; ");
        if (!res.items.empty()) {
          item.status = "ok";
        } else if (notes.empty()) {
          item.status = "dropped";
          item.reason = "quota exhausted";
        } else {
          item.status = "failed";
        }
        return item;
      };
      p.extra = [](const std::vector<Item>& items) {
        std::map<std::string, std::size_t> per_type;
        for (const auto& it : items) {
          for (const auto& r : it.records) ++per_type[r.at("reasoning_type").get<std::string>()];
        }
        return nlohmann::json{{"per_type", per_type}};
      };
      break;
    }
    case Stage::weight: {
      auto traces = std::make_shared<std::vector<FusionTrace>>(
          read_records<FusionTrace>(path(Artifact::fused), Artifact::fused, fusion_trace_from_json));
      for (const auto& t : *traces) p.ids.push_back(t.question_id);
      const Backend* be = &backend();
      AnnotateOptions base;
      base.accept_truncated = config_.backend.accept_truncated;
      p.run = [traces, be, base](std::size_t i) {
        Item item;
        const auto& t = (*traces)[i];
        auto opts = base;
        opts.append_eos = t.terminated_by == Termination::eos;
        auto ex = annotate_example(t.question_id, internal_context(t.question, ""), t.answer_text, *be, opts);
        item.status = "ok";
        item.records.push_back(to_json(ex));
        return item;
      };
      ExportInfo info;
      info.config_hash = config_hash(s);
      info.backend = be->descriptor().to_json();
      const auto desc = be->descriptor();
      p.write = [info, desc](const std::vector<nlohmann::json>& records, const std::string& out) {
        std::vector<WeightedExample> examples;
        for (const auto& r : records) {
          auto ex = weighted_example_from_json(r);
          ex.tokenizer_id = desc.tokenizer_id;
          ex.truncated = !desc.capabilities.full_distributions;
          examples.push_back(std::move(ex));
        }
        export_weighted_dataset(examples, out, info);
      };
      break;
    }
  }
  return p;
}

StageReport Pipeline::run_stage(Stage s) {
  StageReport report;
  report.stage = s;
  const auto out = path(output(s));
  report.output = out;
  check_chain(s);
  const auto digests = input_digests(s);
  const auto hash = config_hash(s);

  if (up_to_date(s, digests)) {
    report.skipped = true;
    report.manifest = nlohmann::json::parse(read_file(manifest_path(s)));
    report.items = report.manifest.at("counts").at("items").get<std::size_t>();
    log(std::string(to_string(s)) + ": up to date, skipped");
    return report;
  }
  fs::create_directories(fs::path(out).parent_path().empty() ? fs::path(".") : fs::path(out).parent_path());

  auto prep = prepare(s);
  const auto n = prep.ids.size();
  report.items = n;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < n; ++i) {
    if (!index_of.emplace(prep.ids[i], i).second)
      throw SchemaError(std::string(to_string(s)) + ": duplicate item id " + prep.ids[i]);
  }

  // Items finished by an interrupted attempt with the same config and inputs.
  const nlohmann::json header = {{"partial", {{"config_hash", hash}, {"inputs", digests}}}};
  const auto partial = out + ".partial";
  std::vector<std::optional<Item>> results(n);
  if (fs::exists(partial)) {
    std::ifstream in(partial);
    std::string line;
    bool valid = false;
    if (std::getline(in, line)) {
      try {
        valid = nlohmann::json::parse(line) == header;
      } catch (const nlohmann::json::exception&) {
      }
    }
    while (valid && std::getline(in, line)) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        break;  // torn final line
      }
      auto it = index_of.find(j.value("item", ""));
      if (it == index_of.end()) continue;
      Item item{j["item"], j.value("status", ""), j.value("reason", ""), {}};
      for (const auto& r : j.value("records", nlohmann::json::array())) item.records.push_back(r);
      results[it->second] = std::move(item);
    }
  }

  auto partial_line = [](const Item& item) {
    nlohmann::json j = {{"item", item.id}, {"status", item.status}, {"records", item.records}};
    if (!item.reason.empty()) j["reason"] = item.reason;
    return dump_line(j) + "\n";
  };
  {
    std::string fresh = dump_line(header) + "\n";
    for (std::size_t i = 0; i < n; ++i) {
      if (results[i]) {
        fresh += partial_line(*results[i]);
        ++report.resumed;
        if (prep.replay) prep.replay(*results[i]);
      }
    }
    write_file_atomic(partial, fresh);
  }
  if (report.resumed) log(std::string(to_string(s)) + ": resuming with " + std::to_string(report.resumed) + " items");

  std::ofstream sink(partial, std::ios::app | std::ios::binary);
  if (!sink) throw IoError("cannot append to " + partial);
  std::mutex sink_mu;
  auto compute = [&](std::size_t i) {
    Item item;
    try {
      item = prep.run(i);
    } catch (const InjectedFault&) {
      throw;
    } catch (const Error& e) {
      item = Item{};
      item.status = "failed";
      item.reason = e.kind() + ": " + e.what();
    }
    item.id = prep.ids[i];
    {
      std::lock_guard lock(sink_mu);
      sink << partial_line(item);
      sink.flush();
      results[i] = std::move(item);
      ++report.computed;
    }
    count_item();
  };

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i]) pending.push_back(i);
  }
  const auto threads = prep.sequential ? 1 : std::min<std::size_t>(config_.run.threads, pending.size());
  if (threads <= 1) {
    for (auto i : pending) compute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first;
    std::mutex err_mu;
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          while (!stop) {
            auto k = next.fetch_add(1);
            if (k >= pending.size()) return;
            try {
              compute(pending[k]);
            } catch (...) {
              std::lock_guard lock(err_mu);
              if (!first) first = std::current_exception();
              stop = true;
            }
          }
        });
      }
    }
    if (first) std::rethrow_exception(first);
  }
  sink.close();

  std::vector<Item> items;
  std::vector<nlohmann::json> records;
  nlohmann::json item_status = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    auto& item = *results[i];
    if (item.status == "ok") {
      ++report.ok;
    } else if (item.status == "dropped") {
      ++report.dropped;
    } else {
      ++report.failed;
    }
    nlohmann::json st = {{"id", item.id}, {"status", item.status}};
    if (!item.reason.empty()) st["reason"] = item.reason;
    item_status.push_back(std::move(st));
    for (const auto& r : item.records) records.push_back(r);
    items.push_back(std::move(item));
  }
  report.records = records.size();

  if (prep.write) {
    prep.write(records, out);
  } else {
    std::string body;
    for (const auto& r : records) body += dump_line(r) + "\n";
    write_file_atomic(out, body);
  }

  nlohmann::json manifest = {{"schema", "s2k.manifest/1"},
                             {"run_id", run_id()},
                             {"stage", to_string(s)},
                             {"status", "complete"},
                             {"config_hash", hash},
                             {"seed", config_.run.seed},
                             {"inputs", digests},
                             {"output", {{"file", fs::path(out).filename().string()}, {"sha256", sha256_file(out)}}},
                             {"counts",
                              {{"items", n},
                               {"records", report.records},
                               {"ok", report.ok},
                               {"dropped", report.dropped},
                               {"failed", report.failed}}},
                             {"items", item_status}};
  if (s != Stage::chunk) manifest["backend"] = backend().descriptor().to_json();
  if (prep.extra) manifest["summary"] = prep.extra(items);
  write_file_atomic(manifest_path(s), manifest.dump(2) + "\n");
  fs::remove(partial);
  report.manifest = std::move(manifest);
  log(std::string(to_string(s)) + ": " + std::to_string(report.computed) + " computed, " +
      std::to_string(report.resumed) + " resumed, " + std::to_string(report.records) + " records");

  if (options_.fault_after_stage && *options_.fault_after_stage == s)
    throw InjectedFault("injected fault after stage " + std::string(to_string(s)));
  return report;
}

std::vector<StageReport> Pipeline::run_all() {
  std::vector<StageReport> out;
  for (auto s : all_stages()) out.push_back(run_stage(s));
  return out;
}

}  // namespace s2k
