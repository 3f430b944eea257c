#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2k/config.hpp"
#include "s2k/inference.hpp"

namespace s2k {

enum class Stage { chunk, metaqa, fuse, reason, weight };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

/// Files exchanged between stages.
enum class Artifact { corpus, clean_rules, chunks, questions, pairs, fused, reasoning, weighted };

struct RunOptions {
  /// Throw InjectedFault once this many items have been computed.
  std::optional<std::size_t> fault_after_items;
  /// Throw InjectedFault right after this stage's manifest is written.
  std::optional<Stage> fault_after_stage;
  /// Replaces the backend built from the config (tests).
  std::shared_ptr<const Backend> backend;
  std::function<void(const std::string&)> log;

  /// Reads S2K_FAULT_AFTER_ITEMS and S2K_FAULT_AFTER_STAGE.
  static RunOptions from_env();
};

struct StageReport {
  Stage stage = Stage::chunk;
  bool skipped = false;
  std::size_t items = 0;
  /// Items computed by this call.
  std::size_t computed = 0;
  /// Items taken from an interrupted earlier attempt.
  std::size_t resumed = 0;
  std::size_t ok = 0;
  std::size_t dropped = 0;
  std::size_t failed = 0;
  std::size_t records = 0;
  std::string output;
  nlohmann::json manifest;
};

/// Runs stages over files in `config.run.out_dir` (or explicit paths).
///
/// Each stage writes its output and `<stage>.manifest.json` next to it
/// atomically. A stage whose config hash, input digests and output digest
/// all match its manifest is skipped. Items finished by an interrupted
/// attempt are kept in `<output>.partial` and not recomputed.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, RunOptions options = {});
  ~Pipeline();

  void set_path(Artifact a, std::string path);
  std::string path(Artifact a) const;
  std::string manifest_path(Stage s) const;

  /// Throws StaleInput when an input produced by an upstream stage no
  /// longer matches that stage's manifest.
  StageReport run_stage(Stage s);
  std::vector<StageReport> run_all();

  /// Hash of every parameter that affects the stage's output.
  std::string config_hash(Stage s) const;
  std::string run_id() const;
  const PipelineConfig& config() const { return config_; }

  /// Backend built from the config on first use.
  const Backend& backend();

 private:
  struct Item {
    std::string id;
    std::string status;  // ok | dropped | failed
    std::string reason;
    std::vector<nlohmann::json> records;
  };
  struct Prepared {
    std::vector<std::string> ids;
    std::function<Item(std::size_t)> run;
    bool sequential = false;
    /// Called with already finished items before any new one runs.
    std::function<void(const Item&)> replay;
    /// Writes the stage output; defaults to plain JSONL.
    std::function<void(const std::vector<nlohmann::json>&, const std::string&)> write;
    std::function<nlohmann::json(const std::vector<Item>&)> extra;
  };

  std::vector<std::pair<std::string, Artifact>> inputs(Stage s) const;
  Artifact output(Stage s) const;
  std::map<std::string, std::string> input_digests(Stage s) const;
  void check_chain(Stage s) const;
  bool up_to_date(Stage s, const std::map<std::string, std::string>& digests) const;
  Prepared prepare(Stage s);
  void count_item();
  void log(const std::string& msg) const;

  PipelineConfig config_;
  RunOptions options_;
  std::map<Artifact, std::string> paths_;
  std::shared_ptr<const Backend> backend_;
  std::mutex count_mu_;
  std::size_t computed_total_ = 0;
};

/// Digest of a file, or of a directory's sorted `.txt`/`.jsonl` files.
std::string digest_path(const std::string& path);

/// Schema tag written into every record of an artifact.
std::string_view schema_of(Artifact a);

/// Throws SchemaError when a record carries a different schema tag.
void check_schema(const nlohmann::json& record, Artifact a);

/// Backend named by the config; n-gram based kinds train on `texts`.
std::shared_ptr<const Backend> make_backend(const PipelineConfig& cfg, const std::vector<std::string>& texts);

}  // namespace s2k
