#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "factdelta/classify.hpp"
#include "factdelta/probe.hpp"

namespace factdelta {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage " + stage + " failed: " + what), stage(stage) {}
  std::string stage;
};

struct RunConfig {
  std::string old_snapshot;
  std::string new_snapshot;
  std::vector<std::string> relation_meta;
  std::string popularity;
  std::string templates;
  std::string llm_endpoint;
  std::string llm_model;
  std::string llm_api_key_env = "FACTDELTA_LLM_KEY";
  std::size_t llm_parallelism = 4;
  std::string output_dir = "out";
  ErrorPolicy error_policy = ErrorPolicy::Skip;
  PipelineConfig pipeline;
  std::size_t k = 10;
  std::size_t n = 500;
  SamplingOptions sampling;
  ProbeOptions probe;

  void set_seed(std::uint64_t seed);
};

// Applies one `key = value` setting. Values are bare words, JSON strings or
// JSON arrays of strings.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
// Reads a TOML-style file of `key = value` lines; `#` starts a comment.
RunConfig load_run_config(const std::string& path);
void load_run_config(const std::string& path, RunConfig& into);

enum class Stage { Preprocess, Diff, Classify, Neighbors, Verbalize };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);
const std::vector<Stage>& all_stages();

// Output file names inside the output directory.
namespace files {
inline constexpr const char* kOldTriples = "old.triples.jsonl";
inline constexpr const char* kNewTriples = "new.triples.jsonl";
inline constexpr const char* kOldRelevant = "old.relevant.txt";
inline constexpr const char* kNewRelevant = "new.relevant.txt";
inline constexpr const char* kEntities = "entities.jsonl";
inline constexpr const char* kRelations = "relations.jsonl";
inline constexpr const char* kRejects = "rejects.jsonl";
inline constexpr const char* kDiff = "diff.jsonl";
inline constexpr const char* kClassified = "classified.jsonl";
inline constexpr const char* kClassifiedRepl = "classified.repl.jsonl";
inline constexpr const char* kNewEntities = "new_entities.txt";
inline constexpr const char* kNeighbors = "neighbors.jsonl";
inline constexpr const char* kTemplates = "templates.jsonl";
inline constexpr const char* kDataset = "dataset.jsonl";
inline constexpr const char* kDatasetRepl = "dataset.repl.jsonl";
}  // namespace files

struct StageManifest {
  std::string stage;
  json params;
  std::map<std::string, std::string> inputs;   // role -> sha256
  std::map<std::string, std::string> outputs;  // file name -> sha256
  json counts;
};

json manifest_to_json(const StageManifest& m);
StageManifest manifest_from_json(const json& j);

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::function<void(const std::string&)> log = {});

  // Runs every stage, skipping those whose manifest is current.
  void run_all(bool force = false);
  // Returns false when the stage was skipped as current.
  bool run_stage(Stage s, bool force = false);
  bool stage_current(Stage s) const;
  std::string manifest_path(Stage s) const;
  std::string out(const std::string& name) const;

 private:
  struct Plan {
    std::map<std::string, std::string> inputs;  // role -> path
    json params;
    std::vector<std::string> outputs;
  };
  Plan plan_for(Stage s) const;
  json execute(Stage s);

  json stage_preprocess();
  json stage_diff();
  json stage_classify();
  json stage_neighbors();
  json stage_verbalize();

  RunConfig cfg_;
  std::function<void(const std::string&)> log_;
};

std::vector<DatasetRecord> read_dataset(const std::string& path);

// Writes one request per line.
std::size_t write_probe_requests(const std::string& dataset_path, ProbeMode mode, const ProbeOptions& opts,
                                 const std::string& out_path);

struct ScoreInput {
  std::string algorithm;
  std::string post_responses;
  std::optional<double> seconds_per_update;
};

struct ScoreOutput {
  std::vector<AggregateRow> rows;
  std::vector<BleedoverMatrix> matrices;
};

// Joins the responses with the plan recomputed from the dataset and writes
// report.tsv, report.json, bleedover_matrix.json and cases.<algorithm>.jsonl.
ScoreOutput score_run(const std::string& dataset_path, const std::string& pre_responses,
                      const std::vector<ScoreInput>& runs, const ProbeOptions& opts, const std::string& out_dir,
                      std::size_t bins = 5, SequenceMode mode = SequenceMode::GeometricMean);

json aggregate_row_to_json(const AggregateRow& row);
AggregateRow aggregate_row_from_json(const json& j);
json bleedover_matrix_to_json(const BleedoverMatrix& m);

}  // namespace factdelta
