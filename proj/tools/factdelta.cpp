// Command-line front end: dataset build stages, probe files and reports.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "factdelta/pipeline.hpp"

using namespace factdelta;

namespace {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> settings;  // key=value
  std::optional<std::uint64_t> seed;
  std::string t_old, t_new;
  std::string old_snapshot, new_snapshot, popularity, templates, output_dir, llm_endpoint, llm_model;
  std::vector<std::string> relation_meta;
  std::optional<std::size_t> k, n;
  bool force = false;
};

void add_config_flags(CLI::App* app, ConfigFlags& f, bool build) {
  app->add_option("--config", f.config, "Key = value config file");
  app->add_option("--set", f.settings, "Override a config key (key=value)");
  auto* seed = app->add_option("--seed", f.seed, "Random seed");
  auto* t_old = app->add_option("--t-old", f.t_old, "Old snapshot date (YYYY-MM-DD)");
  auto* t_new = app->add_option("--t-new", f.t_new, "New snapshot date (YYYY-MM-DD)");
  if (build) {
    seed->required();
    t_old->required();
    t_new->required();
  }
  app->add_option("--old", f.old_snapshot, "Old snapshot dump (JSON lines, optionally gzipped)");
  app->add_option("--new", f.new_snapshot, "New snapshot dump");
  app->add_option("--relation-meta", f.relation_meta, "Extra property metadata files");
  app->add_option("--popularity", f.popularity, "Popularity TSV");
  app->add_option("--templates", f.templates, "Template JSONL file");
  app->add_option("--llm-endpoint", f.llm_endpoint, "Chat completions endpoint for template generation");
  app->add_option("--llm-model", f.llm_model, "Model name sent to the endpoint");
  app->add_option("--out", f.output_dir, "Output directory");
  app->add_option("--k", f.k, "Neighbor facts per update");
  app->add_option("--n", f.n, "Similar entities examined per update");
  app->add_flag("--force", f.force, "Rerun even when the stage manifest is current");
}

RunConfig resolve_config(const ConfigFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) load_run_config(f.config, cfg);
  for (const auto& s : f.settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) cfg.set_seed(*f.seed);
  if (!f.t_old.empty()) apply_setting(cfg, "t_old", f.t_old);
  if (!f.t_new.empty()) apply_setting(cfg, "t_new", f.t_new);
  if (!f.old_snapshot.empty()) cfg.old_snapshot = f.old_snapshot;
  if (!f.new_snapshot.empty()) cfg.new_snapshot = f.new_snapshot;
  if (!f.relation_meta.empty()) cfg.relation_meta = f.relation_meta;
  if (!f.popularity.empty()) cfg.popularity = f.popularity;
  if (!f.templates.empty()) cfg.templates = f.templates;
  if (!f.llm_endpoint.empty()) cfg.llm_endpoint = f.llm_endpoint;
  if (!f.llm_model.empty()) cfg.llm_model = f.llm_model;
  if (!f.output_dir.empty()) cfg.output_dir = f.output_dir;
  if (f.k) cfg.k = *f.k;
  if (f.n) cfg.n = *f.n;
  cfg.pipeline.validate();
  return cfg;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

struct ProbeFlags {
  std::uint64_t seed = 0;
  std::size_t random_neighbors = 10;
  std::size_t max_alt = 4;
  int max_new_tokens = 100;
  bool skip_unverbalized = false;
};

void add_probe_flags(CLI::App* app, ProbeFlags& f) {
  app->add_option("--seed", f.seed, "Seed for random-neighbor sampling");
  app->add_option("--random-neighbors", f.random_neighbors, "Random neighbor facts per update");
  app->add_option("--max-alt", f.max_alt, "Alternative clozes per update")->check(CLI::Range(0, 4));
  app->add_option("--max-new-tokens", f.max_new_tokens, "Generation length");
  app->add_flag("--skip-unverbalized", f.skip_unverbalized, "Skip updates without a verbalization");
}

ProbeOptions probe_options(const ProbeFlags& f) {
  ProbeOptions o;
  o.seed = f.seed;
  o.random_neighbors = f.random_neighbors;
  o.max_alt_clozes = f.max_alt;
  o.max_new_tokens = f.max_new_tokens;
  o.skip_unverbalized = f.skip_unverbalized;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factual difference dataset builder and update evaluation"};
  app.require_subcommand(1);

  ConfigFlags build_flags;
  auto* build = app.add_subcommand("build", "Run every stage, resuming from current manifests");
  add_config_flags(build, build_flags, true);

  std::map<Stage, ConfigFlags> stage_flags;
  std::map<Stage, CLI::App*> stage_cmds;
  bool lint_rules = false;
  for (Stage s : {Stage::Diff, Stage::Classify, Stage::Neighbors, Stage::Verbalize}) {
    auto* cmd = app.add_subcommand(std::string(to_string(s)), "Run the " + std::string(to_string(s)) + " stage and any stale stage before it");
    add_config_flags(cmd, stage_flags[s], false);
    stage_cmds[s] = cmd;
  }
  stage_cmds[Stage::Classify]->add_flag("--lint-rules", lint_rules, "Report unreachable classification rules");

  std::string emit_dataset, emit_out, emit_mode = "post";
  ProbeFlags emit_flags;
  auto* emit = app.add_subcommand("emit-probe", "Write probe requests for a dataset");
  emit->add_option("--dataset", emit_dataset, "Dataset JSONL")->required();
  emit->add_option("--out", emit_out, "Request JSONL to write")->required();
  emit->add_option("--mode", emit_mode, "pre, post or prompt-baseline")
      ->check(CLI::IsMember({"pre", "post", "prompt-baseline"}));
  add_probe_flags(emit, emit_flags);

  std::string score_dataset, score_pre, score_out = "report";
  std::vector<std::string> score_post, score_seconds;
  std::size_t bins = 5;
  bool full_sequence = false;
  ProbeFlags score_flags;
  auto* score = app.add_subcommand("score", "Score probe responses and write reports");
  score->add_option("--dataset", score_dataset, "Dataset JSONL the requests were emitted from")->required();
  score->add_option("--pre", score_pre, "Responses of the unedited model")->required();
  score->add_option("--post", score_post, "NAME=PATH responses after an update method")->required();
  score->add_option("--seconds", score_seconds, "NAME=VALUE seconds per update for a method");
  score->add_option("--out", score_out, "Report directory");
  score->add_option("--bins", bins, "Quantile bins per axis of the bleedover matrix");
  score->add_flag("--full-sequence", full_sequence, "Use full sequence probability instead of the per-token mean");
  add_probe_flags(score, score_flags);

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Print report.json files as one table");
  report->add_option("inputs", report_inputs, "report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      Pipeline(resolve_config(build_flags), log_line).run_all(build_flags.force);
      return 0;
    }
    for (auto& [stage, cmd] : stage_cmds) {
      if (!cmd->parsed()) continue;
      if (stage == Stage::Classify && lint_rules) {
        auto rows = unreachable_rules();
        for (int row : rows) {
          const auto& rule = classification_rules()[static_cast<std::size_t>(row - 1)];
          std::cout << "unreachable rule " << row << ": " << rule.condition << " -> " << to_string(rule.label)
                    << '\n';
        }
        if (rows.empty()) std::cout << "all rules reachable\n";
        return 0;
      }
      // Earlier stages run only when their outputs are missing or stale.
      Pipeline pipeline(resolve_config(stage_flags[stage]), log_line);
      for (Stage s : all_stages()) {
        if (s == stage) break;
        pipeline.run_stage(s);
      }
      pipeline.run_stage(stage, stage_flags[stage].force);
      return 0;
    }
    if (emit->parsed()) {
      auto n = write_probe_requests(emit_dataset, parse_probe_mode(emit_mode), probe_options(emit_flags), emit_out);
      log_line("wrote " + std::to_string(n) + " requests");
      return 0;
    }
    if (score->parsed()) {
      std::map<std::string, double> seconds;
      for (const auto& s : score_seconds) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--seconds expects NAME=VALUE");
        seconds[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
      }
      std::vector<ScoreInput> runs;
      for (const auto& p : score_post) {
        auto eq = p.find('=');
        if (eq == std::string::npos) throw ConfigError("--post expects NAME=PATH");
        ScoreInput in{p.substr(0, eq), p.substr(eq + 1), std::nullopt};
        if (auto it = seconds.find(in.algorithm); it != seconds.end()) in.seconds_per_update = it->second;
        runs.push_back(std::move(in));
      }
      auto out = score_run(score_dataset, score_pre, runs, probe_options(score_flags), score_out, bins,
                           full_sequence ? SequenceMode::FullSequence : SequenceMode::GeometricMean);
      std::cout << format_report_tsv(out.rows);
      return 0;
    }
    if (report->parsed()) {
      std::vector<AggregateRow> rows;
      for (const auto& path : report_inputs) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        for (const auto& j : json::parse(in)) rows.push_back(aggregate_row_from_json(j));
      }
      std::cout << format_report_tsv(rows);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
