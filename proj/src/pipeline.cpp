#include "factdelta/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "factdelta/hashing.hpp"
#include "factdelta/llm_client.hpp"

namespace fs = std::filesystem;

namespace factdelta {

// --- Configuration -----------------------------------------------------------

void RunConfig::set_seed(std::uint64_t seed) {
  pipeline.random_seed = seed;
  sampling.seed = seed;
  probe.seed = seed;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    // stoull accepts a sign and wraps negatives.
    if (v.empty() || !std::isdigit(static_cast<unsigned char>(v.front()))) throw std::invalid_argument(v);
    std::size_t used = 0;
    auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

std::vector<std::string> to_list(const std::string& key, const std::string& v) {
  if (!v.starts_with("[")) return {v};
  try {
    return json::parse(v).get<std::vector<std::string>>();
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an array of strings");
  }
}

std::set<std::string> to_set(const std::string& key, const std::string& v) {
  auto list = to_list(key, v);
  return {list.begin(), list.end()};
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  std::string value = trim(raw);
  if (value.starts_with("\"")) {
    try {
      value = json::parse(value).get<std::string>();
    } catch (const std::exception&) {
      throw ConfigError(key + ": malformed string");
    }
  }
  try {
    if (key == "old_snapshot") cfg.old_snapshot = value;
    else if (key == "new_snapshot") cfg.new_snapshot = value;
    else if (key == "relation_meta") cfg.relation_meta = to_list(key, value);
    else if (key == "popularity") cfg.popularity = value;
    else if (key == "templates") cfg.templates = value;
    else if (key == "llm_endpoint") cfg.llm_endpoint = value;
    else if (key == "llm_model") cfg.llm_model = value;
    else if (key == "llm_api_key_env") cfg.llm_api_key_env = value;
    else if (key == "llm_parallelism") cfg.llm_parallelism = to_u64(key, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "error_policy") {
      if (value == "skip") cfg.error_policy = ErrorPolicy::Skip;
      else if (value == "abort") cfg.error_policy = ErrorPolicy::Abort;
      else throw ConfigError(key + ": expected skip or abort");
    } else if (key == "seed") cfg.set_seed(to_u64(key, value));
    else if (key == "t_old") cfg.pipeline.t_old = parse_date(value);
    else if (key == "t_new") cfg.pipeline.t_new = parse_date(value);
    else if (key == "creation_relations") cfg.pipeline.creation_relations = to_set(key, value);
    else if (key == "death_relations") cfg.pipeline.death_relations = to_set(key, value);
    else if (key == "population_relation") cfg.pipeline.population_relation = value;
    else if (key == "population_undersample_factor")
      cfg.pipeline.population_undersample_factor = static_cast<unsigned>(to_u64(key, value));
    else if (key == "k") cfg.k = to_u64(key, value);
    else if (key == "n") cfg.n = to_u64(key, value);
    else if (key == "template_top_entities") cfg.sampling.top_entities = to_u64(key, value);
    else if (key == "template_per_relation") cfg.sampling.per_relation = to_u64(key, value);
    else if (key == "max_alt_clozes") {
      cfg.probe.max_alt_clozes = to_u64(key, value);
      if (cfg.probe.max_alt_clozes > 4) throw ConfigError("max_alt_clozes: at most 4");
    } else if (key == "random_neighbors") cfg.probe.random_neighbors = to_u64(key, value);
    else if (key == "max_new_tokens") cfg.probe.max_new_tokens = static_cast<int>(to_u64(key, value));
    else throw ConfigError("unknown setting '" + key + "'");
  } catch (const ParseError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void load_run_config(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // A '#' inside a quoted value is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  load_run_config(path, cfg);
  return cfg;
}

// --- Stages ------------------------------------------------------------------

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Preprocess: return "preprocess";
    case Stage::Diff: return "diff";
    case Stage::Classify: return "classify";
    case Stage::Neighbors: return "neighbors";
    case Stage::Verbalize: return "verbalize";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : all_stages())
    if (to_string(st) == s) return st;
  throw std::invalid_argument("unknown stage '" + std::string(s) + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::Preprocess, Stage::Diff, Stage::Classify, Stage::Neighbors,
                                         Stage::Verbalize};
  return stages;
}

json manifest_to_json(const StageManifest& m) {
  return {{"stage", m.stage}, {"params", m.params}, {"inputs", m.inputs}, {"outputs", m.outputs},
          {"counts", m.counts}};
}

StageManifest manifest_from_json(const json& j) {
  return {j.at("stage").get<std::string>(), j.at("params"),
          j.at("inputs").get<std::map<std::string, std::string>>(),
          j.at("outputs").get<std::map<std::string, std::string>>(), j.at("counts")};
}

namespace {

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write '" + path + "'");
  }
  void write(const json& j) {
    out_ << j.dump() << '\n';
    ++count_;
  }
  std::size_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::size_t count_ = 0;
};

void for_each_jsonl(const std::string& path, const std::function<void(const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      throw SchemaError(line_no, path + ": " + e.what());
    }
  }
}

void write_lines(const std::string& path, std::vector<std::string> lines) {
  std::sort(lines.begin(), lines.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

PreprocessedSnapshot load_snapshot(const std::string& triples_path, const std::string& relevant_path) {
  std::vector<Triple> triples;
  for_each_jsonl(triples_path, [&](const json& j) { triples.push_back(decode_triple(j)); });
  auto rel = read_lines(relevant_path);
  return PreprocessedSnapshot(std::move(triples), RelevanceSet(rel.begin(), rel.end()));
}

void write_snapshot(const PreprocessedSnapshot& snap, const std::string& triples_path,
                    const std::string& relevant_path) {
  JsonlWriter w(triples_path);
  for (const auto& t : snap.triples()) w.write(encode_triple(t));
  write_lines(relevant_path, {snap.relevant_entities().begin(), snap.relevant_entities().end()});
}

EntityInfoMap load_entities(const std::string& path) {
  EntityInfoMap out;
  for_each_jsonl(path, [&](const json& j) {
    out[j.at("id").get<std::string>()] = {j.at("label").get<std::string>(), j.at("description").get<std::string>()};
  });
  return out;
}

RelationMetaMap load_relations(const std::string& path) {
  RelationMetaMap out;
  for_each_jsonl(path, [&](const json& j) {
    RelationMeta m = relation_meta_from_json(j);
    out.emplace(m.id.id, std::move(m));
  });
  return out;
}

PopularityTable load_popularity_or_empty(const std::string& path) {
  if (path.empty()) return {};
  return load_popularity(path).table;
}

std::string key_string(const std::string& s, const std::string& r) { return s + "\t" + r; }

}  // namespace

Pipeline::Pipeline(RunConfig cfg, std::function<void(const std::string&)> log)
    : cfg_(std::move(cfg)), log_(std::move(log)) {
  if (!log_) log_ = [](const std::string&) {};
}

std::string Pipeline::out(const std::string& name) const { return (fs::path(cfg_.output_dir) / name).string(); }

std::string Pipeline::manifest_path(Stage s) const {
  return (fs::path(cfg_.output_dir) / "manifests" / (std::string(to_string(s)) + ".json")).string();
}

Pipeline::Plan Pipeline::plan_for(Stage s) const {
  Plan p;
  switch (s) {
    case Stage::Preprocess:
      p.inputs["old_snapshot"] = cfg_.old_snapshot;
      p.inputs["new_snapshot"] = cfg_.new_snapshot;
      for (std::size_t i = 0; i < cfg_.relation_meta.size(); ++i)
        p.inputs["relation_meta." + std::to_string(i)] = cfg_.relation_meta[i];
      p.params = {{"error_policy", cfg_.error_policy == ErrorPolicy::Skip ? "skip" : "abort"}};
      p.outputs = {files::kOldTriples, files::kOldRelevant, files::kNewTriples, files::kNewRelevant,
                   files::kEntities,   files::kRelations,   files::kRejects};
      break;
    case Stage::Diff:
      p.inputs = {{"old_triples", out(files::kOldTriples)},
                  {"old_relevant", out(files::kOldRelevant)},
                  {"new_triples", out(files::kNewTriples)},
                  {"new_relevant", out(files::kNewRelevant)}};
      p.outputs = {files::kDiff};
      break;
    case Stage::Classify: {
      p.inputs = {{"diff", out(files::kDiff)}, {"relations", out(files::kRelations)}};
      if (!cfg_.popularity.empty()) p.inputs["popularity"] = cfg_.popularity;
      const auto& pc = cfg_.pipeline;
      p.params = {{"t_old", pc.t_old.iso()},
                  {"t_new", pc.t_new.iso()},
                  {"seed", pc.random_seed},
                  {"creation_relations", pc.creation_relations},
                  {"death_relations", pc.death_relations},
                  {"population_relation", pc.population_relation},
                  {"population_undersample_factor", pc.population_undersample_factor}};
      p.outputs = {files::kClassified, files::kClassifiedRepl, files::kNewEntities};
      break;
    }
    case Stage::Neighbors:
      p.inputs = {{"old_triples", out(files::kOldTriples)},
                  {"old_relevant", out(files::kOldRelevant)},
                  {"new_triples", out(files::kNewTriples)},
                  {"new_relevant", out(files::kNewRelevant)},
                  {"classified", out(files::kClassified)}};
      if (!cfg_.popularity.empty()) p.inputs["popularity"] = cfg_.popularity;
      p.params = {{"k", cfg_.k}, {"n", cfg_.n}};
      p.outputs = {files::kNeighbors};
      break;
    case Stage::Verbalize:
      p.inputs = {{"classified", out(files::kClassified)},
                  {"classified_repl", out(files::kClassifiedRepl)},
                  {"neighbors", out(files::kNeighbors)},
                  {"entities", out(files::kEntities)}};
      if (!cfg_.templates.empty()) {
        p.inputs["templates"] = cfg_.templates;
      } else {
        p.inputs["old_triples"] = out(files::kOldTriples);
        if (!cfg_.popularity.empty()) p.inputs["popularity"] = cfg_.popularity;
        p.params = {{"llm_endpoint", cfg_.llm_endpoint},
                    {"llm_model", cfg_.llm_model},
                    {"seed", cfg_.sampling.seed},
                    {"top_entities", cfg_.sampling.top_entities},
                    {"per_relation", cfg_.sampling.per_relation}};
        p.outputs.push_back(files::kTemplates);
      }
      p.outputs.push_back(files::kDataset);
      p.outputs.push_back(files::kDatasetRepl);
      break;
  }
  if (p.params.is_null()) p.params = json::object();
  return p;
}

bool Pipeline::stage_current(Stage s) const {
  if (!fs::exists(manifest_path(s))) return false;
  StageManifest m;
  try {
    std::ifstream in(manifest_path(s));
    m = manifest_from_json(json::parse(in));
  } catch (const std::exception&) {
    return false;
  }
  const Plan p = plan_for(s);
  if (m.params != p.params || m.inputs.size() != p.inputs.size() || m.outputs.size() != p.outputs.size())
    return false;
  for (const auto& [role, path] : p.inputs) {
    auto it = m.inputs.find(role);
    if (it == m.inputs.end() || !fs::exists(path) || sha256_file_hex(path) != it->second) return false;
  }
  for (const auto& name : p.outputs) {
    auto it = m.outputs.find(name);
    if (it == m.outputs.end() || !fs::exists(out(name)) || sha256_file_hex(out(name)) != it->second) return false;
  }
  return true;
}

bool Pipeline::run_stage(Stage s, bool force) {
  const std::string name(to_string(s));
  if (!force && stage_current(s)) {
    log_(name + ": up to date");
    return false;
  }
  const Plan p = plan_for(s);
  StageManifest m;
  m.stage = name;
  m.params = p.params;
  try {
    fs::create_directories(fs::path(cfg_.output_dir) / "manifests");
    for (const auto& [role, path] : p.inputs) {
      if (path.empty() || !fs::exists(path)) throw IoError("missing input " + role + " '" + path + "'");
      m.inputs[role] = sha256_file_hex(path);
    }
    m.counts = execute(s);
    for (const auto& o : p.outputs) m.outputs[o] = sha256_file_hex(out(o));
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  std::ofstream mf(manifest_path(s), std::ios::binary);
  mf << manifest_to_json(m).dump(2) << '\n';
  log_(name + ": " + m.counts.dump());
  return true;
}

void Pipeline::run_all(bool force) {
  cfg_.pipeline.validate();
  // Stages compare input hashes, so an unchanged upstream rerun does not
  // cascade.
  for (Stage s : all_stages()) run_stage(s, force);
}

json Pipeline::execute(Stage s) {
  switch (s) {
    case Stage::Preprocess: return stage_preprocess();
    case Stage::Diff: return stage_diff();
    case Stage::Classify: return stage_classify();
    case Stage::Neighbors: return stage_neighbors();
    case Stage::Verbalize: return stage_verbalize();
  }
  return {};
}

json Pipeline::stage_preprocess() {
  RelationMetaMap meta = cfg_.relation_meta.empty() ? RelationMetaMap{} : load_relation_meta(cfg_.relation_meta);
  std::ofstream rejects(out(files::kRejects), std::ios::binary);
  std::map<std::string, std::size_t> reject_counts;
  std::string side;
  PreprocessOptions opts;
  opts.on_reject = [&](const RejectRecord& r) {
    rejects << json{{"snapshot", side}, {"subject", r.subject}, {"relation", r.relation},
                    {"reason", std::string(to_string(r.reason))}}.dump()
            << '\n';
    ++reject_counts[std::string(to_string(r.reason))];
  };

  EntityInfoMap old_entities, new_entities;
  side = "old";
  PreprocessedSnapshot old_snap = preprocess_file(cfg_.old_snapshot, meta, &old_entities, cfg_.error_policy, opts);
  write_snapshot(old_snap, out(files::kOldTriples), out(files::kOldRelevant));
  const std::size_t old_count = old_snap.size();
  old_snap = {};
  side = "new";
  PreprocessedSnapshot new_snap = preprocess_file(cfg_.new_snapshot, meta, &new_entities, cfg_.error_policy, opts);
  write_snapshot(new_snap, out(files::kNewTriples), out(files::kNewRelevant));

  // Newer labels win.
  for (auto& [id, info] : old_entities) new_entities.try_emplace(id, std::move(info));
  std::vector<std::string> ids;
  for (const auto& [id, info] : new_entities) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  JsonlWriter ew(out(files::kEntities));
  for (const auto& id : ids) {
    const auto& info = new_entities.at(id);
    ew.write({{"id", id}, {"label", info.label}, {"description", info.description}});
  }
  std::vector<std::string> rel_ids;
  for (const auto& [id, m] : meta) rel_ids.push_back(id);
  std::sort(rel_ids.begin(), rel_ids.end());
  JsonlWriter rw(out(files::kRelations));
  for (const auto& id : rel_ids) rw.write(relation_meta_to_json(meta.at(id)));

  return {{"old_triples", old_count}, {"new_triples", new_snap.size()}, {"entities", ids.size()},
          {"relations", rel_ids.size()}, {"rejects", reject_counts}};
}

json Pipeline::stage_diff() {
  auto old_snap = load_snapshot(out(files::kOldTriples), out(files::kOldRelevant));
  auto new_snap = load_snapshot(out(files::kNewTriples), out(files::kNewRelevant));
  JsonlWriter w(out(files::kDiff));
  std::size_t keys[3] = {0, 0, 0};
  for_each_diff_group(old_snap, new_snap, [&](DiffGroup&& g) {
    for (const auto& e : g.entries)
      ++keys[e.membership == Membership::OldOnly ? 0 : e.membership == Membership::Both ? 1 : 2];
    w.write(diff_group_to_json(g));
  });
  return {{"groups", w.count()}, {"old_only", keys[0]}, {"both", keys[1]}, {"new_only", keys[2]}};
}

json Pipeline::stage_classify() {
  std::vector<DiffGroup> groups;
  for_each_jsonl(out(files::kDiff), [&](const json& j) { groups.push_back(diff_group_from_json(j)); });
  const DiffResult diff(std::move(groups));
  const RelationMetaMap meta = load_relations(out(files::kRelations));
  const PopularityTable popularity = load_popularity_or_empty(cfg_.popularity);
  ClassificationResult res = classify_diff(diff, meta, popularity, cfg_.pipeline);

  JsonlWriter w(out(files::kClassified));
  std::map<std::string, std::size_t> scenarios;
  for (const auto& g : res.groups) {
    w.write(classified_group_to_json(g));
    ++scenarios[std::string(to_string(g.scenario))];
  }
  auto repl = extract_replacement_subset(res.groups, cfg_.pipeline);
  JsonlWriter rw(out(files::kClassifiedRepl));
  for (const auto& g : repl) rw.write(classified_group_to_json(g));
  write_lines(out(files::kNewEntities), {res.new_entities.begin(), res.new_entities.end()});

  const auto& st = res.stats;
  return {{"groups_in", st.groups_in},
          {"anomalous_groups", st.anomalous_groups},
          {"deleted_by_anomaly", st.deleted_by_anomaly},
          {"dropped_unknown", st.dropped_unknown},
          {"dropped_no_change", st.dropped_no_change},
          {"kept", st.kept},
          {"replace_subset", repl.size()},
          {"new_entities", res.new_entities.size()},
          {"scenarios", scenarios}};
}

json Pipeline::stage_neighbors() {
  auto old_snap = load_snapshot(out(files::kOldTriples), out(files::kOldRelevant));
  auto new_snap = load_snapshot(out(files::kNewTriples), out(files::kNewRelevant));
  const PopularityTable popularity = load_popularity_or_empty(cfg_.popularity);
  const TfidfIndex index = build_tfidf_index(build_feature_docs(old_snap, new_snap));
  JsonlWriter w(out(files::kNeighbors));
  std::size_t total = 0;
  for_each_jsonl(out(files::kClassified), [&](const json& j) {
    const ClassifiedGroup g = classified_group_from_json(j);
    auto facts = k_nearest_triples(query_triple(g).triple, index, old_snap, cfg_.k, cfg_.n, &popularity);
    json arr = json::array();
    for (const auto& f : facts) arr.push_back(neighbor_fact_to_json(f));
    total += facts.size();
    w.write({{"subject", g.key.subject.id}, {"relation", g.key.relation.id}, {"neighbors", std::move(arr)}});
  });
  return {{"groups", w.count()}, {"neighbor_facts", total}, {"vocabulary", index.vocabulary().size()}};
}

json Pipeline::stage_verbalize() {
  const EntityInfoMap labels = load_entities(out(files::kEntities));
  TemplateStore templates;
  json counts = json::object();
  if (!cfg_.templates.empty()) {
    templates = load_template_file(cfg_.templates);
  } else if (!cfg_.llm_endpoint.empty()) {
    auto old_snap = load_snapshot(out(files::kOldTriples), out(files::kOldRelevant));
    const PopularityTable popularity = load_popularity_or_empty(cfg_.popularity);
    auto samples = sample_triples_for_templates(old_snap, popularity, cfg_.sampling);
    const char* key = std::getenv(cfg_.llm_api_key_env.c_str());
    ChatCompletionsClient client(cfg_.llm_endpoint, cfg_.llm_model, key ? key : "");
    LlmTemplateStats stats;
    templates = generate_templates(samples, labels, client, cfg_.llm_parallelism, &stats);
    write_template_file(out(files::kTemplates), templates);
    counts["llm_requests"] = stats.requests;
    counts["llm_failed"] = stats.failed;
    counts["accepted_sentences"] = stats.accepted_sentences;
  } else {
    throw ConfigError("verbalize needs a template file or an LLM endpoint");
  }

  std::map<std::string, std::vector<NeighborFact>> neighbors;
  for_each_jsonl(out(files::kNeighbors), [&](const json& j) {
    auto& list = neighbors[key_string(j.at("subject").get<std::string>(), j.at("relation").get<std::string>())];
    for (const auto& f : j.at("neighbors")) list.push_back(neighbor_fact_from_json(f));
  });
  auto write_dataset = [&](const std::string& in_name, const std::string& out_name, std::size_t* verbalized) {
    JsonlWriter w(out(out_name));
    for_each_jsonl(out(in_name), [&](const json& j) {
      const ClassifiedGroup g = classified_group_from_json(j);
      auto it = neighbors.find(key_string(g.key.subject.id, g.key.relation.id));
      static const std::vector<NeighborFact> none;
      DatasetRecord r = make_dataset_record(g, it == neighbors.end() ? none : it->second, templates, labels);
      if (verbalized && r.verbalization) ++*verbalized;
      w.write(dataset_record_to_json(r));
    });
    return w.count();
  };
  std::size_t verbalized = 0;
  counts["records"] = write_dataset(files::kClassified, files::kDataset, &verbalized);
  counts["verbalized"] = verbalized;
  counts["repl_records"] = write_dataset(files::kClassifiedRepl, files::kDatasetRepl, nullptr);
  counts["relations_with_templates"] = templates.size();
  return counts;
}

// --- Probe files and scoring -------------------------------------------------

std::vector<DatasetRecord> read_dataset(const std::string& path) {
  std::vector<DatasetRecord> out;
  for_each_jsonl(path, [&](const json& j) {
    if (auto problems = validate_dataset_record(j); !problems.empty()) throw ParseError(problems.front());
    out.push_back(dataset_record_from_json(j));
  });
  return out;
}

std::size_t write_probe_requests(const std::string& dataset_path, ProbeMode mode, const ProbeOptions& opts,
                                 const std::string& out_path) {
  const auto plans = plan_probes(read_dataset(dataset_path), opts);
  JsonlWriter w(out_path);
  for (const auto& r : emit_probe_requests(plans, mode)) w.write(probe_request_to_json(r));
  return w.count();
}

json aggregate_row_to_json(const AggregateRow& row) {
  json metrics = json::object();
  for (const auto& c : report_columns()) {
    auto it = row.metrics.find(c);
    if (it == row.metrics.end()) continue;
    metrics[c] = {{"mean", it->second.mean}, {"half_width", it->second.half_width}, {"n", it->second.n}};
  }
  json j = {{"algorithm", row.algorithm}, {"metrics", std::move(metrics)}};
  j["seconds/update"] = row.seconds_per_update ? json(*row.seconds_per_update) : json(nullptr);
  return j;
}

AggregateRow aggregate_row_from_json(const json& j) {
  AggregateRow row;
  row.algorithm = j.at("algorithm").get<std::string>();
  for (const auto& [name, m] : j.at("metrics").items())
    row.metrics[name] = {m.at("mean").get<double>(), m.at("half_width").get<double>(), m.at("n").get<std::size_t>()};
  if (auto s = j.find("seconds/update"); s != j.end() && !s->is_null()) row.seconds_per_update = s->get<double>();
  return row;
}

json bleedover_matrix_to_json(const BleedoverMatrix& m) {
  json cells = json::array();
  for (const auto& row : m.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
    cells.push_back(std::move(r));
  }
  return {{"algorithm", m.algorithm},
          {"popularity_edges", m.popularity_edges},
          {"similarity_edges", m.similarity_edges},
          {"cells", std::move(cells)}};
}

ScoreOutput score_run(const std::string& dataset_path, const std::string& pre_responses,
                      const std::vector<ScoreInput>& runs, const ProbeOptions& opts, const std::string& out_dir,
                      std::size_t bins, SequenceMode mode) {
  const auto plans = plan_probes(read_dataset(dataset_path), opts);
  const auto pre = join_responses(plans, read_probe_responses(pre_responses));
  fs::create_directories(out_dir);
  ScoreOutput output;
  std::vector<NeighborBleedRecord> neighbor_records;
  for (const auto& run : runs) {
    const auto post = join_responses(plans, read_probe_responses(run.post_responses));
    std::vector<UpdateCaseResult> results;
    JsonlWriter cases((fs::path(out_dir) / ("cases." + run.algorithm + ".jsonl")).string());
    for (const auto& plan : plans) {
      CaseScore cs = score_case(plan, pre, post, mode);
      const auto& r = cs.result;
      cases.write({{"subject", plan.subject},
                   {"relation", plan.relation},
                   {"efficacy_diff", r.efficacy_diff},
                   {"efficacy_success", r.efficacy_success},
                   {"gen_diff", r.gen_diff},
                   {"gen_success", r.gen_success},
                   {"bleedover_random", r.bleedover_random},
                   {"bleedover_knn", r.bleedover_knn},
                   {"fluency", r.fluency}});
      results.push_back(r);
      for (auto& nb : cs.knn_bleedover) {
        nb.algorithm = run.algorithm;
        neighbor_records.push_back(std::move(nb));
      }
    }
    output.rows.push_back(aggregate_results(run.algorithm, results, run.seconds_per_update));
  }
  output.matrices = bleedover_bins(neighbor_records, bins);

  std::ofstream tsv(fs::path(out_dir) / "report.tsv", std::ios::binary);
  tsv << format_report_tsv(output.rows);
  json report = json::array();
  for (const auto& row : output.rows) report.push_back(aggregate_row_to_json(row));
  std::ofstream(fs::path(out_dir) / "report.json", std::ios::binary) << report.dump(2) << '\n';
  json matrices = json::array();
  for (const auto& m : output.matrices) matrices.push_back(bleedover_matrix_to_json(m));
  std::ofstream(fs::path(out_dir) / "bleedover_matrix.json", std::ios::binary) << matrices.dump(2) << '\n';
  return output;
}

}  // namespace factdelta
