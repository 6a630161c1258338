#include "factdelta/probe.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "factdelta/hashing.hpp"

namespace factdelta {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

ResponseIdError::ResponseIdError(const std::string& what, std::vector<std::string> ids_)
    : std::runtime_error(what + ": " + join_ids(ids_)), ids(std::move(ids_)) {}

// --- Wire formats ------------------------------------------------------------

json probe_request_to_json(const ProbeRequest& r) {
  return {{"case_id", r.case_id},
          {"kind", r.kind == RequestKind::Score ? "score" : "generate"},
          {"prompt", r.prompt},
          {"continuations", r.continuations},
          {"max_new_tokens", r.max_new_tokens}};
}

ProbeRequest probe_request_from_json(const json& j) {
  if (auto problems = validate_probe_request(j); !problems.empty()) throw ParseError(problems.front());
  ProbeRequest r;
  r.case_id = j.at("case_id").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "score" ? RequestKind::Score : RequestKind::Generate;
  r.prompt = j.at("prompt").get<std::string>();
  r.continuations = j.at("continuations").get<std::vector<std::string>>();
  r.max_new_tokens = j.at("max_new_tokens").get<int>();
  return r;
}

json probe_response_to_json(const ProbeResponse& r) {
  json j = {{"case_id", r.case_id}, {"logprobs", r.logprobs}};
  if (r.generation) j["generation"] = *r.generation;
  return j;
}

ProbeResponse probe_response_from_json(const json& j) {
  if (auto problems = validate_probe_response(j); !problems.empty()) throw ParseError(problems.front());
  ProbeResponse r;
  r.case_id = j.at("case_id").get<std::string>();
  r.logprobs = j.at("logprobs").get<std::vector<std::vector<double>>>();
  if (auto g = j.find("generation"); g != j.end() && !g->is_null()) r.generation = g->get<std::string>();
  return r;
}

std::vector<std::string> validate_probe_request(const json& j) {
  std::vector<std::string> p;
  if (!j.is_object()) return {"request is not an object"};
  if (!j.contains("case_id") || !j["case_id"].is_string()) p.push_back("case_id: missing or not a string");
  if (!j.contains("kind") || !j["kind"].is_string() || (j["kind"] != "score" && j["kind"] != "generate"))
    p.push_back("kind: must be \"score\" or \"generate\"");
  if (!j.contains("prompt") || !j["prompt"].is_string()) p.push_back("prompt: missing or not a string");
  if (!j.contains("continuations") || !j["continuations"].is_array()) {
    p.push_back("continuations: missing or not an array");
  } else {
    for (const auto& c : j["continuations"])
      if (!c.is_string()) p.push_back("continuations[]: not a string");
  }
  if (!j.contains("max_new_tokens") || !j["max_new_tokens"].is_number_integer() || j["max_new_tokens"] < 0)
    p.push_back("max_new_tokens: missing or negative");
  return p;
}

std::vector<std::string> validate_probe_response(const json& j) {
  std::vector<std::string> p;
  if (!j.is_object()) return {"response is not an object"};
  if (!j.contains("case_id") || !j["case_id"].is_string()) p.push_back("case_id: missing or not a string");
  if (!j.contains("logprobs") || !j["logprobs"].is_array()) {
    p.push_back("logprobs: missing or not an array");
  } else {
    for (const auto& row : j["logprobs"]) {
      if (!row.is_array()) {
        p.push_back("logprobs[]: not an array");
        continue;
      }
      for (const auto& v : row)
        if (!v.is_number()) p.push_back("logprobs[][]: not a number");
    }
  }
  if (auto g = j.find("generation"); g != j.end() && !g->is_string() && !g->is_null())
    p.push_back("generation: not a string");
  return p;
}

// --- Planning ----------------------------------------------------------------

std::string_view to_string(ProbeRole r) {
  switch (r) {
    case ProbeRole::Update: return "update";
    case ProbeRole::Alt: return "alt";
    case ProbeRole::Knn: return "knn";
    case ProbeRole::Random: return "random";
    case ProbeRole::Generation: return "generation";
  }
  return "?";
}

std::string request_id(const std::string& subject, const std::string& relation, const std::string& role,
                       const std::string& prompt, const std::vector<std::string>& continuations) {
  json key = json::array({subject, relation, role, prompt, continuations});
  return sha256_hex(key.dump()).substr(0, 24);
}

namespace {

const DatasetTriple* first_with_label(const DatasetRecord& r, Label l) {
  for (const auto& t : r.triples)
    if (t.label == l) return &t;
  return nullptr;
}

}  // namespace

std::vector<CasePlan> plan_probes(const std::vector<DatasetRecord>& records, const ProbeOptions& opts) {
  std::vector<const DatasetRecord*> cases;
  for (const auto& r : records) {
    if (r.scenario != Scenario::ReplaceObject) continue;
    if (!r.verbalization) {
      if (opts.skip_unverbalized) continue;
      throw MissingVerbalization(r.subject_id + "/" + r.relation_id);
    }
    if (!first_with_label(r, Label::New) || !first_with_label(r, Label::Obsolete)) continue;
    cases.push_back(&r);
  }

  // Union of clozed neighbor facts over all cases, deduplicated.
  struct Pooled {
    const DatasetNeighbor* n;
  };
  std::vector<Pooled> pool;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto* r : cases)
    for (const auto& n : r->neighbors)
      if (!n.cloze.empty() && !n.object_label.empty() &&
          seen.emplace(n.subject, n.relation, canonical_key(n.object)).second)
        pool.push_back({&n});

  std::vector<CasePlan> plans;
  for (const auto* r : cases) {
    CasePlan plan;
    plan.subject = r->subject_id;
    plan.relation = r->relation_id;
    plan.new_object = first_with_label(*r, Label::New)->object_label;
    plan.old_object = first_with_label(*r, Label::Obsolete)->object_label;
    plan.update_sentence = r->verbalization->update_sentence;

    auto add = [&](ProbeRole role, std::size_t index, RequestKind kind, const std::string& prompt,
                   std::vector<std::string> continuations, double sim = 0, std::uint64_t pop = 0) {
      PlannedRequest pr;
      pr.role = role;
      pr.request.kind = kind;
      pr.request.prompt = prompt;
      pr.request.continuations = std::move(continuations);
      pr.request.max_new_tokens = kind == RequestKind::Generate ? opts.max_new_tokens : 0;
      pr.request.case_id = request_id(plan.subject, plan.relation,
                                      std::string(to_string(role)) + ":" + std::to_string(index), prompt,
                                      pr.request.continuations);
      pr.similarity = sim;
      pr.popularity = pop;
      plan.requests.push_back(std::move(pr));
    };
    const std::vector<std::string> candidates{plan.new_object, plan.old_object};

    add(ProbeRole::Update, 0, RequestKind::Score, r->verbalization->primary_cloze, candidates);
    std::vector<std::string> gen_clozes(r->verbalization->alt_clozes.begin(),
                                        r->verbalization->alt_clozes.begin() +
                                            static_cast<std::ptrdiff_t>(std::min(
                                                opts.max_alt_clozes, r->verbalization->alt_clozes.size())));
    if (gen_clozes.empty()) gen_clozes.push_back(r->verbalization->primary_cloze);
    for (std::size_t i = 0; i < gen_clozes.size(); ++i)
      add(ProbeRole::Alt, i, RequestKind::Score, gen_clozes[i], candidates);

    std::size_t knn = 0;
    for (const auto& n : r->neighbors)
      if (!n.cloze.empty() && !n.object_label.empty())
        add(ProbeRole::Knn, knn++, RequestKind::Score, n.cloze, {n.object_label}, n.similarity, n.popularity);

    std::vector<bool> excluded(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      excluded[i] = pool[i].n->subject == plan.subject && pool[i].n->relation == plan.relation;
    const auto picks = sample_random_indices(pool.size(), opts.random_neighbors,
                                             seeded_hash(opts.seed, plan.subject + "\t" + plan.relation), excluded);
    for (std::size_t i = 0; i < picks.size(); ++i) {
      const auto* n = pool[picks[i]].n;
      add(ProbeRole::Random, i, RequestKind::Score, n->cloze, {n->object_label}, n->similarity, n->popularity);
    }

    for (std::size_t i = 0; i < gen_clozes.size(); ++i)
      add(ProbeRole::Generation, i, RequestKind::Generate, gen_clozes[i], {});
    plans.push_back(std::move(plan));
  }
  return plans;
}

ProbeMode parse_probe_mode(std::string_view s) {
  if (s == "pre") return ProbeMode::Pre;
  if (s == "post") return ProbeMode::Post;
  if (s == "prompt-baseline") return ProbeMode::PromptBaseline;
  throw std::invalid_argument("unknown probe mode '" + std::string(s) + "'");
}

std::vector<ProbeRequest> emit_probe_requests(const std::vector<CasePlan>& plans, ProbeMode mode) {
  std::vector<ProbeRequest> out;
  for (const auto& plan : plans) {
    for (const auto& pr : plan.requests) {
      ProbeRequest r = pr.request;
      if (mode == ProbeMode::PromptBaseline) r.prompt = plan.update_sentence + ". " + r.prompt;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::unordered_map<std::string, ProbeResponse> join_responses(const std::vector<CasePlan>& plans,
                                                              const std::vector<ProbeResponse>& responses) {
  std::unordered_map<std::string, ProbeResponse> by_id;
  std::vector<std::string> duplicates;
  for (const auto& r : responses)
    if (!by_id.emplace(r.case_id, r).second) duplicates.push_back(r.case_id);
  if (!duplicates.empty()) {
    std::sort(duplicates.begin(), duplicates.end());
    duplicates.erase(std::unique(duplicates.begin(), duplicates.end()), duplicates.end());
    throw DuplicateResponse(std::move(duplicates));
  }
  std::vector<std::string> missing;
  for (const auto& plan : plans)
    for (const auto& pr : plan.requests)
      if (!by_id.contains(pr.request.case_id)) missing.push_back(pr.request.case_id);
  if (!missing.empty()) throw UnansweredRequest(std::move(missing));
  return by_id;
}

namespace {

const ProbeResponse& response_for(const std::unordered_map<std::string, ProbeResponse>& idx,
                                  const PlannedRequest& pr) {
  auto it = idx.find(pr.request.case_id);
  if (it == idx.end()) throw UnansweredRequest({pr.request.case_id});
  if (pr.request.kind == RequestKind::Score && it->second.logprobs.size() != pr.request.continuations.size())
    throw MetricsError("response " + pr.request.case_id + " has " + std::to_string(it->second.logprobs.size()) +
                       " logprob lists for " + std::to_string(pr.request.continuations.size()) + " continuations");
  return it->second;
}

CandidateProbs candidate_probs(const PlannedRequest& pr, const ProbeResponse& resp, SequenceMode mode) {
  CandidateProbs out;
  for (std::size_t i = 0; i < pr.request.continuations.size(); ++i)
    out.emplace(pr.request.continuations[i], sequence_probability_from_logprobs(resp.logprobs[i], mode));
  return out;
}

}  // namespace

CaseScore score_case(const CasePlan& plan, const std::unordered_map<std::string, ProbeResponse>& pre,
                     const std::unordered_map<std::string, ProbeResponse>& post, SequenceMode mode) {
  CaseScore score;
  std::vector<DiffSuccess> gen;
  std::vector<NeighborProbs> knn, random;
  std::vector<std::string> generations;
  for (const auto& pr : plan.requests) {
    switch (pr.role) {
      case ProbeRole::Update: {
        auto e = efficacy(candidate_probs(pr, response_for(post, pr), mode), plan.new_object, plan.old_object);
        score.result.efficacy_diff = e.diff;
        score.result.efficacy_success = e.success;
        break;
      }
      case ProbeRole::Alt:
        gen.push_back(efficacy(candidate_probs(pr, response_for(post, pr), mode), plan.new_object, plan.old_object));
        break;
      case ProbeRole::Knn:
      case ProbeRole::Random: {
        const std::string& o = pr.request.continuations.front();
        NeighborProbs p{probability_of(candidate_probs(pr, response_for(pre, pr), mode), o),
                        probability_of(candidate_probs(pr, response_for(post, pr), mode), o)};
        if (pr.role == ProbeRole::Knn) {
          knn.push_back(p);
          score.knn_bleedover.push_back({"", neighbor_bleedover(p), static_cast<double>(pr.popularity), pr.similarity});
        } else {
          random.push_back(p);
        }
        break;
      }
      case ProbeRole::Generation:
        generations.push_back(response_for(post, pr).generation.value_or(""));
        break;
    }
  }
  const auto g = generalization(gen);
  score.result.gen_diff = g.diff;
  score.result.gen_success = g.success;
  // A case without neighbors has nothing to bleed into.
  score.result.bleedover_knn = knn.empty() ? 0.0 : bleedover(knn);
  score.result.bleedover_random = random.empty() ? 0.0 : bleedover(random);
  score.result.fluency = fluency(generations);
  return score;
}

namespace {

template <class T, class F>
std::vector<T> read_jsonl(const std::string& path, F decode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<T> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(decode(json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<ProbeRequest> read_probe_requests(const std::string& path) {
  return read_jsonl<ProbeRequest>(path, probe_request_from_json);
}

std::vector<ProbeResponse> read_probe_responses(const std::string& path) {
  return read_jsonl<ProbeResponse>(path, probe_response_from_json);
}

}  // namespace factdelta
