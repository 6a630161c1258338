#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "factdelta/dataset.hpp"
#include "factdelta/metrics.hpp"

namespace factdelta {

struct MissingVerbalization : std::runtime_error {
  explicit MissingVerbalization(const std::string& key)
      : std::runtime_error("record " + key + " has no verbalization") {}
};

struct ResponseIdError : std::runtime_error {
  ResponseIdError(const std::string& what, std::vector<std::string> ids);
  std::vector<std::string> ids;
};
struct UnansweredRequest : ResponseIdError {
  explicit UnansweredRequest(std::vector<std::string> ids) : ResponseIdError("unanswered requests", std::move(ids)) {}
};
struct DuplicateResponse : ResponseIdError {
  explicit DuplicateResponse(std::vector<std::string> ids) : ResponseIdError("duplicate responses", std::move(ids)) {}
};

enum class RequestKind { Score, Generate };

struct ProbeRequest {
  std::string case_id;
  RequestKind kind = RequestKind::Score;
  std::string prompt;
  std::vector<std::string> continuations;
  int max_new_tokens = 100;
};

struct ProbeResponse {
  std::string case_id;
  std::vector<std::vector<double>> logprobs;
  std::optional<std::string> generation;
};

json probe_request_to_json(const ProbeRequest& r);
ProbeRequest probe_request_from_json(const json& j);
json probe_response_to_json(const ProbeResponse& r);
ProbeResponse probe_response_from_json(const json& j);
std::vector<std::string> validate_probe_request(const json& j);
std::vector<std::string> validate_probe_response(const json& j);

enum class ProbeRole { Update, Alt, Knn, Random, Generation };
std::string_view to_string(ProbeRole r);

struct PlannedRequest {
  ProbeRole role = ProbeRole::Update;
  ProbeRequest request;  // unprefixed prompt
  double similarity = 0;
  std::uint64_t popularity = 0;
};

// One ReplaceObject update and everything that must be probed for it.
struct CasePlan {
  std::string subject;
  std::string relation;
  std::string new_object;  // o*
  std::string old_object;  // o
  std::string update_sentence;
  std::vector<PlannedRequest> requests;
};

struct ProbeOptions {
  std::size_t max_alt_clozes = 4;
  std::size_t random_neighbors = 10;
  int max_new_tokens = 100;
  std::uint64_t seed = 0;
  // Records without a verbalization raise MissingVerbalization unless set.
  bool skip_unverbalized = false;
};

// Stable id of a request: hash of the group key, role, unprefixed prompt
// and continuations.
std::string request_id(const std::string& subject, const std::string& relation, const std::string& role,
                       const std::string& prompt, const std::vector<std::string>& continuations);

// ReplaceObject records only. Generalization clozes are the alternative
// clozes, or the update cloze when a relation has a single template.
std::vector<CasePlan> plan_probes(const std::vector<DatasetRecord>& records, const ProbeOptions& opts);

enum class ProbeMode { Pre, Post, PromptBaseline };
ProbeMode parse_probe_mode(std::string_view s);

std::vector<ProbeRequest> emit_probe_requests(const std::vector<CasePlan>& plans, ProbeMode mode);

// Indexes responses by id; every request must be answered exactly once.
std::unordered_map<std::string, ProbeResponse> join_responses(const std::vector<CasePlan>& plans,
                                                              const std::vector<ProbeResponse>& responses);

struct CaseScore {
  UpdateCaseResult result;
  std::vector<NeighborBleedRecord> knn_bleedover;  // algorithm left empty
};

CaseScore score_case(const CasePlan& plan, const std::unordered_map<std::string, ProbeResponse>& pre,
                     const std::unordered_map<std::string, ProbeResponse>& post,
                     SequenceMode mode = SequenceMode::GeometricMean);

std::vector<ProbeRequest> read_probe_requests(const std::string& path);
std::vector<ProbeResponse> read_probe_responses(const std::string& path);

}  // namespace factdelta
