#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "factdelta/ingest.hpp"
#include "factdelta/preprocess.hpp"

namespace factdelta {

class MissingLabel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSubjectSlot = "SUBJ";
inline constexpr std::string_view kObjectSlot = "OBJ";

// A relation template with one SUBJ slot and a final OBJ slot.
struct Template {
  RelationId relation;
  std::string text;
  std::uint64_t frequency = 0;
};

bool is_valid_template(std::string_view text);
// Collapses whitespace runs and strips trailing whitespace and terminal
// punctuation. Case is preserved.
std::string normalize_template(std::string_view text);

struct VerbalizationSet {
  std::string update_sentence;
  std::string primary_cloze;
  std::vector<std::string> alt_clozes;  // at most 4
};

// Template sampling: top `top_entities` entities by popularity, shuffled
// with `seed`; the first triple of each of their groups, at most
// `per_relation` per relation.
struct SamplingOptions {
  std::size_t top_entities = 100000;
  std::size_t per_relation = 100;
  std::uint64_t seed = 0;
};
std::vector<Triple> sample_triples_for_templates(const PreprocessedSnapshot& old_snap,
                                                 const PopularityTable& popularity,
                                                 const SamplingOptions& opts = {});

// --- LLM verbalization -----------------------------------------------------

struct VerbalizationPrompt {
  std::string subject, relation, object;
  std::string subject_def, relation_def, object_def;
  std::string example_subject, example_object;
};

std::string verbalization_system_prompt();
std::string verbalization_user_prompt(const VerbalizationPrompt& p);

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 800;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Returns the assistant message text. Throws EndpointError.
  virtual std::string complete(const std::string& system, const std::string& user,
                               const ChatParams& params) = 0;
};

// Splits a numbered or line-separated list; strips numbering, bullets and
// surrounding quotes. Throws ParseError when no item is found.
std::vector<std::string> parse_verbalization_list(const std::string& response);

// At most 10 sentences, fewer when the response is short.
std::vector<std::string> request_verbalizations(const VerbalizationPrompt& prompt, LlmClient& client);

// --- Templates -------------------------------------------------------------

// Accepts when the sentence, minus terminal punctuation, ends with the
// object label and contains the subject label before it.
std::optional<std::string> extract_template(std::string_view sentence, std::string_view subject_label,
                                            std::string_view object_label);

// Merges candidates by normalized text, keeps the 5 most frequent (ties by
// text), most frequent first.
std::vector<Template> select_templates(const RelationId& relation, const std::vector<Template>& candidates,
                                       std::size_t limit = 5);

// Update sentence when `object_label` is given; otherwise the cloze, cut at
// the object slot with one trailing space removed.
std::string render(const Template& tpl, std::string_view subject_label,
                   std::optional<std::string_view> object_label = std::nullopt);

using TemplateStore = std::map<std::string, std::vector<Template>>;  // relation -> selected

// Template file: JSONL {"relation","template","frequency"}; candidates are
// merged and selected per relation.
TemplateStore load_template_file(const std::string& path);
void write_template_file(const std::string& path, const TemplateStore& store);

// Object rendering: entity label (id when unlabeled), decimal with unit
// label, dates as "D Month YYYY" (or coarser by precision), raw text.
std::string render_object(const ObjectValue& v, const EntityInfoMap& labels);
std::string label_of(const std::string& id, const EntityInfoMap& labels);

// Primary template for the update sentence and cloze, following templates
// (up to 4) for the alternative clozes.
std::optional<VerbalizationSet> verbalize(const std::vector<Template>& templates,
                                          std::string_view subject_label, std::string_view object_label);

// Builds templates by querying the client for each sampled triple with
// bounded parallelism. Failed requests are counted and skipped.
struct LlmTemplateStats {
  std::size_t requests = 0;
  std::size_t failed = 0;
  std::size_t accepted_sentences = 0;
};
TemplateStore generate_templates(const std::vector<Triple>& samples, const EntityInfoMap& labels,
                                 LlmClient& client, std::size_t parallelism = 4,
                                 LlmTemplateStats* stats = nullptr);

}  // namespace factdelta
