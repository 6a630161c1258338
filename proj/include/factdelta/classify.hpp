#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "factdelta/diff.hpp"
#include "factdelta/ingest.hpp"

namespace factdelta {

struct PipelineConfig {
  Date t_old = Date::from_ymd(2021, 1, 4);
  Date t_new = Date::from_ymd(2023, 2, 27);
  // inception, date of birth, start time, time of discovery or invention,
  // date of official opening, announcement date, point in time, publication date
  std::set<std::string> creation_relations{"P571", "P569", "P580", "P575",
                                           "P1619", "P6949", "P585", "P577"};
  // date of death, date of burial or cremation
  std::set<std::string> death_relations{"P570", "P4602"};
  std::string population_relation = "P1082";
  unsigned population_undersample_factor = 14;
  std::uint64_t random_seed = 0;

  // Throws std::invalid_argument unless t_old < t_new and the factor is > 0.
  void validate() const;
};

using NewEntitySet = std::unordered_set<std::string>;

// e is new iff it occurs only in F+ and some F+ triple (e, r, d) has r among
// the creation relations and a date d > t_old.
NewEntitySet detect_new_entities(const DiffResult& diff, const PipelineConfig& cfg);

// Features of one triple instance seen by the rules.
struct TripleContext {
  Timestamp t_start = Timestamp::neg_inf();
  Timestamp t_end = Timestamp::pos_inf();
  std::optional<Date> object_date;  // set when the object is a time value
  Membership membership = Membership::Both;
  GroupStats stats;
  bool subject_in_new_entities = false;
  bool subject_in_old_only = false;  // subject occurs in some F- triple
  bool relation_is_death = false;
  bool relation_is_temporal_functional = false;
  bool object_in_new_entities = false;
};

struct ClassificationRule {
  int row;  // 1-based position in the printed rule list
  std::string_view condition;
  Label label;
  bool (*matches)(const TripleContext&, Timestamp t_old, Timestamp t_new);
};

// The rule list in its printed order.
std::span<const ClassificationRule> classification_rules();

// First matching rule's label, Unknown when none fires.
Label classify_triple(const TripleContext& ctx, const PipelineConfig& cfg);
// Row of the first matching rule, or nullopt.
std::optional<int> first_matching_rule(const TripleContext& ctx, const PipelineConfig& cfg,
                                       std::span<const ClassificationRule> rules = classification_rules());

// Rows that can never be the first match, found by exhaustive enumeration of
// every ordering of the time bounds against t_old and t_new together with
// every flag and small count combination.
std::vector<int> unreachable_rules(std::span<const ClassificationRule> rules = classification_rules());

struct LabeledTriple {
  Triple triple;
  Membership membership = Membership::Both;
  Label label = Label::Unknown;
};

struct LabeledGroup {
  GroupKey key;
  GroupStats stats;
  std::vector<LabeledTriple> triples;  // ordered by object key, then interval
};

LabeledGroup label_group(const DiffGroup& group, const DiffResult& diff, const NewEntitySet& new_entities,
                         const RelationMetaMap& meta, const PipelineConfig& cfg);

LabeledGroup post_pass_obsolete(LabeledGroup group, const RelationMetaMap& meta);

// nullopt means the whole group is deleted.
std::optional<LabeledGroup> resolve_anomalies(LabeledGroup group);

struct ClassifiedGroup {
  GroupKey key;
  std::vector<LabeledTriple> triples;
  Scenario scenario = Scenario::Other;
  std::uint64_t subject_popularity = 0;
  bool subject_is_new = false;
};

// Drops groups with an unknown triple, removes ignore triples, drops groups
// with no new or obsolete triple left.
std::vector<LabeledGroup> filter_groups(std::vector<LabeledGroup> groups);

Scenario type_scenario(const LabeledGroup& group, const NewEntitySet& new_entities);

// ReplaceObject groups only; population groups are undersampled by keeping
// the ceil(m / factor) with the smallest seeded hash of their group key.
// Output is sorted by descending popularity, then subject and relation id.
std::vector<ClassifiedGroup> extract_replacement_subset(std::vector<ClassifiedGroup> groups,
                                                        const PipelineConfig& cfg);

void sort_by_popularity(std::vector<ClassifiedGroup>& groups);

struct ClassificationStats {
  std::size_t groups_in = 0;
  std::size_t anomalous_groups = 0;
  std::size_t deleted_by_anomaly = 0;
  std::size_t dropped_unknown = 0;
  std::size_t dropped_no_change = 0;
  std::size_t kept = 0;
};

struct ClassificationResult {
  NewEntitySet new_entities;
  std::vector<ClassifiedGroup> groups;  // sorted by popularity
  ClassificationStats stats;
};

ClassificationResult classify_diff(const DiffResult& diff, const RelationMetaMap& meta,
                                   const PopularityTable& popularity, const PipelineConfig& cfg);

json classified_group_to_json(const ClassifiedGroup& g);
ClassifiedGroup classified_group_from_json(const json& j);

}  // namespace factdelta
