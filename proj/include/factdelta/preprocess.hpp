#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "factdelta/ingest.hpp"
#include "factdelta/kb_model.hpp"

namespace factdelta {

// Rejection reasons, listed in the order filter_statement tests them.
enum class RejectReason {
  RestrictiveQualifier,
  Deprecated,
  MetaRelation,
  UrlOrExternalId,
  GlobeCoordinate,
  NoConcreteValue,
  IrrelevantSubject,
  IrrelevantObject,
  MalformedQualifier,
};
std::string_view to_string(RejectReason r);

using FilterOutcome = std::variant<Triple, RejectReason>;

struct RejectRecord {
  std::string subject;
  std::string relation;
  RejectReason reason;
};

using RelevanceSet = std::unordered_set<std::string>;

// Entity metadata gathered while reading a dump; used for rendering only.
struct EntityInfo {
  std::string label;
  std::string description;
};
using EntityInfoMap = std::unordered_map<std::string, EntityInfo>;

bool is_relevant_entity(const EntityDoc& doc);

FilterOutcome filter_statement(const EntityId& subject, const Statement& stmt,
                               const RelationMetaMap& meta);

// Applies the outdated-value rule to one temporal-functional (s, r)-group.
std::vector<Triple> dedup_temporal_functional(std::vector<Triple> group);

// Triples sorted by (subject, relation, object key, interval). A (s, r, o)
// key may carry several statements that differ only in their qualifiers.
class PreprocessedSnapshot {
 public:
  struct Group {
    GroupKey key;
    std::size_t first = 0;
    std::size_t count = 0;
  };

  PreprocessedSnapshot() = default;
  // Sorts and indexes; `relevant` is kept as-is.
  PreprocessedSnapshot(std::vector<Triple> triples, RelevanceSet relevant);

  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::span<const Triple> group(const Group& g) const;
  std::span<const Triple> find_group(const std::string& subject, const std::string& relation) const;
  // All triples of one subject (contiguous thanks to the sort order).
  std::span<const Triple> subject_triples(const std::string& subject) const;
  const RelevanceSet& relevant_entities() const { return relevant_; }
  bool empty() const { return triples_.empty(); }
  std::size_t size() const { return triples_.size(); }

 private:
  std::vector<Triple> triples_;
  std::vector<Group> groups_;
  RelevanceSet relevant_;
};

bool triple_less(const Triple& a, const Triple& b);
bool triple_equal(const Triple& a, const Triple& b);

struct PreprocessOptions {
  std::function<void(const RejectRecord&)> on_reject;
};

// Filters one entity document; triples of temporal-functional relations are
// deduplicated per group.
std::vector<Triple> preprocess_entity(const EntityDoc& doc, const RelationMetaMap& meta,
                                      const RelevanceSet& relevant, const PreprocessOptions& opts = {});

// Second pass over a snapshot whose relevance set was computed beforehand.
PreprocessedSnapshot preprocess_snapshot(SnapshotReader& reader, const RelationMetaMap& meta,
                                         RelevanceSet relevant, const PreprocessOptions& opts = {});

// First pass over a dump: relevant items, property metadata, labels.
struct SnapshotScan {
  RelevanceSet relevant;
  RelationMetaMap relations;
  EntityInfoMap entities;
  std::vector<SchemaError> errors;
};
SnapshotScan scan_snapshot(const std::string& path, ErrorPolicy policy, bool keep_entity_info = true);

// Both passes over a file. Relations found in the dump are merged into
// `meta` (entries already present win).
PreprocessedSnapshot preprocess_file(const std::string& path, RelationMetaMap& meta,
                                     EntityInfoMap* entities, ErrorPolicy policy,
                                     const PreprocessOptions& opts = {});

// Rebuilds entity documents whose statements reproduce the given triples.
std::vector<EntityDoc> to_entity_docs(const PreprocessedSnapshot& snap);

}  // namespace factdelta
