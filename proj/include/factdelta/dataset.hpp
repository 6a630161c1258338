#pragma once

#include <optional>
#include <string>
#include <vector>

#include "factdelta/classify.hpp"
#include "factdelta/neighbors.hpp"
#include "factdelta/verbalize.hpp"

namespace factdelta {

struct DatasetTriple {
  ObjectValue object;
  std::string object_label;
  TimeInterval interval;
  Label label = Label::Unknown;
};

struct DatasetNeighbor {
  std::string subject;
  std::string relation;
  ObjectValue object;
  std::string object_label;
  std::string cloze;  // empty when the relation has no template
  double similarity = 0;
  std::uint64_t popularity = 0;
};

struct DatasetRecord {
  std::string subject_id;
  std::string subject_label;
  std::uint64_t popularity = 0;
  bool is_new = false;
  std::string relation_id;
  std::string relation_label;
  Scenario scenario = Scenario::Other;
  std::vector<DatasetTriple> triples;
  std::optional<VerbalizationSet> verbalization;
  std::vector<DatasetNeighbor> neighbors;
};

// The triple that is verbalized and used as the neighbor query: the first
// new triple of the group, else its first triple.
const LabeledTriple& query_triple(const ClassifiedGroup& g);

DatasetRecord make_dataset_record(const ClassifiedGroup& g, const std::vector<NeighborFact>& neighbors,
                                  const TemplateStore& templates, const EntityInfoMap& labels);

json dataset_record_to_json(const DatasetRecord& r);
DatasetRecord dataset_record_from_json(const json& j);

// Structural check of one dataset line. Returns the problems found.
std::vector<std::string> validate_dataset_record(const json& j);

}  // namespace factdelta
