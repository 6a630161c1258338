#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "factdelta/ingest.hpp"
#include "factdelta/preprocess.hpp"

namespace factdelta {

class UnknownEntity : public std::runtime_error {
 public:
  explicit UnknownEntity(const std::string& id) : std::runtime_error("unknown entity '" + id + "'") {}
};

// Token list I(s) = [s] ++ [o ...] ++ [(r, o) ...] over the entity's
// entity-valued triples. Pair tokens are written "r|o".
struct FeatureDoc {
  EntityId entity;
  std::vector<std::string> tokens;
};

std::string pair_token(const std::string& relation, const std::string& object);

// Uses the old snapshot unless the entity has no entity-valued triple there.
FeatureDoc build_feature_doc(const std::string& entity, const PreprocessedSnapshot& old_snap,
                             const PreprocessedSnapshot& new_snap);

// Documents for every subject of either snapshot, sorted by entity id.
std::vector<FeatureDoc> build_feature_docs(const PreprocessedSnapshot& old_snap,
                                           const PreprocessedSnapshot& new_snap);

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by column

double sparse_dot(const SparseVector& a, const SparseVector& b);

// Raw term frequency times unsmoothed ln(N / df), rows L2-normalised.
class TfidfIndex {
 public:
  const std::vector<std::string>& vocabulary() const { return vocab_; }  // sorted
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<std::string>& entities() const { return entities_; }  // sorted
  const SparseVector* vector_of(const std::string& entity) const;
  std::optional<std::uint32_t> column_of(const std::string& token) const;

  // Cosine similarity of every entity sharing a weighted token with
  // `entity`, excluding the entity itself.
  std::vector<std::pair<std::string, double>> similar_entities(const std::string& entity) const;

  friend TfidfIndex build_tfidf_index(const std::vector<FeatureDoc>& docs);

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> column_;
  std::vector<double> idf_;
  std::vector<std::string> entities_;
  std::unordered_map<std::string, std::uint32_t> row_;
  std::vector<SparseVector> rows_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> postings_;  // column -> (row, weight)
};

TfidfIndex build_tfidf_index(const std::vector<FeatureDoc>& docs);

struct NeighborFact {
  Triple triple;
  double similarity = 0;
  std::uint64_t subject_popularity = 0;
};

// Walks the n entities most similar to the query subject (positive cosine,
// ties by entity id) and takes the first old-snapshot triple of each that
// shares the query relation, until k are found.
std::vector<NeighborFact> k_nearest_triples(const Triple& query, const TfidfIndex& index,
                                            const PreprocessedSnapshot& old_snap, std::size_t k,
                                            std::size_t n, const PopularityTable* popularity = nullptr);

json neighbor_fact_to_json(const NeighborFact& f);
NeighborFact neighbor_fact_from_json(const json& j);

}  // namespace factdelta
