#include "factdelta/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace factdelta {

std::string pair_token(const std::string& relation, const std::string& object) {
  return relation + "|" + object;
}

namespace {

bool append_entity_tokens(std::span<const Triple> triples, FeatureDoc& doc) {
  std::vector<std::string> objects, pairs;
  for (const Triple& t : triples) {
    if (const EntityId* o = as_entity(t.object)) {
      objects.push_back(o->id);
      pairs.push_back(pair_token(t.relation.id, o->id));
    }
  }
  if (objects.empty()) return false;
  std::move(objects.begin(), objects.end(), std::back_inserter(doc.tokens));
  std::move(pairs.begin(), pairs.end(), std::back_inserter(doc.tokens));
  return true;
}

}  // namespace

FeatureDoc build_feature_doc(const std::string& entity, const PreprocessedSnapshot& old_snap,
                             const PreprocessedSnapshot& new_snap) {
  auto old_t = old_snap.subject_triples(entity);
  auto new_t = new_snap.subject_triples(entity);
  if (old_t.empty() && new_t.empty() && !old_snap.relevant_entities().contains(entity) &&
      !new_snap.relevant_entities().contains(entity)) {
    throw UnknownEntity(entity);
  }
  FeatureDoc doc{EntityId(entity), {entity}};
  if (!append_entity_tokens(old_t, doc)) append_entity_tokens(new_t, doc);
  return doc;
}

std::vector<FeatureDoc> build_feature_docs(const PreprocessedSnapshot& old_snap,
                                           const PreprocessedSnapshot& new_snap) {
  std::vector<std::string> subjects;
  for (const auto* snap : {&old_snap, &new_snap})
    for (const auto& g : snap->groups())
      if (subjects.empty() || subjects.back() != g.key.subject.id) subjects.push_back(g.key.subject.id);
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  std::vector<FeatureDoc> docs;
  docs.reserve(subjects.size());
  for (const auto& s : subjects) docs.push_back(build_feature_doc(s, old_snap, new_snap));
  return docs;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (b[j].first < a[i].first) {
      ++j;
    } else {
      sum += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return sum;
}

TfidfIndex build_tfidf_index(const std::vector<FeatureDoc>& docs) {
  TfidfIndex idx;
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::vector<std::string> uniq = d.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++df[t];
  }
  const double n_docs = static_cast<double>(docs.size());
  for (const auto& [tok, count] : df) {
    idx.column_[tok] = static_cast<std::uint32_t>(idx.vocab_.size());
    idx.vocab_.push_back(tok);
    idx.idf_.push_back(std::log(n_docs / static_cast<double>(count)));
  }

  std::vector<const FeatureDoc*> order;
  for (const auto& d : docs) order.push_back(&d);
  std::sort(order.begin(), order.end(),
            [](const FeatureDoc* a, const FeatureDoc* b) { return a->entity.id < b->entity.id; });
  idx.postings_.resize(idx.vocab_.size());
  for (const FeatureDoc* d : order) {
    std::map<std::uint32_t, double> tf;
    for (const auto& t : d->tokens) tf[idx.column_.at(t)] += 1.0;
    SparseVector row;
    std::vector<double> squares;
    for (const auto& [col, count] : tf) {
      double w = count * idx.idf_[col];
      if (w == 0) continue;
      row.emplace_back(col, w);
      squares.push_back(w * w);
    }
    // Summed in value order, so documents with the same weights have the
    // same norm whatever their columns, and their ties stay exact.
    std::sort(squares.begin(), squares.end());
    double sq = 0;
    for (double x : squares) sq += x;
    if (sq > 0) {
      const double norm = std::sqrt(sq);
      for (auto& [col, w] : row) w /= norm;
    }
    const auto r = static_cast<std::uint32_t>(idx.entities_.size());
    for (const auto& [col, w] : row) idx.postings_[col].emplace_back(r, w);
    idx.row_[d->entity.id] = r;
    idx.entities_.push_back(d->entity.id);
    idx.rows_.push_back(std::move(row));
  }
  return idx;
}

const SparseVector* TfidfIndex::vector_of(const std::string& entity) const {
  auto it = row_.find(entity);
  return it == row_.end() ? nullptr : &rows_[it->second];
}

std::optional<std::uint32_t> TfidfIndex::column_of(const std::string& token) const {
  auto it = column_.find(token);
  if (it == column_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, double>> TfidfIndex::similar_entities(const std::string& entity) const {
  auto it = row_.find(entity);
  if (it == row_.end()) throw UnknownEntity(entity);
  const std::uint32_t self = it->second;
  // Accumulating in ascending column order reproduces sparse_dot exactly.
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& [col, qw] : rows_[self])
    for (const auto& [r, w] : postings_[col])
      if (r != self) acc[r] += qw * w;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(acc.size());
  for (const auto& [r, sim] : acc)
    if (sim > 0) out.emplace_back(entities_[r], sim);
  return out;
}

std::vector<NeighborFact> k_nearest_triples(const Triple& query, const TfidfIndex& index,
                                            const PreprocessedSnapshot& old_snap, std::size_t k,
                                            std::size_t n, const PopularityTable* popularity) {
  std::vector<NeighborFact> out;
  if (k == 0) return out;
  auto sims = index.similar_entities(query.subject.id);
  auto by_similarity = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (sims.size() > n) {
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(n), sims.end(), by_similarity);
    sims.resize(n);
  } else {
    std::sort(sims.begin(), sims.end(), by_similarity);
  }
  for (const auto& [entity, sim] : sims) {
    auto group = old_snap.find_group(entity, query.relation.id);
    if (group.empty()) continue;
    NeighborFact f{group.front(), std::min(sim, 1.0), popularity ? popularity->get(entity) : 0};
    out.push_back(std::move(f));
    if (out.size() == k) break;
  }
  return out;
}

json neighbor_fact_to_json(const NeighborFact& f) {
  return {{"subject", f.triple.subject.id},
          {"relation", f.triple.relation.id},
          {"object", encode_object(f.triple.object, true)},
          {"interval", encode_interval(f.triple.interval)},
          {"similarity", f.similarity},
          {"popularity", f.subject_popularity}};
}

NeighborFact neighbor_fact_from_json(const json& j) {
  NeighborFact f;
  f.triple.subject = EntityId(j.at("subject").get<std::string>());
  f.triple.relation = RelationId(j.at("relation").get<std::string>());
  f.triple.object = decode_object(j.at("object"));
  if (auto iv = j.find("interval"); iv != j.end()) f.triple.interval = decode_interval(*iv);
  f.similarity = j.at("similarity").get<double>();
  f.subject_popularity = j.at("popularity").get<std::uint64_t>();
  return f;
}

}  // namespace factdelta
