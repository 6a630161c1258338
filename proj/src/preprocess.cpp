#include "factdelta/preprocess.hpp"

#include <algorithm>

namespace factdelta {

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::RestrictiveQualifier: return "RestrictiveQualifier";
    case RejectReason::Deprecated: return "Deprecated";
    case RejectReason::MetaRelation: return "MetaRelation";
    case RejectReason::UrlOrExternalId: return "UrlOrExternalId";
    case RejectReason::GlobeCoordinate: return "GlobeCoordinate";
    case RejectReason::NoConcreteValue: return "NoConcreteValue";
    case RejectReason::IrrelevantSubject: return "IrrelevantSubject";
    case RejectReason::IrrelevantObject: return "IrrelevantObject";
    case RejectReason::MalformedQualifier: return "MalformedQualifier";
  }
  return "Unknown";
}

bool is_relevant_entity(const EntityDoc& doc) {
  if (doc.kind != EntityKind::Item || !doc.sitelink.exists) return false;
  return doc.sitelink.page_kind == PageKind::Article ||
         doc.sitelink.page_kind == PageKind::ArticleSection;
}

namespace {

const RelationMeta* find_meta(const RelationMetaMap& meta, const std::string& id) {
  auto it = meta.find(id);
  return it == meta.end() ? nullptr : &it->second;
}

}  // namespace

FilterOutcome filter_statement(const EntityId& subject, const Statement& stmt,
                               const RelationMetaMap& meta) {
  for (const auto& [prop, values] : stmt.qualifiers) {
    if (is_temporal_qualifier(prop)) continue;
    const RelationMeta* m = find_meta(meta, prop);
    if (m && m->is_restrictive_qualifier) return RejectReason::RestrictiveQualifier;
  }
  if (stmt.rank == Rank::Deprecated) return RejectReason::Deprecated;
  if (const RelationMeta* m = find_meta(meta, stmt.relation.id); m && m->is_meta)
    return RejectReason::MetaRelation;
  if (std::holds_alternative<UrlValue>(stmt.object) ||
      std::holds_alternative<ExternalIdValue>(stmt.object))
    return RejectReason::UrlOrExternalId;
  if (std::holds_alternative<GlobeCoordinateValue>(stmt.object)) return RejectReason::GlobeCoordinate;
  if (std::holds_alternative<SomeValue>(stmt.object) || std::holds_alternative<NoValue>(stmt.object))
    return RejectReason::NoConcreteValue;

  Triple t;
  t.subject = subject;
  t.relation = stmt.relation;
  t.object = stmt.object;
  t.rank = stmt.rank;
  try {
    t.interval = interval_from_qualifiers(stmt.qualifiers);
  } catch (const ParseError&) {
    return RejectReason::MalformedQualifier;
  }
  return t;
}

bool triple_less(const Triple& a, const Triple& b) {
  if (auto c = a.subject.id <=> b.subject.id; c != 0) return c < 0;
  if (auto c = a.relation.id <=> b.relation.id; c != 0) return c < 0;
  if (a.object != b.object) return canonical_key(a.object) < canonical_key(b.object);
  if (auto c = a.interval <=> b.interval; c != 0) return c < 0;
  return a.rank < b.rank;
}

bool triple_equal(const Triple& a, const Triple& b) {
  return a.subject.id == b.subject.id && a.relation.id == b.relation.id && a.object == b.object &&
         a.interval == b.interval && a.rank == b.rank;
}

std::vector<Triple> dedup_temporal_functional(std::vector<Triple> group) {
  if (group.size() <= 1) return group;
  bool all_dated = std::all_of(group.begin(), group.end(),
                               [](const Triple& t) { return t.interval.from_point_in_time; });
  if (all_dated) {
    // Latest point in time; ties go to the smallest object key.
    auto best = group.begin();
    std::string best_key = canonical_key(best->object);
    for (auto it = std::next(group.begin()); it != group.end(); ++it) {
      if (it->interval.start > best->interval.start) {
        best = it;
        best_key = canonical_key(it->object);
      } else if (it->interval.start == best->interval.start) {
        std::string k = canonical_key(it->object);
        if (k < best_key) {
          best = it;
          best_key = std::move(k);
        }
      }
    }
    return {*best};
  }
  std::vector<Triple> preferred;
  for (const auto& t : group)
    if (t.rank == Rank::Preferred) preferred.push_back(t);
  // The preferred subset may itself be fully dated; reapplying the rule keeps
  // preprocessing idempotent.
  if (!preferred.empty() && preferred.size() < group.size()) return dedup_temporal_functional(std::move(preferred));
  return group;
}

// --- PreprocessedSnapshot --------------------------------------------------

PreprocessedSnapshot::PreprocessedSnapshot(std::vector<Triple> triples, RelevanceSet relevant)
    : triples_(std::move(triples)), relevant_(std::move(relevant)) {
  std::sort(triples_.begin(), triples_.end(), triple_less);
  triples_.erase(std::unique(triples_.begin(), triples_.end(), triple_equal), triples_.end());
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    const Triple& t = triples_[i];
    if (groups_.empty() || groups_.back().key.subject.id != t.subject.id ||
        groups_.back().key.relation.id != t.relation.id) {
      groups_.push_back(Group{GroupKey{t.subject, t.relation}, i, 0});
    }
    ++groups_.back().count;
  }
}

std::span<const Triple> PreprocessedSnapshot::group(const Group& g) const {
  return std::span<const Triple>(triples_).subspan(g.first, g.count);
}

std::span<const Triple> PreprocessedSnapshot::find_group(const std::string& subject,
                                                         const std::string& relation) const {
  auto it = std::lower_bound(groups_.begin(), groups_.end(), std::pair(&subject, &relation),
                             [](const Group& g, const auto& k) {
                               if (auto c = g.key.subject.id <=> *k.first; c != 0) return c < 0;
                               return g.key.relation.id < *k.second;
                             });
  if (it == groups_.end() || it->key.subject.id != subject || it->key.relation.id != relation) return {};
  return group(*it);
}

std::span<const Triple> PreprocessedSnapshot::subject_triples(const std::string& subject) const {
  auto lo = std::lower_bound(triples_.begin(), triples_.end(), subject,
                             [](const Triple& t, const std::string& s) { return t.subject.id < s; });
  auto hi = std::upper_bound(lo, triples_.end(), subject,
                             [](const std::string& s, const Triple& t) { return s < t.subject.id; });
  return std::span<const Triple>(triples_).subspan(std::size_t(lo - triples_.begin()),
                                                   std::size_t(hi - lo));
}

// --- Snapshot processing ---------------------------------------------------

std::vector<Triple> preprocess_entity(const EntityDoc& doc, const RelationMetaMap& meta,
                                      const RelevanceSet& relevant, const PreprocessOptions& opts) {
  std::vector<Triple> out;
  auto reject = [&](const std::string& relation, RejectReason r) {
    if (opts.on_reject) opts.on_reject(RejectRecord{doc.id, relation, r});
  };
  if (doc.kind != EntityKind::Item || !relevant.contains(doc.id)) {
    if (opts.on_reject)
      for (const auto& [rel, stmts] : doc.claims)
        for (std::size_t i = 0; i < stmts.size(); ++i) reject(rel, RejectReason::IrrelevantSubject);
    return out;
  }
  const EntityId subject(doc.id);
  for (const auto& [rel, stmts] : doc.claims) {
    std::vector<Triple> group;
    for (const auto& st : stmts) {
      FilterOutcome res = filter_statement(subject, st, meta);
      if (auto* r = std::get_if<RejectReason>(&res)) {
        reject(rel, *r);
        continue;
      }
      Triple& t = std::get<Triple>(res);
      if (const EntityId* o = as_entity(t.object); o && !relevant.contains(o->id)) {
        reject(rel, RejectReason::IrrelevantObject);
        continue;
      }
      group.push_back(std::move(t));
    }
    const RelationMeta* m = find_meta(meta, rel);
    if (m && m->is_temporal_functional) group = dedup_temporal_functional(std::move(group));
    std::move(group.begin(), group.end(), std::back_inserter(out));
  }
  return out;
}

PreprocessedSnapshot preprocess_snapshot(SnapshotReader& reader, const RelationMetaMap& meta,
                                         RelevanceSet relevant, const PreprocessOptions& opts) {
  std::vector<Triple> triples;
  while (auto doc = reader.next()) {
    auto part = preprocess_entity(*doc, meta, relevant, opts);
    std::move(part.begin(), part.end(), std::back_inserter(triples));
  }
  return PreprocessedSnapshot(std::move(triples), std::move(relevant));
}

SnapshotScan scan_snapshot(const std::string& path, ErrorPolicy policy, bool keep_entity_info) {
  SnapshotScan out;
  SnapshotReader reader(LineSource::open_file(path), policy);
  while (auto doc = reader.next()) {
    if (doc->kind == EntityKind::Property) {
      out.relations[doc->id] = relation_meta_from_doc(*doc);
      if (keep_entity_info && !doc->label.empty())
        out.entities[doc->id] = EntityInfo{doc->label, doc->description};
      continue;
    }
    if (!is_relevant_entity(*doc)) continue;
    out.relevant.insert(doc->id);
    if (keep_entity_info && (!doc->label.empty() || !doc->description.empty()))
      out.entities[doc->id] = EntityInfo{doc->label, doc->description};
  }
  out.errors = reader.errors();
  return out;
}

PreprocessedSnapshot preprocess_file(const std::string& path, RelationMetaMap& meta,
                                     EntityInfoMap* entities, ErrorPolicy policy,
                                     const PreprocessOptions& opts) {
  SnapshotScan scan = scan_snapshot(path, policy, entities != nullptr);
  for (auto& [id, m] : scan.relations) meta.try_emplace(id, std::move(m));
  if (entities)
    for (auto& [id, info] : scan.entities) entities->try_emplace(id, std::move(info));
  SnapshotReader reader(LineSource::open_file(path), policy);
  return preprocess_snapshot(reader, meta, std::move(scan.relevant), opts);
}

std::vector<EntityDoc> to_entity_docs(const PreprocessedSnapshot& snap) {
  std::vector<EntityDoc> docs;
  for (const Triple& t : snap.triples()) {
    if (docs.empty() || docs.back().id != t.subject.id) {
      EntityDoc d;
      d.id = t.subject.id;
      d.sitelink = Sitelink{true, PageKind::Article};
      docs.push_back(std::move(d));
    }
    Statement st;
    st.relation = t.relation;
    st.object = t.object;
    st.rank = t.rank;
    if (t.interval.from_point_in_time) {
      st.qualifiers[std::string(kPointInTime)] = {TimeValue{t.interval.start.date(), 11}};
    } else {
      if (t.interval.start.is_finite())
        st.qualifiers[std::string(kStartTime)] = {TimeValue{t.interval.start.date(), 11}};
      if (t.interval.end.is_finite())
        st.qualifiers[std::string(kEndTime)] = {TimeValue{t.interval.end.date(), 11}};
    }
    docs.back().claims[t.relation.id].push_back(std::move(st));
  }
  return docs;
}

}  // namespace factdelta
