#pragma once

#include <random>
#include <sstream>

#include "builders.hpp"

namespace fdtest {

// Relations used by random fixtures: P1 temporal functional, P2 meta,
// P3 restrictive (as a qualifier), P4..P8 plain.
inline RelationMetaMap random_meta() {
  RelationMetaMap m;
  m.emplace("P1", relation("P1", true, true));
  m.emplace("P2", relation("P2", false, false, true));
  m.emplace("P3", relation("P3", false, false, false, true));
  for (int i = 4; i <= 8; ++i) m.emplace("P" + std::to_string(i), relation("P" + std::to_string(i)));
  return m;
}

class RandomKb {
 public:
  explicit RandomKb(std::uint64_t seed, int entities = 40) : rng_(seed), entities_(entities) {}

  std::string entity() { return "Q" + std::to_string(1 + pick(entities_)); }
  std::string relation() { return "P" + std::to_string(1 + pick(8)); }

  ObjectValue object() {
    switch (pick(10)) {
      case 0: return qty(std::to_string(pick(1000)));
      case 1: return date_value(1990 + pick(40), 1 + pick(12), 1 + pick(28));
      case 2: return text("t" + std::to_string(pick(5)));
      case 3: return UrlValue{"https://x/" + std::to_string(pick(5))};
      case 4: return GlobeCoordinateValue{double(pick(90)), double(pick(90))};
      case 5: return pick(2) ? ObjectValue(SomeValue{}) : ObjectValue(NoValue{});
      default: return item(entity());
    }
  }

  std::optional<Date> maybe_date() {
    if (pick(3) == 0) return ymd(2015 + pick(12), 1 + pick(12), 1 + pick(28));
    return std::nullopt;
  }

  Statement statement() {
    Statement s = stmt(relation(), object());
    const int r = pick(10);
    s.rank = r == 0 ? Rank::Deprecated : r < 3 ? Rank::Preferred : Rank::Normal;
    s.qualifiers = quals(maybe_date(), maybe_date(), maybe_date());
    if (pick(8) == 0) s.qualifiers["P3"] = {text("restrictive")};
    if (pick(8) == 0) s.qualifiers["P7"] = {text("harmless")};
    return s;
  }

  // Documents for every entity; roughly a fifth lack a usable sitelink.
  std::vector<EntityDoc> docs(int statements_per_entity = 6) {
    std::vector<EntityDoc> out;
    for (int i = 1; i <= entities_; ++i) {
      DocBuilder b("Q" + std::to_string(i));
      const int link = pick(10);
      if (link == 0) b.sitelink(false);
      if (link == 1) b.sitelink(true, PageKind::Disambiguation);
      const int n = pick(statements_per_entity + 1);
      for (int k = 0; k < n; ++k) b.claim(statement());
      out.push_back(b.build());
    }
    return out;
  }

  // Clean triples over entity objects and literals, for diff and neighbor
  // fixtures.
  std::vector<Triple> triples(std::size_t count) {
    std::vector<Triple> out;
    while (out.size() < count) {
      ObjectValue o = pick(4) == 0 ? qty(std::to_string(pick(50))) : item(entity());
      TimeInterval iv;
      if (pick(3) == 0) iv.start = Timestamp(ymd(2015 + pick(10), 1 + pick(12), 1));
      out.push_back(triple(entity(), relation(), std::move(o), iv));
    }
    return out;
  }

  int pick(int bound) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(bound)); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  int entities_;
};

inline RelevanceSet relevance_of(const std::vector<EntityDoc>& docs) {
  RelevanceSet r;
  for (const auto& d : docs)
    if (is_relevant_entity(d)) r.insert(d.id);
  return r;
}

inline PreprocessedSnapshot preprocess_docs(const std::vector<EntityDoc>& docs, const RelationMetaMap& meta,
                                            const RelevanceSet& relevant, const PreprocessOptions& opts = {}) {
  std::string content = jsonl(docs);
  std::istringstream in(content);
  SnapshotReader reader(LineSource::from_stream(in));
  return preprocess_snapshot(reader, meta, relevant, opts);
}

}  // namespace fdtest
