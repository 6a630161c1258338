#include "factdelta/diff.hpp"

#include <algorithm>

namespace factdelta {

std::string_view to_string(Membership m) {
  switch (m) {
    case Membership::OldOnly: return "old_only";
    case Membership::Both: return "both";
    case Membership::NewOnly: return "new_only";
  }
  return "both";
}

Membership parse_membership(std::string_view s) {
  if (s == "old_only") return Membership::OldOnly;
  if (s == "both") return Membership::Both;
  if (s == "new_only") return Membership::NewOnly;
  throw ParseError("unknown membership '" + std::string(s) + "'");
}

std::optional<TimeInterval> DiffEntry::old_interval() const {
  if (old_side.empty()) return std::nullopt;
  return old_side.front().interval;
}

std::optional<TimeInterval> DiffEntry::new_interval() const {
  if (new_side.empty()) return std::nullopt;
  return new_side.front().interval;
}

GroupStats group_stats(const std::vector<DiffEntry>& entries) {
  GroupStats s;
  for (const auto& e : entries) {
    switch (e.membership) {
      case Membership::OldOnly: ++s.n_minus; break;
      case Membership::Both: ++s.n_zero; break;
      case Membership::NewOnly: ++s.n_plus; break;
    }
  }
  s.n = s.n_minus + s.n_zero + s.n_plus;
  return s;
}

DiffResult::DiffResult(std::vector<DiffGroup> groups) : groups_(std::move(groups)) {
  for (const auto& g : groups_) {
    for (const auto& e : g.entries) {
      const auto bit = static_cast<std::uint8_t>(e.membership);
      occurs_[g.key.subject.id] |= bit;
      if (const EntityId* o = as_entity(e.object)) occurs_[o->id] |= bit;
    }
  }
}

std::size_t DiffResult::key_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.entries.size();
  return n;
}

std::size_t DiffResult::count(Membership m) const {
  std::size_t n = 0;
  for (const auto& g : groups_)
    for (const auto& e : g.entries) n += e.membership == m;
  return n;
}

std::uint8_t DiffResult::occurrence(const std::string& entity) const {
  auto it = occurs_.find(entity);
  return it == occurs_.end() ? 0 : it->second;
}

DiffResult DiffResult::mirrored() const {
  std::vector<DiffGroup> out = groups_;
  for (auto& g : out) {
    for (auto& e : g.entries) {
      if (e.membership == Membership::OldOnly) {
        e.membership = Membership::NewOnly;
      } else if (e.membership == Membership::NewOnly) {
        e.membership = Membership::OldOnly;
      }
      std::swap(e.old_side, e.new_side);
    }
  }
  return DiffResult(std::move(out));
}

bool entity_occurs_in(const std::string& entity, Membership part, const DiffResult& diff) {
  return (diff.occurrence(entity) & static_cast<std::uint8_t>(part)) != 0;
}

namespace {

// Collapses a run of sorted triples sharing one group into per-object runs.
struct ObjectRun {
  std::string key;
  const Triple* first;
  std::size_t count;
};

std::vector<ObjectRun> object_runs(std::span<const Triple> group) {
  std::vector<ObjectRun> out;
  for (const Triple& t : group) {
    if (!out.empty() && out.back().first->object == t.object) {
      ++out.back().count;
    } else {
      out.push_back(ObjectRun{canonical_key(t.object), &t, 1});
    }
  }
  return out;
}

std::vector<SideInstance> instances(const ObjectRun& run) {
  std::vector<SideInstance> out;
  for (std::size_t i = 0; i < run.count; ++i) out.push_back({run.first[i].interval, run.first[i].rank});
  return out;
}

DiffGroup merge_group(std::span<const Triple> old_g, std::span<const Triple> new_g) {
  const Triple& head = old_g.empty() ? new_g.front() : old_g.front();
  DiffGroup g{GroupKey{EntityId(head.subject.id), RelationId(head.relation.id)}, {}};
  auto olds = object_runs(old_g);
  auto news = object_runs(new_g);
  std::size_t i = 0, j = 0;
  while (i < olds.size() || j < news.size()) {
    DiffEntry e;
    if (j == news.size() || (i < olds.size() && olds[i].key < news[j].key)) {
      e.object = olds[i].first->object;
      e.membership = Membership::OldOnly;
      e.old_side = instances(olds[i++]);
    } else if (i == olds.size() || news[j].key < olds[i].key) {
      e.object = news[j].first->object;
      e.membership = Membership::NewOnly;
      e.new_side = instances(news[j++]);
    } else {
      e.object = olds[i].first->object;
      e.membership = Membership::Both;
      e.old_side = instances(olds[i++]);
      e.new_side = instances(news[j++]);
    }
    g.entries.push_back(std::move(e));
  }
  return g;
}

}  // namespace

void for_each_diff_group(const PreprocessedSnapshot& old_snap, const PreprocessedSnapshot& new_snap,
                         const std::function<void(DiffGroup&&)>& sink) {
  const auto& og = old_snap.groups();
  const auto& ng = new_snap.groups();
  std::size_t i = 0, j = 0;
  auto key_cmp = [](const GroupKey& a, const GroupKey& b) {
    if (auto c = a.subject.id <=> b.subject.id; c != 0) return c;
    return a.relation.id <=> b.relation.id;
  };
  while (i < og.size() || j < ng.size()) {
    if (j == ng.size() || (i < og.size() && key_cmp(og[i].key, ng[j].key) < 0)) {
      sink(merge_group(old_snap.group(og[i++]), {}));
    } else if (i == og.size() || key_cmp(ng[j].key, og[i].key) < 0) {
      sink(merge_group({}, new_snap.group(ng[j++])));
    } else {
      sink(merge_group(old_snap.group(og[i++]), new_snap.group(ng[j++])));
    }
  }
}

DiffResult diff_snapshots(const PreprocessedSnapshot& old_snap, const PreprocessedSnapshot& new_snap) {
  std::vector<DiffGroup> groups;
  for_each_diff_group(old_snap, new_snap, [&](DiffGroup&& g) { groups.push_back(std::move(g)); });
  return DiffResult(std::move(groups));
}

namespace {

json side_to_json(const std::vector<SideInstance>& side) {
  json arr = json::array();
  for (const auto& s : side)
    arr.push_back({{"interval", encode_interval(s.interval)}, {"rank", std::string(to_string(s.rank))}});
  return arr;
}

std::vector<SideInstance> side_from_json(const json& j) {
  std::vector<SideInstance> out;
  for (const auto& s : j)
    out.push_back({decode_interval(s.at("interval")), parse_rank(s.at("rank").get<std::string>())});
  return out;
}

}  // namespace

json diff_group_to_json(const DiffGroup& g) {
  json entries = json::array();
  for (const auto& e : g.entries) {
    json je = {{"object", encode_object(e.object, true)},
               {"membership", std::string(to_string(e.membership))}};
    if (!e.old_side.empty()) je["old"] = side_to_json(e.old_side);
    if (!e.new_side.empty()) je["new"] = side_to_json(e.new_side);
    entries.push_back(std::move(je));
  }
  return {{"subject", g.key.subject.id}, {"relation", g.key.relation.id}, {"entries", std::move(entries)}};
}

DiffGroup diff_group_from_json(const json& j) {
  DiffGroup g{GroupKey{EntityId(j.at("subject").get<std::string>()),
                       RelationId(j.at("relation").get<std::string>())},
              {}};
  for (const auto& je : j.at("entries")) {
    DiffEntry e;
    e.object = decode_object(je.at("object"));
    e.membership = parse_membership(je.at("membership").get<std::string>());
    if (auto o = je.find("old"); o != je.end()) e.old_side = side_from_json(*o);
    if (auto n = je.find("new"); n != je.end()) e.new_side = side_from_json(*n);
    g.entries.push_back(std::move(e));
  }
  return g;
}

}  // namespace factdelta
