#include "factdelta/classify.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <stdexcept>

#include "factdelta/hashing.hpp"

namespace factdelta {

void PipelineConfig::validate() const {
  if (!(t_old < t_new)) throw std::invalid_argument("t_old must precede t_new");
  if (population_undersample_factor == 0)
    throw std::invalid_argument("population_undersample_factor must be positive");
}

NewEntitySet detect_new_entities(const DiffResult& diff, const PipelineConfig& cfg) {
  NewEntitySet out;
  const Timestamp t_old(cfg.t_old);
  for (const auto& g : diff.groups()) {
    if (!cfg.creation_relations.contains(g.key.relation.id)) continue;
    const std::string& e = g.key.subject.id;
    if (diff.occurrence(e) != static_cast<std::uint8_t>(Membership::NewOnly)) continue;
    for (const auto& entry : g.entries) {
      const TimeValue* d = as_time(entry.object);
      if (d && Timestamp(d->date) > t_old) {
        out.insert(e);
        break;
      }
    }
  }
  return out;
}

// --- Rule list ---------------------------------------------------------------

namespace {

bool between(Timestamp x, Timestamp lo, Timestamp hi) { return lo < x && x < hi; }

bool death_fact_is_new(const TripleContext& c, Timestamp t_old, Timestamp t_new) {
  return c.membership == Membership::NewOnly && c.stats.n == 1 && c.object_date &&
         between(Timestamp(*c.object_date), t_old, t_new);
}

bool temporal_replacement(const TripleContext& c, Timestamp t_old, Timestamp t_new) {
  return c.relation_is_temporal_functional && c.stats.n_minus == 1 && c.stats.n_plus == 1 &&
         c.stats.n_zero == 0 && c.membership == Membership::NewOnly &&
         between(c.t_start, t_old, t_new);
}

using T = Timestamp;
using C = TripleContext;

constexpr std::array<ClassificationRule, 18> kRules{{
    {1, "s in E+", Label::New, [](const C& c, T, T) { return c.subject_in_new_entities; }},
    {2, "s not in F-", Label::Unknown, [](const C& c, T, T) { return !c.subject_in_old_only; }},
    {3, "r is death and (s,r,o) in F+ and n = 1 and T_old < o < T_new", Label::New,
     [](const C& c, T o, T n) { return c.relation_is_death && death_fact_is_new(c, o, n); }},
    {4, "r is death and not((s,r,o) in F+ and n = 1 and T_old < o < T_new)", Label::Unknown,
     [](const C& c, T o, T n) { return c.relation_is_death && !death_fact_is_new(c, o, n); }},
    {5, "t_start > t_end", Label::Unknown, [](const C& c, T, T) { return c.t_start > c.t_end; }},
    {6, "r is temporal and n- = 1 and n+ = 1 and n0 = 0 and (s,r,o) in F+ and T_old < t_start < T_new",
     Label::New, [](const C& c, T o, T n) { return temporal_replacement(c, o, n); }},
    {7,
     "r is temporal and n- = 1 and n+ = 1 and n0 = 0 and (s,r,o) in F+ and T_old < t_start < T_new "
     "and (t_end = +inf or t_end > T_new)",
     Label::New,
     [](const C& c, T o, T n) {
       return temporal_replacement(c, o, n) && (c.t_end.is_pos_inf() || c.t_end > n);
     }},
    {8, "(s,r,o) in F+ and T_old < t_start < T_new and t_end < T_old", Label::Ignore,
     [](const C& c, T o, T n) {
       return c.membership == Membership::NewOnly && between(c.t_start, o, n) && c.t_end < o;
     }},
    {9, "t_end = +inf and t_start < T_old", Label::Static,
     [](const C& c, T o, T) { return c.t_end.is_pos_inf() && c.t_start < o; }},
    {10, "t_end = +inf and T_old < t_start < T_new", Label::New,
     [](const C& c, T o, T n) { return c.t_end.is_pos_inf() && between(c.t_start, o, n); }},
    {11, "t_start > T_old", Label::Ignore, [](const C& c, T o, T) { return c.t_start > o; }},
    {12, "T_old < t_start < T_new and T_old < t_end < T_new", Label::Ignore,
     [](const C& c, T o, T n) { return between(c.t_start, o, n) && between(c.t_end, o, n); }},
    {13, "t_start < T_old and T_old < t_end < T_new", Label::Obsolete,
     [](const C& c, T o, T n) { return c.t_start < o && between(c.t_end, o, n); }},
    {14, "t_start < T_old and t_end > T_new", Label::Static,
     [](const C& c, T o, T n) { return c.t_start < o && c.t_end > n; }},
    {15, "T_old < t_end < T_new", Label::Obsolete,
     [](const C& c, T o, T n) { return between(c.t_end, o, n); }},
    {16, "t_end > T_new", Label::Static, [](const C& c, T, T n) { return c.t_end > n; }},
    {17, "(s,r,o) in F- and t_end < T_old", Label::Ignore,
     [](const C& c, T o, T) { return c.membership == Membership::OldOnly && c.t_end < o; }},
    {18, "(s,r,o) in F+ and o in E+", Label::New,
     [](const C& c, T, T) { return c.membership == Membership::NewOnly && c.object_in_new_entities; }},
}};

}  // namespace

std::span<const ClassificationRule> classification_rules() { return kRules; }

std::optional<int> first_matching_rule(const TripleContext& ctx, const PipelineConfig& cfg,
                                       std::span<const ClassificationRule> rules) {
  const Timestamp t_old(cfg.t_old), t_new(cfg.t_new);
  for (const auto& r : rules)
    if (r.matches(ctx, t_old, t_new)) return r.row;
  return std::nullopt;
}

Label classify_triple(const TripleContext& ctx, const PipelineConfig& cfg) {
  const Timestamp t_old(cfg.t_old), t_new(cfg.t_new);
  for (const auto& r : kRules)
    if (r.matches(ctx, t_old, t_new)) return r.label;
  return Label::Unknown;
}

std::vector<int> unreachable_rules(std::span<const ClassificationRule> rules) {
  PipelineConfig cfg;
  const std::int64_t lo = cfg.t_old.days, hi = cfg.t_new.days, span = hi - lo;
  // Two points inside every open region so that both orders of t_start and
  // t_end are represented within a region.
  const std::vector<Timestamp> points{
      Timestamp::neg_inf(),          Timestamp(Date{lo - 20}),          Timestamp(Date{lo - 10}),
      Timestamp(Date{lo}),           Timestamp(Date{lo + span / 3}),    Timestamp(Date{lo + 2 * span / 3}),
      Timestamp(Date{hi}),           Timestamp(Date{hi + 10}),          Timestamp(Date{hi + 20}),
      Timestamp::pos_inf(),
  };
  std::vector<std::optional<Date>> object_dates{std::nullopt};
  for (const auto& p : points)
    if (p.is_finite()) object_dates.push_back(p.date());

  std::set<int> fired;
  TripleContext c;
  for (const auto& start : points) {
    for (const auto& end : points) {
      c.t_start = start;
      c.t_end = end;
      for (const auto& od : object_dates) {
        c.object_date = od;
        for (unsigned flags = 0; flags < 32; ++flags) {
          c.subject_in_new_entities = flags & 1;
          c.subject_in_old_only = flags & 2;
          c.relation_is_death = flags & 4;
          c.relation_is_temporal_functional = flags & 8;
          c.object_in_new_entities = flags & 16;
          for (Membership m : {Membership::OldOnly, Membership::Both, Membership::NewOnly}) {
            if (m == Membership::OldOnly && !c.subject_in_old_only) continue;
            c.membership = m;
            for (std::size_t nm = 0; nm < 3; ++nm) {
              for (std::size_t nz = 0; nz < 3; ++nz) {
                for (std::size_t np = 0; np < 3; ++np) {
                  if ((m == Membership::OldOnly && nm == 0) || (m == Membership::Both && nz == 0) ||
                      (m == Membership::NewOnly && np == 0))
                    continue;
                  c.stats = GroupStats{nm, nz, np, nm + nz + np};
                  if (auto row = first_matching_rule(c, cfg, rules)) fired.insert(*row);
                }
              }
            }
          }
        }
      }
    }
  }
  std::vector<int> out;
  for (const auto& r : rules)
    if (!fired.contains(r.row)) out.push_back(r.row);
  return out;
}

// --- Group labelling -------------------------------------------------------

namespace {

const RelationMeta* find_meta(const RelationMetaMap& meta, const std::string& id) {
  auto it = meta.find(id);
  return it == meta.end() ? nullptr : &it->second;
}

bool is_temporal_functional(const RelationMetaMap& meta, const std::string& id) {
  const RelationMeta* m = find_meta(meta, id);
  return m && m->is_temporal_functional;
}

}  // namespace

LabeledGroup label_group(const DiffGroup& group, const DiffResult& diff, const NewEntitySet& new_entities,
                         const RelationMetaMap& meta, const PipelineConfig& cfg) {
  LabeledGroup out{group.key, group_stats(group.entries), {}};
  const bool subject_new = new_entities.contains(group.key.subject.id);
  const bool subject_old_only = entity_occurs_in(group.key.subject.id, Membership::OldOnly, diff);
  const bool death = cfg.death_relations.contains(group.key.relation.id);
  const bool temporal = is_temporal_functional(meta, group.key.relation.id);
  for (const auto& e : group.entries) {
    TripleContext ctx;
    ctx.membership = e.membership;
    ctx.stats = out.stats;
    ctx.subject_in_new_entities = subject_new;
    ctx.subject_in_old_only = subject_old_only;
    ctx.relation_is_death = death;
    ctx.relation_is_temporal_functional = temporal;
    if (const TimeValue* t = as_time(e.object)) ctx.object_date = t->date;
    if (const EntityId* o = as_entity(e.object)) ctx.object_in_new_entities = new_entities.contains(o->id);
    // A key present on both sides is judged by its new-snapshot interval.
    const auto& side = e.membership == Membership::OldOnly ? e.old_side : e.new_side;
    for (const auto& inst : side) {
      ctx.t_start = inst.interval.start;
      ctx.t_end = inst.interval.end;
      LabeledTriple lt;
      lt.triple = Triple{group.key.subject, group.key.relation, e.object, inst.interval, inst.rank};
      lt.membership = e.membership;
      lt.label = classify_triple(ctx, cfg);
      out.triples.push_back(std::move(lt));
    }
  }
  return out;
}

LabeledGroup post_pass_obsolete(LabeledGroup group, const RelationMetaMap& meta) {
  if (group.stats.n != 2 || !is_temporal_functional(meta, group.key.relation.id)) return group;
  const LabeledTriple* fresh = nullptr;
  for (const auto& t : group.triples)
    if (t.label == Label::New) fresh = &t;
  if (!fresh) return group;
  const ObjectValue fresh_object = fresh->triple.object;
  for (auto& t : group.triples)
    if (t.membership == Membership::OldOnly && t.triple.object != fresh_object) t.label = Label::Obsolete;
  return group;
}

std::optional<LabeledGroup> resolve_anomalies(LabeledGroup group) {
  // Instances of one object are adjacent.
  std::vector<LabeledTriple> kept;
  auto& ts = group.triples;
  for (std::size_t i = 0; i < ts.size();) {
    std::size_t j = i + 1;
    while (j < ts.size() && ts[j].triple.object == ts[i].triple.object) ++j;
    if (j - i == 1) {
      kept.push_back(std::move(ts[i]));
      i = j;
      continue;
    }
    bool all_obsolete = true, all_new_or_static = true;
    for (std::size_t k = i; k < j; ++k) {
      all_obsolete &= ts[k].label == Label::Obsolete;
      all_new_or_static &= ts[k].label == Label::New || ts[k].label == Label::Static;
    }
    if (all_obsolete) {
      kept.push_back(std::move(ts[i]));
    } else if (all_new_or_static) {
      std::size_t pick = i;
      for (std::size_t k = i; k < j; ++k) {
        if (ts[k].label == Label::Static) {
          pick = k;
          break;
        }
      }
      kept.push_back(std::move(ts[pick]));
    } else {
      return std::nullopt;
    }
    i = j;
  }
  group.triples = std::move(kept);
  return group;
}

namespace {

bool has_label(const LabeledGroup& g, Label l) {
  return std::any_of(g.triples.begin(), g.triples.end(), [l](const LabeledTriple& t) { return t.label == l; });
}

bool has_change(const LabeledGroup& g) { return has_label(g, Label::New) || has_label(g, Label::Obsolete); }

LabeledGroup without_ignored(LabeledGroup g) {
  std::erase_if(g.triples, [](const LabeledTriple& t) { return t.label == Label::Ignore; });
  return g;
}

}  // namespace

std::vector<LabeledGroup> filter_groups(std::vector<LabeledGroup> groups) {
  std::vector<LabeledGroup> out;
  for (auto& g : groups) {
    if (has_label(g, Label::Unknown)) continue;
    g = without_ignored(std::move(g));
    if (!has_change(g)) continue;
    out.push_back(std::move(g));
  }
  return out;
}

Scenario type_scenario(const LabeledGroup& group, const NewEntitySet& new_entities) {
  if (new_entities.contains(group.key.subject.id)) return Scenario::AddEntity;
  std::size_t n_new = 0, n_obs = 0, n_static = 0;
  for (const auto& t : group.triples) {
    n_new += t.label == Label::New;
    n_obs += t.label == Label::Obsolete;
    n_static += t.label == Label::Static;
  }
  const std::size_t n = group.triples.size();
  if (n == 2 && n_new == 1 && n_obs == 1) return Scenario::ReplaceObject;
  if (n > 0 && n_obs == n) return Scenario::Archive;
  if (n > 0 && n_new == n) return Scenario::AddRelation;
  if (n_new >= 1 && n_static >= 1 && n_obs == 0) return Scenario::AddObject;
  return Scenario::Other;
}

void sort_by_popularity(std::vector<ClassifiedGroup>& groups) {
  std::sort(groups.begin(), groups.end(), [](const ClassifiedGroup& a, const ClassifiedGroup& b) {
    if (a.subject_popularity != b.subject_popularity) return a.subject_popularity > b.subject_popularity;
    if (a.key.subject.id != b.key.subject.id) return a.key.subject.id < b.key.subject.id;
    return a.key.relation.id < b.key.relation.id;
  });
}

std::vector<ClassifiedGroup> extract_replacement_subset(std::vector<ClassifiedGroup> groups,
                                                        const PipelineConfig& cfg) {
  std::vector<ClassifiedGroup> out, population;
  for (auto& g : groups) {
    if (g.scenario != Scenario::ReplaceObject) continue;
    if (g.key.relation.id == cfg.population_relation) {
      population.push_back(std::move(g));
    } else {
      out.push_back(std::move(g));
    }
  }
  const std::size_t factor = cfg.population_undersample_factor;
  const std::size_t keep = (population.size() + factor - 1) / factor;
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const auto& k = population[i].key;
    ranked.emplace_back(seeded_hash(cfg.random_seed, k.subject.id + "\t" + k.relation.id), i);
  }
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(population[ranked[i].second]));
  sort_by_popularity(out);
  return out;
}

ClassificationResult classify_diff(const DiffResult& diff, const RelationMetaMap& meta,
                                   const PopularityTable& popularity, const PipelineConfig& cfg) {
  cfg.validate();
  ClassificationResult res;
  res.new_entities = detect_new_entities(diff, cfg);
  for (const auto& dg : diff.groups()) {
    ++res.stats.groups_in;
    LabeledGroup g = label_group(dg, diff, res.new_entities, meta, cfg);
    g = post_pass_obsolete(std::move(g), meta);
    const std::size_t before = g.triples.size();
    std::optional<LabeledGroup> resolved = resolve_anomalies(std::move(g));
    if (!resolved) {
      ++res.stats.anomalous_groups;
      ++res.stats.deleted_by_anomaly;
      continue;
    }
    if (resolved->triples.size() != before) ++res.stats.anomalous_groups;
    if (has_label(*resolved, Label::Unknown)) {
      ++res.stats.dropped_unknown;
      continue;
    }
    LabeledGroup kept = without_ignored(std::move(*resolved));
    if (!has_change(kept)) {
      ++res.stats.dropped_no_change;
      continue;
    }
    ClassifiedGroup cg;
    cg.scenario = type_scenario(kept, res.new_entities);
    cg.key = kept.key;
    cg.triples = std::move(kept.triples);
    cg.subject_popularity = popularity.get(cg.key.subject.id);
    cg.subject_is_new = res.new_entities.contains(cg.key.subject.id);
    res.groups.push_back(std::move(cg));
  }
  res.stats.kept = res.groups.size();
  sort_by_popularity(res.groups);
  return res;
}

json classified_group_to_json(const ClassifiedGroup& g) {
  json triples = json::array();
  for (const auto& t : g.triples) {
    triples.push_back({{"object", encode_object(t.triple.object, true)},
                       {"membership", std::string(to_string(t.membership))},
                       {"interval", encode_interval(t.triple.interval)},
                       {"rank", std::string(to_string(t.triple.rank))},
                       {"label", std::string(to_string(t.label))}});
  }
  return {{"subject", g.key.subject.id},
          {"relation", g.key.relation.id},
          {"scenario", std::string(to_string(g.scenario))},
          {"popularity", g.subject_popularity},
          {"is_new", g.subject_is_new},
          {"triples", std::move(triples)}};
}

ClassifiedGroup classified_group_from_json(const json& j) {
  ClassifiedGroup g;
  g.key = GroupKey{EntityId(j.at("subject").get<std::string>()), RelationId(j.at("relation").get<std::string>())};
  g.scenario = parse_scenario(j.at("scenario").get<std::string>());
  g.subject_popularity = j.at("popularity").get<std::uint64_t>();
  g.subject_is_new = j.at("is_new").get<bool>();
  for (const auto& jt : j.at("triples")) {
    LabeledTriple t;
    t.triple = Triple{g.key.subject, g.key.relation, decode_object(jt.at("object")),
                      decode_interval(jt.at("interval")), parse_rank(jt.at("rank").get<std::string>())};
    t.membership = parse_membership(jt.at("membership").get<std::string>());
    t.label = parse_label(jt.at("label").get<std::string>());
    g.triples.push_back(std::move(t));
  }
  return g;
}

}  // namespace factdelta
