#include "factdelta/dataset.hpp"

#include <algorithm>

namespace factdelta {

const LabeledTriple& query_triple(const ClassifiedGroup& g) {
  if (g.triples.empty()) throw std::invalid_argument("group without triples");
  auto it = std::find_if(g.triples.begin(), g.triples.end(),
                         [](const LabeledTriple& t) { return t.label == Label::New; });
  return it == g.triples.end() ? g.triples.front() : *it;
}

namespace {

const std::vector<Template>* templates_for(const TemplateStore& store, const std::string& relation) {
  auto it = store.find(relation);
  return it == store.end() || it->second.empty() ? nullptr : &it->second;
}

}  // namespace

DatasetRecord make_dataset_record(const ClassifiedGroup& g, const std::vector<NeighborFact>& neighbors,
                                  const TemplateStore& templates, const EntityInfoMap& labels) {
  DatasetRecord r;
  r.subject_id = g.key.subject.id;
  r.subject_label = label_of(r.subject_id, labels);
  r.popularity = g.subject_popularity;
  r.is_new = g.subject_is_new;
  r.relation_id = g.key.relation.id;
  r.relation_label = label_of(r.relation_id, labels);
  r.scenario = g.scenario;
  for (const auto& t : g.triples)
    r.triples.push_back({t.triple.object, render_object(t.triple.object, labels), t.triple.interval, t.label});

  const auto* tpl = templates_for(templates, r.relation_id);
  const std::string query_object = render_object(query_triple(g).triple.object, labels);
  if (tpl && !query_object.empty()) r.verbalization = verbalize(*tpl, r.subject_label, query_object);

  for (const auto& n : neighbors) {
    DatasetNeighbor dn;
    dn.subject = n.triple.subject.id;
    dn.relation = n.triple.relation.id;
    dn.object = n.triple.object;
    dn.object_label = render_object(n.triple.object, labels);
    if (const auto* nt = templates_for(templates, dn.relation))
      dn.cloze = render(nt->front(), label_of(dn.subject, labels));
    dn.similarity = n.similarity;
    dn.popularity = n.subject_popularity;
    r.neighbors.push_back(std::move(dn));
  }
  return r;
}

json dataset_record_to_json(const DatasetRecord& r) {
  json triples = json::array();
  for (const auto& t : r.triples)
    triples.push_back({{"object", encode_object(t.object, true)},
                       {"object_label", t.object_label},
                       {"interval", encode_interval(t.interval)},
                       {"label", std::string(to_string(t.label))}});
  json verbalization = nullptr;
  if (r.verbalization)
    verbalization = {{"update_sentence", r.verbalization->update_sentence},
                     {"cloze", r.verbalization->primary_cloze},
                     {"alt_clozes", r.verbalization->alt_clozes}};
  json neighbors = json::array();
  for (const auto& n : r.neighbors)
    neighbors.push_back({{"subject", n.subject},
                         {"relation", n.relation},
                         {"object", encode_object(n.object, true)},
                         {"object_label", n.object_label},
                         {"cloze", n.cloze},
                         {"similarity", n.similarity},
                         {"popularity", n.popularity}});
  return {{"subject", {{"id", r.subject_id}, {"label", r.subject_label}, {"popularity", r.popularity},
                       {"is_new", r.is_new}}},
          {"relation", {{"id", r.relation_id}, {"label", r.relation_label}}},
          {"scenario", std::string(to_string(r.scenario))},
          {"triples", std::move(triples)},
          {"verbalization", std::move(verbalization)},
          {"neighbors", std::move(neighbors)}};
}

DatasetRecord dataset_record_from_json(const json& j) {
  DatasetRecord r;
  const auto& s = j.at("subject");
  r.subject_id = s.at("id").get<std::string>();
  r.subject_label = s.at("label").get<std::string>();
  r.popularity = s.at("popularity").get<std::uint64_t>();
  r.is_new = s.at("is_new").get<bool>();
  r.relation_id = j.at("relation").at("id").get<std::string>();
  r.relation_label = j.at("relation").at("label").get<std::string>();
  r.scenario = parse_scenario(j.at("scenario").get<std::string>());
  for (const auto& t : j.at("triples"))
    r.triples.push_back({decode_object(t.at("object")), t.at("object_label").get<std::string>(),
                         decode_interval(t.at("interval")), parse_label(t.at("label").get<std::string>())});
  if (const auto& v = j.at("verbalization"); !v.is_null())
    r.verbalization = VerbalizationSet{v.at("update_sentence").get<std::string>(), v.at("cloze").get<std::string>(),
                                       v.at("alt_clozes").get<std::vector<std::string>>()};
  for (const auto& n : j.at("neighbors"))
    r.neighbors.push_back({n.at("subject").get<std::string>(), n.at("relation").get<std::string>(),
                           decode_object(n.at("object")), n.at("object_label").get<std::string>(),
                           n.at("cloze").get<std::string>(), n.at("similarity").get<double>(),
                           n.at("popularity").get<std::uint64_t>()});
  return r;
}

namespace {

struct Checker {
  std::vector<std::string> problems;

  const json* field(const json& obj, const char* name, json::value_t type, const std::string& where) {
    auto it = obj.find(name);
    if (it == obj.end()) {
      problems.push_back(where + "." + name + ": missing");
      return nullptr;
    }
    bool ok = it->type() == type || (type == json::value_t::number_float && it->is_number()) ||
              (type == json::value_t::number_unsigned && it->is_number_unsigned());
    if (!ok) {
      problems.push_back(where + "." + name + ": wrong type");
      return nullptr;
    }
    return &*it;
  }
};

}  // namespace

std::vector<std::string> validate_dataset_record(const json& j) {
  using vt = json::value_t;
  Checker c;
  if (!j.is_object()) return {"record is not an object"};
  if (const json* s = c.field(j, "subject", vt::object, "$")) {
    c.field(*s, "id", vt::string, "$.subject");
    c.field(*s, "label", vt::string, "$.subject");
    c.field(*s, "popularity", vt::number_unsigned, "$.subject");
    c.field(*s, "is_new", vt::boolean, "$.subject");
  }
  if (const json* r = c.field(j, "relation", vt::object, "$")) {
    c.field(*r, "id", vt::string, "$.relation");
    c.field(*r, "label", vt::string, "$.relation");
  }
  if (const json* s = c.field(j, "scenario", vt::string, "$")) {
    try {
      parse_scenario(s->get<std::string>());
    } catch (const std::exception&) {
      c.problems.push_back("$.scenario: unknown value");
    }
  }
  if (const json* ts = c.field(j, "triples", vt::array, "$")) {
    if (ts->empty()) c.problems.push_back("$.triples: empty");
    for (const auto& t : *ts) {
      c.field(t, "object", vt::object, "$.triples[]");
      c.field(t, "object_label", vt::string, "$.triples[]");
      c.field(t, "interval", vt::object, "$.triples[]");
      if (const json* l = c.field(t, "label", vt::string, "$.triples[]")) {
        try {
          parse_label(l->get<std::string>());
        } catch (const std::exception&) {
          c.problems.push_back("$.triples[].label: unknown value");
        }
      }
    }
  }
  if (auto v = j.find("verbalization"); v == j.end()) {
    c.problems.push_back("$.verbalization: missing");
  } else if (!v->is_null()) {
    c.field(*v, "update_sentence", vt::string, "$.verbalization");
    c.field(*v, "cloze", vt::string, "$.verbalization");
    if (const json* alts = c.field(*v, "alt_clozes", vt::array, "$.verbalization")) {
      if (alts->size() > 4) c.problems.push_back("$.verbalization.alt_clozes: more than 4");
      for (const auto& a : *alts)
        if (!a.is_string()) c.problems.push_back("$.verbalization.alt_clozes[]: wrong type");
    }
  }
  if (const json* ns = c.field(j, "neighbors", vt::array, "$")) {
    for (const auto& n : *ns) {
      c.field(n, "subject", vt::string, "$.neighbors[]");
      c.field(n, "relation", vt::string, "$.neighbors[]");
      c.field(n, "object", vt::object, "$.neighbors[]");
      c.field(n, "object_label", vt::string, "$.neighbors[]");
      c.field(n, "cloze", vt::string, "$.neighbors[]");
      c.field(n, "similarity", vt::number_float, "$.neighbors[]");
      c.field(n, "popularity", vt::number_unsigned, "$.neighbors[]");
    }
  }
  return c.problems;
}

}  // namespace factdelta
