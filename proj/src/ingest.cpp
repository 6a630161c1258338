#include "factdelta/ingest.hpp"

#include <zlib.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace factdelta {

SchemaError::SchemaError(std::size_t line, std::string reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(std::move(reason)) {}

std::string_view to_string(PageKind k) {
  switch (k) {
    case PageKind::Article: return "article";
    case PageKind::List: return "list";
    case PageKind::Category: return "category";
    case PageKind::Template: return "template";
    case PageKind::Disambiguation: return "disambiguation";
    case PageKind::ArticleSection: return "article_section";
  }
  return "article";
}

PageKind parse_page_kind(std::string_view s) {
  for (PageKind k : {PageKind::Article, PageKind::List, PageKind::Category, PageKind::Template,
                     PageKind::Disambiguation, PageKind::ArticleSection})
    if (to_string(k) == s) return k;
  throw ParseError("unknown page_kind '" + std::string(s) + "'");
}

namespace {

std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::SingleValue: return "single_value";
    case ConstraintKind::SingleBestValue: return "single_best_value";
    case ConstraintKind::Other: return "other";
  }
  return "other";
}

ConstraintKind parse_constraint_kind(std::string_view s) {
  if (s == "single_value") return ConstraintKind::SingleValue;
  if (s == "single_best_value") return ConstraintKind::SingleBestValue;
  return ConstraintKind::Other;
}

std::string get_string(const json& j, const char* field, std::string fallback = {}) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) throw ParseError(std::string("field '") + field + "' is not a string");
  return it->get<std::string>();
}

bool get_bool(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) return false;
  if (!it->is_boolean()) throw ParseError(std::string("field '") + field + "' is not a boolean");
  return it->get<bool>();
}

Statement parse_statement(const std::string& relation, const json& j) {
  if (!j.is_object()) throw ParseError("statement for " + relation + " is not an object");
  Statement st;
  st.relation = RelationId(relation);
  st.rank = parse_rank(get_string(j, "rank", "normal"));
  st.object = decode_object(j);
  if (auto q = j.find("qualifiers"); q != j.end()) st.qualifiers = decode_qualifiers(*q);
  return st;
}

json statement_to_json(const Statement& st) {
  json out = {{"rank", std::string(to_string(st.rank))}};
  json snak = encode_object(st.object);
  for (auto& [k, v] : snak.items()) out[k] = v;
  if (!st.qualifiers.empty()) out["qualifiers"] = encode_qualifiers(st.qualifiers);
  return out;
}

}  // namespace

EntityDoc parse_entity_doc(const json& j) {
  if (!j.is_object()) throw ParseError("entity document is not an object");
  EntityDoc doc;
  doc.id = get_string(j, "id");
  if (doc.id.empty()) throw ParseError("missing field 'id'");
  const std::string kind = get_string(j, "kind", "item");
  if (kind == "item") {
    doc.kind = EntityKind::Item;
  } else if (kind == "property") {
    doc.kind = EntityKind::Property;
  } else {
    throw ParseError("unknown kind '" + kind + "'");
  }
  doc.label = get_string(j, "label");
  doc.description = get_string(j, "description");
  doc.datatype = get_string(j, "datatype");
  if (auto s = j.find("sitelink"); s != j.end() && !s->is_null()) {
    doc.sitelink.exists = get_bool(*s, "exists");
    doc.sitelink.page_kind = parse_page_kind(get_string(*s, "page_kind", "article"));
  }
  if (auto c = j.find("claims"); c != j.end()) {
    if (!c->is_object()) throw ParseError("claims must be an object");
    for (const auto& [rel, stmts] : c->items()) {
      if (!stmts.is_array()) throw ParseError("claims." + rel + " must be a list");
      auto& dst = doc.claims[rel];
      for (const auto& s : stmts) dst.push_back(parse_statement(rel, s));
    }
  }
  if (auto pm = j.find("property_meta"); pm != j.end() && !pm->is_null()) {
    PropertyMeta meta;
    meta.is_meta = get_bool(*pm, "is_meta");
    meta.is_restrictive_qualifier = get_bool(*pm, "is_restrictive_qualifier");
    if (auto cs = pm->find("constraints"); cs != pm->end()) {
      for (const auto& c : *cs) {
        PropertyConstraint pc;
        pc.kind = parse_constraint_kind(get_string(c, "kind", "other"));
        if (auto sep = c.find("separators"); sep != c.end())
          for (const auto& s : *sep) pc.separators.push_back(s.get<std::string>());
        meta.constraints.push_back(std::move(pc));
      }
    }
    doc.property_meta = std::move(meta);
  }
  return doc;
}

json entity_doc_to_json(const EntityDoc& doc) {
  json out;
  out["id"] = doc.id;
  out["kind"] = doc.kind == EntityKind::Item ? "item" : "property";
  if (!doc.label.empty()) out["label"] = doc.label;
  if (!doc.description.empty()) out["description"] = doc.description;
  if (!doc.datatype.empty()) out["datatype"] = doc.datatype;
  out["sitelink"] = {{"exists", doc.sitelink.exists},
                     {"page_kind", std::string(to_string(doc.sitelink.page_kind))}};
  json claims = json::object();
  for (const auto& [rel, stmts] : doc.claims) {
    json arr = json::array();
    for (const auto& st : stmts) arr.push_back(statement_to_json(st));
    claims[rel] = std::move(arr);
  }
  out["claims"] = std::move(claims);
  if (doc.property_meta) {
    json cs = json::array();
    for (const auto& c : doc.property_meta->constraints)
      cs.push_back({{"kind", std::string(to_string(c.kind))}, {"separators", c.separators}});
    out["property_meta"] = {{"is_meta", doc.property_meta->is_meta},
                            {"is_restrictive_qualifier", doc.property_meta->is_restrictive_qualifier},
                            {"constraints", std::move(cs)}};
  }
  return out;
}

FunctionalFlags temporal_functional(const EntityDoc& property) {
  FunctionalFlags out;
  if (!property.property_meta) return out;
  for (const auto& c : property.property_meta->constraints) {
    if (c.kind != ConstraintKind::SingleValue && c.kind != ConstraintKind::SingleBestValue) continue;
    out.is_functional = true;
    for (const auto& sep : c.separators)
      if (is_temporal_qualifier(sep)) out.is_temporal_functional = true;
  }
  return out;
}

RelationMeta relation_meta_from_doc(const EntityDoc& property) {
  RelationMeta m;
  m.id = RelationId(property.id, property.label);
  auto flags = temporal_functional(property);
  m.is_functional = flags.is_functional;
  m.is_temporal_functional = flags.is_temporal_functional;
  if (property.property_meta) {
    m.is_meta = property.property_meta->is_meta;
    m.is_restrictive_qualifier = property.property_meta->is_restrictive_qualifier;
  }
  m.datatype = property.datatype;
  return m;
}

json relation_meta_to_json(const RelationMeta& m) {
  return {{"id", m.id.id},
          {"label", m.id.label},
          {"is_meta", m.is_meta},
          {"is_functional", m.is_functional},
          {"is_temporal_functional", m.is_temporal_functional},
          {"is_restrictive_qualifier", m.is_restrictive_qualifier},
          {"datatype", m.datatype}};
}

RelationMeta relation_meta_from_json(const json& j) {
  RelationMeta m;
  m.id = RelationId(get_string(j, "id"), get_string(j, "label"));
  m.is_meta = get_bool(j, "is_meta");
  m.is_functional = get_bool(j, "is_functional");
  m.is_temporal_functional = get_bool(j, "is_temporal_functional");
  m.is_restrictive_qualifier = get_bool(j, "is_restrictive_qualifier");
  m.datatype = get_string(j, "datatype");
  return m;
}

// --- LineSource ------------------------------------------------------------

namespace {

class GzLineSource : public LineSource {
 public:
  explicit GzLineSource(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw IoError("cannot open '" + path + "'");
    gzbuffer(file_, 1 << 17);
  }
  ~GzLineSource() override {
    if (file_) gzclose(file_);
  }
  GzLineSource(const GzLineSource&) = delete;
  GzLineSource& operator=(const GzLineSource&) = delete;

  bool next(std::string& line) override {
    line.clear();
    char chunk[8192];
    bool any = false;
    while (gzgets(file_, chunk, sizeof chunk) != nullptr) {
      any = true;
      std::string_view piece(chunk);
      if (!piece.empty() && piece.back() == '\n') {
        piece.remove_suffix(1);
        line.append(piece);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      line.append(piece);
    }
    int err = 0;
    const char* msg = gzerror(file_, &err);
    if (err != Z_OK && err != Z_STREAM_END) throw IoError(std::string("read error: ") + msg);
    return any;
  }

 private:
  gzFile file_;
};

class StreamLineSource : public LineSource {
 public:
  explicit StreamLineSource(std::istream& in) : in_(in) {}
  bool next(std::string& line) override {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

 private:
  std::istream& in_;
};

}  // namespace

std::unique_ptr<LineSource> LineSource::open_file(const std::string& path) {
  return std::make_unique<GzLineSource>(path);
}

std::unique_ptr<LineSource> LineSource::from_stream(std::istream& in) {
  return std::make_unique<StreamLineSource>(in);
}

// --- SnapshotReader --------------------------------------------------------

SnapshotReader::SnapshotReader(std::unique_ptr<LineSource> src, ErrorPolicy policy,
                               std::function<void(const SchemaError&)> on_error)
    : src_(std::move(src)), policy_(policy), on_error_(std::move(on_error)) {}

std::optional<EntityDoc> SnapshotReader::next() {
  while (src_->next(buf_)) {
    ++line_no_;
    if (buf_.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      return parse_entity_doc(json::parse(buf_));
    } catch (const std::exception& e) {
      SchemaError err(line_no_, e.what());
      if (policy_ == ErrorPolicy::Abort) throw err;
      if (on_error_) on_error_(err);
      errors_.push_back(std::move(err));
    }
  }
  return std::nullopt;
}

RelationMetaMap load_relation_meta(const std::vector<std::string>& paths) {
  RelationMetaMap out;
  for (const auto& path : paths) {
    SnapshotReader reader(LineSource::open_file(path));
    while (auto doc = reader.next()) {
      if (doc->kind != EntityKind::Property) continue;
      out[doc->id] = relation_meta_from_doc(*doc);
    }
  }
  return out;
}

// --- Popularity ------------------------------------------------------------

std::uint64_t PopularityTable::get(const std::string& id) const {
  auto it = counts_.find(id);
  return it == counts_.end() ? 0 : it->second;
}

PopularityLoad load_popularity(std::istream& in) {
  PopularityLoad out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      out.errors.emplace_back(line_no, "expected '<entity-id>\\t<count>'");
      continue;
    }
    std::string_view count_text(line.data() + tab + 1, line.size() - tab - 1);
    std::uint64_t count = 0;
    auto [p, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc{} || p != count_text.data() + count_text.size() || count_text.empty()) {
      out.errors.emplace_back(line_no, "malformed count '" + std::string(count_text) + "'");
      continue;
    }
    out.table.set(line.substr(0, tab), count);
  }
  return out;
}

PopularityLoad load_popularity(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_popularity(in);
}

}  // namespace factdelta
