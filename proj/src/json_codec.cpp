#include "factdelta/json_codec.hpp"

namespace factdelta {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError(std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw ParseError(std::string("field '") + field + "' is not a string");
  return v.get<std::string>();
}

TimeValue decode_time(const json& v) {
  if (v.is_string()) return TimeValue{parse_date(v.get<std::string>()), 11};
  if (v.is_object()) {
    TimeValue t{parse_date(require_string(v, "time")), 11};
    if (auto p = v.find("precision"); p != v.end()) t.precision = p->get<int>();
    return t;
  }
  throw ParseError("time value must be a string or object");
}

QuantityValue decode_quantity(const json& v) {
  QuantityValue q;
  if (v.is_string()) {
    q.amount = Decimal::parse(v.get<std::string>());
  } else if (v.is_number()) {
    q.amount = Decimal::parse(v.dump());
  } else if (v.is_object()) {
    const json& a = require(v, "amount");
    q.amount = Decimal::parse(a.is_string() ? a.get<std::string>() : a.dump());
    if (auto u = v.find("unit"); u != v.end() && u->is_string()) {
      q.unit = u->get<std::string>();
      if (q.unit == "1") q.unit.clear();
    }
  } else {
    throw ParseError("quantity value must be a string, number or object");
  }
  return q;
}

}  // namespace

std::string_view datatype_of(const ObjectValue& v) {
  return std::visit(overloaded{
                        [](const EntityValue&) { return std::string_view("wikibase-item"); },
                        [](const QuantityValue&) { return std::string_view("quantity"); },
                        [](const TimeValue&) { return std::string_view("time"); },
                        [](const TextValue&) { return std::string_view("string"); },
                        [](const MonolingualTextValue&) { return std::string_view("monolingualtext"); },
                        [](const UrlValue&) { return std::string_view("url"); },
                        [](const ExternalIdValue&) { return std::string_view("external-id"); },
                        [](const GlobeCoordinateValue&) { return std::string_view("globe-coordinate"); },
                        [](const SomeValue&) { return std::string_view(""); },
                        [](const NoValue&) { return std::string_view(""); },
                    },
                    v);
}

json encode_object(const ObjectValue& v, bool compact) {
  json out = json::object();
  if (std::holds_alternative<SomeValue>(v)) {
    out["snaktype"] = "somevalue";
    return out;
  }
  if (std::holds_alternative<NoValue>(v)) {
    out["snaktype"] = "novalue";
    return out;
  }
  if (!compact) out["snaktype"] = "value";
  out["datatype"] = std::string(datatype_of(v));
  std::visit(overloaded{
                 [&](const EntityValue& e) { out["value"] = e.entity.id; },
                 [&](const QuantityValue& q) {
                   json val = {{"amount", q.amount.str()}};
                   if (!q.unit.empty()) val["unit"] = q.unit;
                   out["value"] = std::move(val);
                 },
                 [&](const TimeValue& t) {
                   if (t.precision == 11) {
                     out["value"] = t.date.iso();
                   } else {
                     out["value"] = {{"time", t.date.iso()}, {"precision", t.precision}};
                   }
                 },
                 [&](const TextValue& t) { out["value"] = t.text; },
                 [&](const MonolingualTextValue& m) {
                   out["value"] = {{"text", m.text}, {"language", m.language}};
                 },
                 [&](const UrlValue& u) { out["value"] = u.url; },
                 [&](const ExternalIdValue& x) { out["value"] = x.id; },
                 [&](const GlobeCoordinateValue& g) {
                   out["value"] = {{"latitude", g.latitude}, {"longitude", g.longitude}};
                 },
                 [](const SomeValue&) {},
                 [](const NoValue&) {},
             },
             v);
  return out;
}

ObjectValue decode_object(const json& snak) {
  if (!snak.is_object()) throw ParseError("snak must be an object");
  std::string snaktype = "value";
  if (auto it = snak.find("snaktype"); it != snak.end()) snaktype = it->get<std::string>();
  if (snaktype == "somevalue") return SomeValue{};
  if (snaktype == "novalue") return NoValue{};
  if (snaktype != "value") throw ParseError("unknown snaktype '" + snaktype + "'");

  const std::string datatype = require_string(snak, "datatype");
  const json& v = require(snak, "value");
  if (datatype == "wikibase-item" || datatype == "wikibase-property") {
    if (!v.is_string()) throw ParseError("entity value must be a string id");
    return EntityValue{EntityId(v.get<std::string>())};
  }
  if (datatype == "quantity") return decode_quantity(v);
  if (datatype == "time") return decode_time(v);
  if (datatype == "string") return TextValue{v.get<std::string>()};
  if (datatype == "monolingualtext") {
    return MonolingualTextValue{require_string(v, "text"), require_string(v, "language")};
  }
  if (datatype == "url" || datatype == "commonsMedia") return UrlValue{v.get<std::string>()};
  if (datatype == "external-id") return ExternalIdValue{v.get<std::string>()};
  if (datatype == "globe-coordinate") {
    return GlobeCoordinateValue{require(v, "latitude").get<double>(),
                                require(v, "longitude").get<double>()};
  }
  throw ParseError("unsupported datatype '" + datatype + "'");
}

json encode_qualifiers(const QualifierMap& q) {
  json out = json::object();
  for (const auto& [prop, values] : q) {
    json arr = json::array();
    for (const auto& v : values) arr.push_back(encode_object(v, true));
    out[prop] = std::move(arr);
  }
  return out;
}

QualifierMap decode_qualifiers(const json& j) {
  QualifierMap out;
  if (!j.is_object()) throw ParseError("qualifiers must be an object");
  for (const auto& [prop, values] : j.items()) {
    if (!values.is_array()) throw ParseError("qualifier " + prop + " must be a list");
    auto& dst = out[prop];
    for (const auto& v : values) {
      try {
        dst.push_back(decode_object(v));
      } catch (const ParseError& e) {
        throw ParseError("qualifier " + prop + ": " + e.what());
      }
    }
  }
  return out;
}

json encode_interval(const TimeInterval& iv) {
  json out = {{"start", iv.start.str()}, {"end", iv.end.str()}};
  if (iv.from_point_in_time) out["point_in_time"] = true;
  return out;
}

TimeInterval decode_interval(const json& j) {
  TimeInterval iv;
  iv.start = Timestamp::parse(require_string(j, "start"));
  iv.end = Timestamp::parse(require_string(j, "end"));
  if (auto p = j.find("point_in_time"); p != j.end()) iv.from_point_in_time = p->get<bool>();
  return iv;
}

json encode_triple(const Triple& t) {
  return {{"subject", t.subject.id},
          {"relation", t.relation.id},
          {"object", encode_object(t.object, true)},
          {"interval", encode_interval(t.interval)},
          {"rank", std::string(to_string(t.rank))}};
}

Triple decode_triple(const json& j) {
  Triple t;
  t.subject = EntityId(require_string(j, "subject"));
  t.relation = RelationId(require_string(j, "relation"));
  t.object = decode_object(require(j, "object"));
  t.interval = decode_interval(require(j, "interval"));
  t.rank = parse_rank(require_string(j, "rank"));
  return t;
}

}  // namespace factdelta
