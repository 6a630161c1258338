#pragma once

#include "json.hpp"

#include "factdelta/kb_model.hpp"

namespace factdelta {

using json = nlohmann::ordered_json;

// Snak encoding shared by the snapshot schema and every stage file:
//   {"snaktype":"value","datatype":"wikibase-item","value":"Q5"}
// "snaktype" is omitted for plain values when `compact` is set.
json encode_object(const ObjectValue& v, bool compact = false);
ObjectValue decode_object(const json& snak);
std::string_view datatype_of(const ObjectValue& v);

json encode_qualifiers(const QualifierMap& q);
QualifierMap decode_qualifiers(const json& j);

json encode_interval(const TimeInterval& iv);
TimeInterval decode_interval(const json& j);

// {"subject","relation","object","interval","rank"}; labels are not stored.
json encode_triple(const Triple& t);
Triple decode_triple(const json& j);

}  // namespace factdelta
