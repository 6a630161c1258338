#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace factdelta {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

// Entity identifier ("Q42"). Equality, ordering and hashing use the id only;
// the label rides along for rendering.
struct EntityId {
  std::string id;
  std::string label;

  EntityId() = default;
  explicit EntityId(std::string i, std::string l = {});

  bool operator==(const EntityId& o) const { return id == o.id; }
  std::strong_ordering operator<=>(const EntityId& o) const { return id <=> o.id; }
};

struct RelationId {
  std::string id;
  std::string label;

  RelationId() = default;
  explicit RelationId(std::string i, std::string l = {});

  bool operator==(const RelationId& o) const { return id == o.id; }
  std::strong_ordering operator<=>(const RelationId& o) const { return id <=> o.id; }
};

// Temporal qualifier properties.
inline constexpr std::string_view kStartTime = "P580";
inline constexpr std::string_view kEndTime = "P582";
inline constexpr std::string_view kPointInTime = "P585";

bool is_temporal_qualifier(std::string_view relation);

// ---------------------------------------------------------------------------
// Calendar dates
// ---------------------------------------------------------------------------

// Proleptic Gregorian day, UTC. Sub-day precision is truncated.
struct Date {
  std::int64_t days = 0;  // since 1970-01-01

  static Date from_ymd(int year, unsigned month, unsigned day);
  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::string iso() const;  // YYYY-MM-DD, with sign for years outside 0..9999

  auto operator<=>(const Date&) const = default;
};

// Accepts "YYYY-MM-DD" and the Wikidata form "+YYYY-MM-DDThh:mm:ssZ".
// Month or day 00 (year/month precision) maps to 01.
Date parse_date(std::string_view text);

// A time bound: a date or one of the infinities.
class Timestamp {
 public:
  constexpr Timestamp() : v_(kNegInf) {}
  constexpr explicit Timestamp(Date d) : v_(d.days) {}

  static constexpr Timestamp neg_inf() { return Timestamp(kNegInf, 0); }
  static constexpr Timestamp pos_inf() { return Timestamp(kPosInf, 0); }

  bool is_neg_inf() const { return v_ == kNegInf; }
  bool is_pos_inf() const { return v_ == kPosInf; }
  bool is_finite() const { return !is_neg_inf() && !is_pos_inf(); }
  Date date() const;
  std::int64_t raw() const { return v_; }

  std::string str() const;  // "-inf", "+inf" or ISO date
  static Timestamp parse(std::string_view text);

  auto operator<=>(const Timestamp&) const = default;

 private:
  static constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min();
  static constexpr std::int64_t kPosInf = std::numeric_limits<std::int64_t>::max();
  constexpr Timestamp(std::int64_t raw, int) : v_(raw) {}
  std::int64_t v_;
};

// ---------------------------------------------------------------------------
// Object values
// ---------------------------------------------------------------------------

// Exact decimal kept in canonical text form: no leading '+', no redundant
// zeros, "-0" normalised to "0". Two decimals are equal iff their canonical
// texts are equal.
class Decimal {
 public:
  Decimal() : text_("0") {}
  static Decimal parse(std::string_view text);
  const std::string& str() const { return text_; }
  double approx() const;

  auto operator<=>(const Decimal&) const = default;

 private:
  explicit Decimal(std::string t) : text_(std::move(t)) {}
  std::string text_;
};

struct EntityValue {
  EntityId entity;
  auto operator<=>(const EntityValue&) const = default;
  bool operator==(const EntityValue&) const = default;
};
struct QuantityValue {
  Decimal amount;
  std::string unit;  // empty when dimensionless
  auto operator<=>(const QuantityValue&) const = default;
};
struct TimeValue {
  Date date;
  int precision = 11;  // 9 year, 10 month, 11 day
  auto operator<=>(const TimeValue&) const = default;
};
struct TextValue {
  std::string text;
  auto operator<=>(const TextValue&) const = default;
};
struct MonolingualTextValue {
  std::string text;
  std::string language;
  auto operator<=>(const MonolingualTextValue&) const = default;
};
struct UrlValue {
  std::string url;
  auto operator<=>(const UrlValue&) const = default;
};
struct ExternalIdValue {
  std::string id;
  auto operator<=>(const ExternalIdValue&) const = default;
};
struct GlobeCoordinateValue {
  double latitude = 0;
  double longitude = 0;
  auto operator<=>(const GlobeCoordinateValue&) const = default;
};
struct SomeValue {
  auto operator<=>(const SomeValue&) const = default;
};
struct NoValue {
  auto operator<=>(const NoValue&) const = default;
};

using ObjectValue =
    std::variant<EntityValue, QuantityValue, TimeValue, TextValue, MonolingualTextValue, UrlValue,
                 ExternalIdValue, GlobeCoordinateValue, SomeValue, NoValue>;

// Stable textual key; sorting objects by it defines every object order used
// in the pipeline.
std::string canonical_key(const ObjectValue& v);
const EntityId* as_entity(const ObjectValue& v);
const TimeValue* as_time(const ObjectValue& v);

// ---------------------------------------------------------------------------
// Intervals, statements, triples
// ---------------------------------------------------------------------------

struct TimeInterval {
  Timestamp start = Timestamp::neg_inf();
  Timestamp end = Timestamp::pos_inf();
  bool from_point_in_time = false;

  bool inverted() const { return start > end; }
  auto operator<=>(const TimeInterval&) const = default;
};

enum class Rank { Preferred, Normal, Deprecated };
std::string_view to_string(Rank r);
Rank parse_rank(std::string_view s);

using QualifierMap = std::map<std::string, std::vector<ObjectValue>>;

struct Statement {
  RelationId relation;
  ObjectValue object;
  Rank rank = Rank::Normal;
  QualifierMap qualifiers;

  bool operator==(const Statement&) const = default;
};

// Start/end qualifiers win over point-in-time; a lone point in time t yields
// [t, +inf]. Throws ParseError naming the qualifier when its value is not a
// time.
TimeInterval interval_from_qualifiers(const QualifierMap& qualifiers);

struct Triple {
  EntityId subject;
  RelationId relation;
  ObjectValue object;
  TimeInterval interval;
  Rank rank = Rank::Normal;
};

// Identity of a fact for diffing: (subject, relation, object).
struct TripleKey {
  std::string subject;
  std::string relation;
  std::string object;  // canonical_key of the object

  auto operator<=>(const TripleKey&) const = default;
};
TripleKey key_of(const Triple& t);

struct GroupKey {
  EntityId subject;
  RelationId relation;

  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

enum class Label { New, Obsolete, Static, Ignore, Unknown };
std::string_view to_string(Label l);
Label parse_label(std::string_view s);

enum class Scenario { ReplaceObject, Archive, AddObject, AddRelation, AddEntity, Other };
std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view s);

}  // namespace factdelta

template <>
struct std::hash<factdelta::EntityId> {
  std::size_t operator()(const factdelta::EntityId& e) const noexcept {
    return std::hash<std::string>{}(e.id);
  }
};
