#include "factdelta/kb_model.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace factdelta {

EntityId::EntityId(std::string i, std::string l) : id(std::move(i)), label(std::move(l)) {
  if (id.empty()) throw ParseError("empty entity id");
}

RelationId::RelationId(std::string i, std::string l) : id(std::move(i)), label(std::move(l)) {
  if (id.empty()) throw ParseError("empty relation id");
}

bool is_temporal_qualifier(std::string_view relation) {
  return relation == kStartTime || relation == kEndTime || relation == kPointInTime;
}

// --- Date ------------------------------------------------------------------

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) throw ParseError("invalid calendar date");
  return Date{sys_days{ymd}.time_since_epoch().count()};
}

namespace {
std::chrono::year_month_day ymd_of(const Date& d) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{d.days}}};
}
}  // namespace

int Date::year() const { return int(ymd_of(*this).year()); }
unsigned Date::month() const { return unsigned(ymd_of(*this).month()); }
unsigned Date::day() const { return unsigned(ymd_of(*this).day()); }

std::string Date::iso() const {
  auto ymd = ymd_of(*this);
  int y = int(ymd.year());
  char buf[32];
  if (y >= 0 && y <= 9999) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, unsigned(ymd.month()), unsigned(ymd.day()));
  } else {
    std::snprintf(buf, sizeof buf, "%+05d-%02u-%02u", y, unsigned(ymd.month()), unsigned(ymd.day()));
  }
  return buf;
}

namespace {

template <typename Int>
Int parse_int(std::string_view s, std::string_view what) {
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    throw ParseError("malformed " + std::string(what) + " in '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Date parse_date(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (auto t = s.find('T'); t != std::string_view::npos) s = s.substr(0, t);
  auto dash1 = s.find('-');
  if (dash1 == std::string_view::npos) throw ParseError("malformed date '" + std::string(text) + "'");
  auto dash2 = s.find('-', dash1 + 1);
  if (dash2 == std::string_view::npos) throw ParseError("malformed date '" + std::string(text) + "'");
  int year = parse_int<int>(s.substr(0, dash1), "year");
  unsigned month = parse_int<unsigned>(s.substr(dash1 + 1, dash2 - dash1 - 1), "month");
  unsigned day = parse_int<unsigned>(s.substr(dash2 + 1), "day");
  if (negative) year = -year;
  if (month == 0) month = 1;
  if (day == 0) day = 1;
  try {
    return Date::from_ymd(year, month, day);
  } catch (const ParseError&) {
    throw ParseError("invalid calendar date '" + std::string(text) + "'");
  }
}

// --- Timestamp -------------------------------------------------------------

Date Timestamp::date() const {
  if (!is_finite()) throw std::logic_error("date() on infinite timestamp");
  return Date{v_};
}

std::string Timestamp::str() const {
  if (is_neg_inf()) return "-inf";
  if (is_pos_inf()) return "+inf";
  return Date{v_}.iso();
}

Timestamp Timestamp::parse(std::string_view text) {
  if (text == "-inf") return neg_inf();
  if (text == "+inf") return pos_inf();
  return Timestamp(parse_date(text));
}

// --- Decimal ---------------------------------------------------------------

Decimal Decimal::parse(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  auto all_digits = [](std::string_view v) {
    for (char c : v)
      if (c < '0' || c > '9') return false;
    return true;
  };
  if ((int_part.empty() && frac_part.empty()) || !all_digits(int_part) || !all_digits(frac_part) ||
      (dot != std::string_view::npos && frac_part.empty())) {
    throw ParseError("malformed decimal '" + std::string(text) + "'");
  }
  while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);
  std::string out(int_part.empty() ? "0" : int_part);
  if (!frac_part.empty()) {
    out += '.';
    out += frac_part;
  }
  if (negative && out != "0") out.insert(out.begin(), '-');
  return Decimal(std::move(out));
}

double Decimal::approx() const { return std::strtod(text_.c_str(), nullptr); }

// --- ObjectValue -----------------------------------------------------------

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string canonical_key(const ObjectValue& v) {
  return std::visit(
      overloaded{
          [](const EntityValue& e) { return "E:" + e.entity.id; },
          [](const QuantityValue& q) { return "Q:" + q.amount.str() + "|" + q.unit; },
          [](const TimeValue& t) { return "T:" + t.date.iso() + "/" + std::to_string(t.precision); },
          [](const TextValue& t) { return "S:" + t.text; },
          [](const MonolingualTextValue& m) { return "M:" + m.language + ":" + m.text; },
          [](const UrlValue& u) { return "U:" + u.url; },
          [](const ExternalIdValue& x) { return "X:" + x.id; },
          [](const GlobeCoordinateValue& g) {
            std::ostringstream os;
            os.precision(17);
            os << "G:" << g.latitude << "," << g.longitude;
            return os.str();
          },
          [](const SomeValue&) { return std::string("~somevalue"); },
          [](const NoValue&) { return std::string("~novalue"); },
      },
      v);
}

const EntityId* as_entity(const ObjectValue& v) {
  if (auto* e = std::get_if<EntityValue>(&v)) return &e->entity;
  return nullptr;
}

const TimeValue* as_time(const ObjectValue& v) { return std::get_if<TimeValue>(&v); }

// --- Intervals -------------------------------------------------------------

namespace {

std::optional<Timestamp> qualifier_time(const QualifierMap& q, std::string_view prop) {
  auto it = q.find(std::string(prop));
  if (it == q.end() || it->second.empty()) return std::nullopt;
  const ObjectValue& v = it->second.front();
  if (std::holds_alternative<SomeValue>(v) || std::holds_alternative<NoValue>(v)) return std::nullopt;
  const TimeValue* t = as_time(v);
  if (!t) throw ParseError("qualifier " + std::string(prop) + " does not hold a time value");
  return Timestamp(t->date);
}

}  // namespace

TimeInterval interval_from_qualifiers(const QualifierMap& qualifiers) {
  TimeInterval out;
  auto start = qualifier_time(qualifiers, kStartTime);
  auto end = qualifier_time(qualifiers, kEndTime);
  auto point = qualifier_time(qualifiers, kPointInTime);
  if (start || end) {
    if (start) out.start = *start;
    if (end) out.end = *end;
  } else if (point) {
    out.start = *point;
    out.from_point_in_time = true;
  }
  return out;
}

TripleKey key_of(const Triple& t) { return {t.subject.id, t.relation.id, canonical_key(t.object)}; }

// --- Enums -----------------------------------------------------------------

std::string_view to_string(Rank r) {
  switch (r) {
    case Rank::Preferred: return "preferred";
    case Rank::Normal: return "normal";
    case Rank::Deprecated: return "deprecated";
  }
  return "normal";
}

Rank parse_rank(std::string_view s) {
  if (s == "preferred") return Rank::Preferred;
  if (s == "normal") return Rank::Normal;
  if (s == "deprecated") return Rank::Deprecated;
  throw ParseError("unknown rank '" + std::string(s) + "'");
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::New: return "new";
    case Label::Obsolete: return "obsolete";
    case Label::Static: return "static";
    case Label::Ignore: return "ignore";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

Label parse_label(std::string_view s) {
  for (Label l : {Label::New, Label::Obsolete, Label::Static, Label::Ignore, Label::Unknown})
    if (to_string(l) == s) return l;
  throw ParseError("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::ReplaceObject: return "ReplaceObject";
    case Scenario::Archive: return "Archive";
    case Scenario::AddObject: return "AddObject";
    case Scenario::AddRelation: return "AddRelation";
    case Scenario::AddEntity: return "AddEntity";
    case Scenario::Other: return "Other";
  }
  return "Other";
}

Scenario parse_scenario(std::string_view s) {
  for (Scenario v : {Scenario::ReplaceObject, Scenario::Archive, Scenario::AddObject,
                     Scenario::AddRelation, Scenario::AddEntity, Scenario::Other})
    if (to_string(v) == s) return v;
  throw ParseError("unknown scenario '" + std::string(s) + "'");
}

}  // namespace factdelta
