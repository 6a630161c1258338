#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "factdelta/json_codec.hpp"
#include "factdelta/kb_model.hpp"

namespace factdelta {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::size_t line, std::string reason);
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

enum class EntityKind { Item, Property };
enum class PageKind { Article, List, Category, Template, Disambiguation, ArticleSection };

std::string_view to_string(PageKind k);
PageKind parse_page_kind(std::string_view s);

struct Sitelink {
  bool exists = false;
  PageKind page_kind = PageKind::Article;
  bool operator==(const Sitelink&) const = default;
};

enum class ConstraintKind { SingleValue, SingleBestValue, Other };

struct PropertyConstraint {
  ConstraintKind kind = ConstraintKind::Other;
  std::vector<std::string> separators;
  bool operator==(const PropertyConstraint&) const = default;
};

struct PropertyMeta {
  bool is_meta = false;
  bool is_restrictive_qualifier = false;
  std::vector<PropertyConstraint> constraints;
  bool operator==(const PropertyMeta&) const = default;
};

// One line of a snapshot dump. Labels and descriptions are optional
// extensions used only for rendering.
struct EntityDoc {
  std::string id;
  EntityKind kind = EntityKind::Item;
  std::string label;
  std::string description;
  std::string datatype;  // properties only
  Sitelink sitelink;
  std::map<std::string, std::vector<Statement>> claims;
  std::optional<PropertyMeta> property_meta;

  bool operator==(const EntityDoc&) const = default;
};

EntityDoc parse_entity_doc(const json& j);
json entity_doc_to_json(const EntityDoc& doc);

struct RelationMeta {
  RelationId id;
  bool is_meta = false;
  bool is_functional = false;
  bool is_temporal_functional = false;
  bool is_restrictive_qualifier = false;
  std::string datatype;
};

using RelationMetaMap = std::unordered_map<std::string, RelationMeta>;

struct FunctionalFlags {
  bool is_functional = false;
  bool is_temporal_functional = false;
  bool operator==(const FunctionalFlags&) const = default;
};

// Functional iff a single-value or single-best-value constraint exists;
// temporal functional iff such a constraint also lists a temporal qualifier
// among its separators.
FunctionalFlags temporal_functional(const EntityDoc& property);
RelationMeta relation_meta_from_doc(const EntityDoc& property);

json relation_meta_to_json(const RelationMeta& m);
RelationMeta relation_meta_from_json(const json& j);

// ---------------------------------------------------------------------------
// Streaming
// ---------------------------------------------------------------------------

// Line source over a plain or gzip file (zlib reads both), or an istream.
class LineSource {
 public:
  static std::unique_ptr<LineSource> open_file(const std::string& path);
  static std::unique_ptr<LineSource> from_stream(std::istream& in);
  virtual ~LineSource() = default;
  // Returns false at end of input. The trailing newline is stripped.
  virtual bool next(std::string& line) = 0;
};

enum class ErrorPolicy { Skip, Abort };

// Single-pass reader yielding one EntityDoc at a time. Under Skip, malformed
// lines are recorded (and passed to the optional callback) and skipped;
// under Abort the first one throws SchemaError.
class SnapshotReader {
 public:
  SnapshotReader(std::unique_ptr<LineSource> src, ErrorPolicy policy = ErrorPolicy::Abort,
                 std::function<void(const SchemaError&)> on_error = {});

  std::optional<EntityDoc> next();
  const std::vector<SchemaError>& errors() const { return errors_; }
  std::size_t line_number() const { return line_no_; }

 private:
  std::unique_ptr<LineSource> src_;
  ErrorPolicy policy_;
  std::function<void(const SchemaError&)> on_error_;
  std::vector<SchemaError> errors_;
  std::string buf_;
  std::size_t line_no_ = 0;
};

// Reads all property documents of a dump (and an optional extra metadata
// file of property lines) into a relation table.
RelationMetaMap load_relation_meta(const std::vector<std::string>& paths);

// ---------------------------------------------------------------------------
// Popularity
// ---------------------------------------------------------------------------

class PopularityTable {
 public:
  void set(const std::string& id, std::uint64_t count) { counts_[id] = count; }
  std::uint64_t get(const std::string& id) const;
  std::size_t size() const { return counts_.size(); }
  const std::unordered_map<std::string, std::uint64_t>& raw() const { return counts_; }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

struct PopularityLoad {
  PopularityTable table;
  std::vector<SchemaError> errors;
};

// Tab-separated "<id>\t<count>" lines; last write wins on duplicates.
PopularityLoad load_popularity(const std::string& path);
PopularityLoad load_popularity(std::istream& in);

}  // namespace factdelta
