#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "factdelta/json_codec.hpp"
#include "factdelta/preprocess.hpp"

namespace factdelta {

enum class Membership : std::uint8_t { OldOnly = 1, Both = 2, NewOnly = 4 };
std::string_view to_string(Membership m);
Membership parse_membership(std::string_view s);

// One statement instance of a key on one side of the diff.
struct SideInstance {
  TimeInterval interval;
  Rank rank = Rank::Normal;
  auto operator<=>(const SideInstance&) const = default;
};

// A distinct (s, r, o) key. A key normally has one instance per side; it
// has several when a snapshot states the same object more than once with
// different qualifiers.
struct DiffEntry {
  ObjectValue object;
  Membership membership = Membership::Both;
  std::vector<SideInstance> old_side;
  std::vector<SideInstance> new_side;

  std::optional<TimeInterval> old_interval() const;
  std::optional<TimeInterval> new_interval() const;
  bool operator==(const DiffEntry&) const = default;
};

struct DiffGroup {
  GroupKey key;
  std::vector<DiffEntry> entries;  // sorted by object key
  bool operator==(const DiffGroup& o) const {
    return key.subject.id == o.key.subject.id && key.relation.id == o.key.relation.id &&
           entries == o.entries;
  }
};

struct GroupStats {
  std::size_t n_minus = 0;
  std::size_t n_zero = 0;
  std::size_t n_plus = 0;
  std::size_t n = 0;
  bool operator==(const GroupStats&) const = default;
};

GroupStats group_stats(const std::vector<DiffEntry>& entries);

class DiffResult {
 public:
  DiffResult() = default;
  explicit DiffResult(std::vector<DiffGroup> groups);

  const std::vector<DiffGroup>& groups() const { return groups_; }
  std::size_t key_count() const;
  std::size_t count(Membership m) const;
  // Bit set of memberships in which the entity occurs as subject or as an
  // entity-valued object.
  std::uint8_t occurrence(const std::string& entity) const;
  // Entities occurring in at least one entry.
  const std::unordered_map<std::string, std::uint8_t>& occurrences() const { return occurs_; }

  // OldOnly and NewOnly swapped, sides exchanged.
  DiffResult mirrored() const;

  bool operator==(const DiffResult& o) const { return groups_ == o.groups_; }

 private:
  std::vector<DiffGroup> groups_;
  std::unordered_map<std::string, std::uint8_t> occurs_;
};

bool entity_occurs_in(const std::string& entity, Membership part, const DiffResult& diff);

// Merge-join of two sorted snapshots, one group at a time, in GroupKey order.
void for_each_diff_group(const PreprocessedSnapshot& old_snap, const PreprocessedSnapshot& new_snap,
                         const std::function<void(DiffGroup&&)>& sink);
DiffResult diff_snapshots(const PreprocessedSnapshot& old_snap, const PreprocessedSnapshot& new_snap);

json diff_group_to_json(const DiffGroup& g);
DiffGroup diff_group_from_json(const json& j);

}  // namespace factdelta
