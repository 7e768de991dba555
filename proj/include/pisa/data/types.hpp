#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pisa::data {

enum class ItemId : std::uint64_t {};
enum class UserId : std::uint64_t {};

constexpr std::uint64_t raw(ItemId id) { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t raw(UserId id) { return static_cast<std::uint64_t>(id); }

using Timestamp = std::int64_t;  // seconds since the Unix epoch
using Day = std::int64_t;        // UTC calendar day number (timestamp / 86400, floored)

constexpr Timestamp kSecondsPerDay = 86400;

Day day_of(Timestamp t);

enum class EventType { click, buy };

struct Event {
  Timestamp timestamp = 0;
  UserId user{};
  ItemId item{};
  EventType type = EventType::click;

  friend bool operator==(const Event&, const Event&) = default;
};

struct ClickEvent {
  ItemId item{};
  Timestamp timestamp = 0;
  UserId user{};

  friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

/// One user's clicks within a 24h window, labelled 1 if any buy fell in the window.
struct Session {
  std::uint64_t id = 0;
  UserId user{};
  std::vector<ClickEvent> clicks;
  int label = 0;
  Day day = 0;

  friend bool operator==(const Session&, const Session&) = default;
};

/// Raw catalog entry as stored on disk.
struct CatalogRecord {
  ItemId id{};
  int category = 1;  // 1..K
  std::string title;
  std::string description;

  friend bool operator==(const CatalogRecord&, const CatalogRecord&) = default;
};

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CatalogRecord> records);

  const std::vector<CatalogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const CatalogRecord* find(ItemId id) const;
  /// Largest category id present (0 for an empty catalog).
  int max_category() const;

 private:
  std::vector<CatalogRecord> records_;
  std::unordered_map<ItemId, std::size_t> index_;
};

/// Catalog entry with text resolved against a vocabulary.
struct Item {
  ItemId id{};
  int category = 1;
  std::vector<int> title_tokens;
  std::vector<int> description_tokens;
};

/// Fixed-length view of a session: leading PAD slots (nullopt) then real items.
struct PaddedSequence {
  std::vector<std::optional<ItemId>> slots;
  std::size_t original_length = 0;
};

}  // namespace pisa::data
