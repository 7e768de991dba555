#pragma once

#include <span>
#include <string>
#include <vector>

#include "pisa/data/types.hpp"

namespace pisa::data {

/// Groups a time-sorted event stream into per-user sessions. A user's session
/// starts at its first event and covers every later event with timestamp
/// <= start + window. Sessions without clicks are dropped. Output is ordered
/// by (start time, user id).
std::vector<Session> sessionize(std::span<const Event> events, Timestamp window = kSecondsPerDay);

/// Prepends PAD slots to short sessions and keeps the last max_len clicks of long ones.
PaddedSequence pad_or_prune(std::span<const ClickEvent> clicks, std::size_t max_len = 10);

struct Split {
  std::vector<Session> train;
  std::vector<Session> validation;
  std::vector<Session> test;
  std::vector<std::string> warnings;
};

/// validation = day == val_day, test = day == test_day, train = day < val_day.
Split chronological_split(std::span<const Session> sessions, Day val_day, Day test_day);

/// The two latest distinct session days, as (val_day, test_day).
std::pair<Day, Day> last_two_days(std::span<const Session> sessions);

/// Flattens sessions back into a time-sorted event stream (clicks, plus one buy
/// after the last click for positive sessions).
std::vector<Event> events_from_sessions(std::span<const Session> sessions, std::span<const ItemId> bought_items);

}  // namespace pisa::data
