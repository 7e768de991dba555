#include "pisa/data/sessions.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pisa/common/errors.hpp"

namespace pisa::data {

std::vector<Session> sessionize(std::span<const Event> events, Timestamp window) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].timestamp < events[i - 1].timestamp) throw DataError("sessionize: event stream is not time-sorted");

  struct Open {
    Timestamp start = 0;
    Session session;
    bool has_buy = false;
  };
  std::vector<Session> out;
  std::vector<Timestamp> starts;
  auto close = [&](Open& o) {
    if (o.session.clicks.empty()) return;
    o.session.label = o.has_buy ? 1 : 0;
    o.session.day = day_of(o.session.clicks.front().timestamp);
    starts.push_back(o.start);
    out.push_back(std::move(o.session));
  };

  std::map<UserId, Open> open;
  for (const Event& e : events) {
    auto it = open.find(e.user);
    if (it != open.end() && e.timestamp > it->second.start + window) {
      close(it->second);
      open.erase(it);
      it = open.end();
    }
    if (it == open.end()) {
      Open o;
      o.start = e.timestamp;
      o.session.user = e.user;
      it = open.emplace(e.user, std::move(o)).first;
    }
    if (e.type == EventType::click)
      it->second.session.clicks.push_back(ClickEvent{e.item, e.timestamp, e.user});
    else
      it->second.has_buy = true;
  }
  for (auto& [user, o] : open) close(o);

  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (starts[a] != starts[b]) return starts[a] < starts[b];
    return raw(out[a].user) < raw(out[b].user);
  });
  std::vector<Session> sorted;
  sorted.reserve(out.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted.push_back(std::move(out[order[k]]));
    sorted.back().id = k;
  }
  return sorted;
}

PaddedSequence pad_or_prune(std::span<const ClickEvent> clicks, std::size_t max_len) {
  if (max_len < 1) throw ConfigError("pad_or_prune: max_len must be >= 1");
  PaddedSequence p;
  p.slots.assign(max_len, std::nullopt);
  const std::size_t kept = std::min(clicks.size(), max_len);
  const std::size_t skip = clicks.size() - kept;
  const std::size_t pad = max_len - kept;
  for (std::size_t k = 0; k < kept; ++k) p.slots[pad + k] = clicks[skip + k].item;
  p.original_length = kept;
  return p;
}

Split chronological_split(std::span<const Session> sessions, Day val_day, Day test_day) {
  if (!(val_day < test_day)) throw ConfigError("chronological_split: validation day must precede test day");
  Split s;
  for (const Session& x : sessions) {
    if (x.day < val_day)
      s.train.push_back(x);
    else if (x.day == val_day)
      s.validation.push_back(x);
    else if (x.day == test_day)
      s.test.push_back(x);
  }
  if (s.train.empty()) s.warnings.push_back("empty train partition");
  if (s.validation.empty()) s.warnings.push_back("empty validation partition (day " + std::to_string(val_day) + ")");
  if (s.test.empty()) s.warnings.push_back("empty test partition (day " + std::to_string(test_day) + ")");
  return s;
}

std::pair<Day, Day> last_two_days(std::span<const Session> sessions) {
  std::set<Day> days;
  for (const Session& s : sessions) days.insert(s.day);
  if (days.size() < 2) throw DataError("need sessions on at least two distinct days to form validation and test sets");
  auto it = days.rbegin();
  const Day test = *it++;
  return {*it, test};
}

std::vector<Event> events_from_sessions(std::span<const Session> sessions, std::span<const ItemId> bought_items) {
  if (bought_items.size() != sessions.size()) throw DataError("events_from_sessions: one bought item per session");
  std::vector<Event> events;
  for (std::size_t k = 0; k < sessions.size(); ++k) {
    const Session& s = sessions[k];
    for (const ClickEvent& c : s.clicks) events.push_back(Event{c.timestamp, c.user, c.item, EventType::click});
    if (s.label == 1 && !s.clicks.empty())
      events.push_back(Event{s.clicks.back().timestamp + 60, s.user, bought_items[k], EventType::buy});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return raw(a.user) < raw(b.user);
  });
  return events;
}

}  // namespace pisa::data
