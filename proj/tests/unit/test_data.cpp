#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "pisa/common/errors.hpp"
#include "pisa/common/rng.hpp"
#include "pisa/data/io.hpp"
#include "pisa/data/sessions.hpp"
#include "pisa/data/text.hpp"

using namespace pisa;
using namespace pisa::data;

namespace {

Event click(Timestamp t, std::uint64_t user, std::uint64_t item) {
  return Event{t, UserId{user}, ItemId{item}, EventType::click};
}
Event buy(Timestamp t, std::uint64_t user, std::uint64_t item) { return Event{t, UserId{user}, ItemId{item}, EventType::buy}; }

std::vector<ClickEvent> clicks_of_length(std::size_t n) {
  std::vector<ClickEvent> c;
  for (std::size_t k = 0; k < n; ++k) c.push_back(ClickEvent{ItemId{100 + k}, static_cast<Timestamp>(k), UserId{1}});
  return c;
}

}  // namespace

TEST_CASE("tokenize splits on non-alphanumerics and lowercases") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("a1-b2__c3") == std::vector<std::string>{"a1", "b2", "c3"});
  CHECK(tokenize("Grüße aus") == std::vector<std::string>{"gr", "e", "aus"});
  CHECK(tokenize("  ... ").empty());
  CHECK(tokenize("").empty());
}

TEST_CASE("vocabulary orders by descending frequency then lexicographically") {
  const std::vector<std::string> texts{"b a c", "a b", "a d d", "e"};
  // counts: a 3, b 2, d 2, c 1, e 1
  const auto v = build_vocabulary(texts);
  CHECK(v.size() == 7);
  CHECK(v.word(Vocabulary::kPad) == "<pad>");
  CHECK(v.word(Vocabulary::kOov) == "<oov>");
  CHECK(v.corpus_words() == std::vector<std::string>{"a", "b", "d", "c", "e"});
  CHECK(v.index("zzz") == Vocabulary::kOov);
  CHECK(v.encode("A, zzz d") == std::vector<int>{2, Vocabulary::kOov, 4});
  const auto v2 = build_vocabulary(texts, 2);
  CHECK(v2.corpus_words() == std::vector<std::string>{"a", "b", "d"});
  CHECK_THROWS_AS(build_vocabulary(texts, 0), ConfigError);
  CHECK_THROWS_AS(v.word(7), IndexError);
}

TEST_CASE("vocabulary agrees with a naive counting oracle on random text") {
  Rng rng(17);
  const std::vector<std::string> words{"red", "blue", "green", "x1", "y2", "zeta", "alpha", "omega"};
  std::vector<std::string> texts;
  std::map<std::string, int> counts;
  for (int t = 0; t < 40; ++t) {
    std::string s;
    for (int k = 0; k < 6; ++k) {
      const auto& w = words[rng.below(words.size())];
      counts[w]++;
      s += (rng.bernoulli(0.5) ? std::string(" ") : std::string(", ")) + w;
    }
    texts.push_back(s);
  }
  std::vector<std::pair<std::string, int>> expect(counts.begin(), counts.end());
  std::stable_sort(expect.begin(), expect.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const auto v = build_vocabulary(texts);
  const auto got = v.corpus_words();
  REQUIRE(got.size() == expect.size());
  for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == expect[k].first);
}

TEST_CASE("item text is title then description, [PAD] when empty") {
  const auto v = build_vocabulary(std::vector<std::string>{"shoe red leather"});
  const auto item = resolve_item(CatalogRecord{ItemId{5}, 2, "Red Shoe", "leather, unknown"}, v);
  CHECK(item.category == 2);
  CHECK(item_text(item) == std::vector<int>{v.index("red"), v.index("shoe"), v.index("leather"), Vocabulary::kOov});
  const auto empty = resolve_item(CatalogRecord{ItemId{6}, 1, "", " -- "}, v);
  CHECK(item_text(empty) == std::vector<int>{Vocabulary::kPad});
}

TEST_CASE("catalog rejects duplicates and bad categories") {
  CHECK_THROWS_AS(Catalog({{ItemId{1}, 1, "a", "b"}, {ItemId{1}, 2, "c", "d"}}), DataError);
  CHECK_THROWS_AS(Catalog({{ItemId{1}, 0, "a", "b"}}), DataError);
  const Catalog c({{ItemId{4}, 3, "a", "b"}, {ItemId{2}, 1, "c", "d"}});
  CHECK(c.find(ItemId{2})->category == 1);
  CHECK(c.find(ItemId{9}) == nullptr);
  CHECK(c.max_category() == 3);
}

TEST_CASE("padding prepends PAD slots and pruning keeps the ten most recent clicks, lengths 1..50") {
  for (std::size_t n = 1; n <= 50; ++n) {
    const auto clicks = clicks_of_length(n);
    const auto p = pad_or_prune(clicks, 10);
    REQUIRE(p.slots.size() == 10);
    const std::size_t kept = std::min<std::size_t>(n, 10);
    CHECK(p.original_length == kept);
    for (std::size_t k = 0; k < 10 - kept; ++k) CHECK(!p.slots[k].has_value());
    for (std::size_t k = 0; k < kept; ++k) {
      REQUIRE(p.slots[10 - kept + k].has_value());
      CHECK(*p.slots[10 - kept + k] == clicks[n - kept + k].item);
    }
  }
  CHECK_THROWS_AS(pad_or_prune(clicks_of_length(3), 0), ConfigError);
}

TEST_CASE("sessionize groups each user's events into 24h windows") {
  const Timestamp d = kSecondsPerDay;
  const std::vector<Event> events{
      click(100, 1, 10),      click(150, 2, 11),          click(200, 1, 12),  buy(260, 1, 12),
      click(100 + d, 1, 13),  // exactly at the window edge: same session
      click(101 + d, 1, 14),  // past it: new session
      click(5 * d, 2, 15),
  };
  const auto s = sessionize(events);
  REQUIRE(s.size() == 4);
  CHECK(s[0].user == UserId{1});
  CHECK(s[0].clicks.size() == 3);
  CHECK(s[0].label == 1);
  CHECK(s[0].day == 0);
  CHECK(s[1].user == UserId{2});
  CHECK(s[1].label == 0);
  CHECK(s[2].clicks.size() == 1);
  CHECK(s[2].clicks[0].item == ItemId{14});
  CHECK(s[2].day == 1);
  CHECK(s[3].day == 5);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s[k].id == k);

  const std::vector<Event> unsorted{click(5, 1, 1), click(4, 1, 2)};
  CHECK_THROWS_AS(sessionize(unsorted), DataError);
  const std::vector<Event> only_buy{buy(5, 1, 1)};
  CHECK(sessionize(only_buy).empty());
}

TEST_CASE("sessionize properties on random streams") {
  Rng rng(23);
  for (int it = 0; it < 20; ++it) {
    std::vector<Event> events;
    Timestamp t = 0;
    for (int k = 0; k < 300; ++k) {
      t += static_cast<Timestamp>(rng.below(4000));
      events.push_back(Event{t, UserId{1 + rng.below(7)}, ItemId{rng.below(30)},
                             rng.bernoulli(0.1) ? EventType::buy : EventType::click});
    }
    const auto sessions = sessionize(events);
    std::size_t clicks = 0;
    for (const auto& s : sessions) {
      REQUIRE(!s.clicks.empty());
      clicks += s.clicks.size();
      CHECK(s.clicks.back().timestamp - s.clicks.front().timestamp <= kSecondsPerDay);
      for (const auto& c : s.clicks) CHECK(c.user == s.user);
    }
    const auto n_clicks = std::count_if(events.begin(), events.end(), [](const Event& e) { return e.type == EventType::click; });
    CHECK(clicks == static_cast<std::size_t>(n_clicks));
    for (std::size_t k = 0; k < sessions.size(); ++k) CHECK(sessions[k].id == k);
  }
}

TEST_CASE("chronological split") {
  std::vector<Session> sessions;
  for (Day d = 0; d < 5; ++d) {
    Session s;
    s.day = d;
    s.clicks = clicks_of_length(1);
    sessions.push_back(s);
  }
  const auto [val, test] = last_two_days(sessions);
  CHECK(val == 3);
  CHECK(test == 4);
  const auto split = chronological_split(sessions, 3, 4);
  CHECK(split.train.size() == 3);
  CHECK(split.validation.size() == 1);
  CHECK(split.test.size() == 1);
  CHECK(split.warnings.empty());
  const auto gap = chronological_split(sessions, 1, 4);
  CHECK(gap.train.size() == 1);
  CHECK(gap.validation.size() == 1);
  CHECK_THROWS_AS(chronological_split(sessions, 4, 4), ConfigError);
  const auto empty = chronological_split(sessions, 7, 8);
  CHECK(empty.warnings.size() == 2);
  const std::vector<Session> one_day(2, sessions[0]);
  CHECK_THROWS_AS(last_two_days(one_day), DataError);
}

TEST_CASE("events_from_sessions inverts sessionize") {
  const Timestamp d = kSecondsPerDay;
  const std::vector<Event> events{click(10, 1, 5), click(20, 2, 6), click(40, 1, 7), buy(100, 1, 7),
                                  click(3 * d, 2, 8)};
  const auto sessions = sessionize(events);
  std::vector<ItemId> bought{ItemId{7}, ItemId{0}, ItemId{0}};
  const auto back = events_from_sessions(sessions, bought);
  CHECK(sessionize(back) == sessions);
  CHECK(back[3] == buy(100, 1, 7));
}

TEST_CASE("catalog and events survive a TSV round trip") {
  const Catalog c({{ItemId{3}, 2, "Red\tShoe", "line one\nline two"}, {ItemId{9}, 1, "", "plain"}});
  std::stringstream ss;
  write_catalog(ss, c);
  const auto back = read_catalog(ss);
  REQUIRE(back.size() == 2);
  CHECK(back.records()[0].title == "Red Shoe");
  CHECK(back.records()[0].description == "line one line two");
  CHECK(back.records()[1] == c.records()[1]);

  const std::vector<Event> events{click(5, 1, 3), buy(9, 1, 3), click(7, 2, 9)};
  std::stringstream es;
  write_events(es, events);
  const auto eb = read_events(es);
  REQUIRE(eb.size() == 3);
  CHECK(eb[0] == events[0]);
  CHECK(eb[1] == events[2]);  // sorted by time
  CHECK(eb[2] == events[1]);

  std::stringstream broken("1\t2\t3\n");
  CHECK_THROWS_AS(read_events(broken), DataError);
  std::stringstream bad_type("1\t2\t3\tview\n");
  CHECK_THROWS_AS(read_events(bad_type), DataError);
  std::stringstream bad_num("x\t1\ta\tb\n");
  CHECK_THROWS_AS(read_catalog(bad_num), DataError);
}
