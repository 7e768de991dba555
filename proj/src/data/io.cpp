#include "pisa/data/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "pisa/common/errors.hpp"

namespace pisa::data {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

template <class T>
T parse_number(std::string_view field, const char* what, std::size_t line_no) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw DataError(std::string("line ") + std::to_string(line_no) + ": invalid " + what + " '" + std::string(field) +
                    "'");
  return value;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

}  // namespace

std::string sanitize_field(std::string_view text) {
  std::string s(text);
  std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return s;
}

void write_catalog(std::ostream& os, const Catalog& catalog) {
  for (const auto& r : catalog.records())
    os << raw(r.id) << '\t' << r.category << '\t' << sanitize_field(r.title) << '\t' << sanitize_field(r.description)
       << '\n';
}

Catalog read_catalog(std::istream& is) {
  std::vector<CatalogRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) throw DataError("catalog line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    CatalogRecord r;
    r.id = ItemId{parse_number<std::uint64_t>(f[0], "item id", line_no)};
    r.category = parse_number<int>(f[1], "category id", line_no);
    r.title = std::string(f[2]);
    r.description = std::string(f[3]);
    records.push_back(std::move(r));
  }
  return Catalog(std::move(records));
}

Catalog read_catalog(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_catalog(is);
}

void write_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  auto os = open_out(path);
  write_catalog(os, catalog);
}

void write_events(std::ostream& os, std::span<const Event> events) {
  for (const auto& e : events)
    os << e.timestamp << '\t' << raw(e.user) << '\t' << raw(e.item) << '\t'
       << (e.type == EventType::buy ? "buy" : "click") << '\n';
}

std::vector<Event> read_events(std::istream& is) {
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 4) throw DataError("events line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    Event e;
    e.timestamp = parse_number<Timestamp>(f[0], "timestamp", line_no);
    e.user = UserId{parse_number<std::uint64_t>(f[1], "user id", line_no)};
    e.item = ItemId{parse_number<std::uint64_t>(f[2], "item id", line_no)};
    if (f[3] == "click")
      e.type = EventType::click;
    else if (f[3] == "buy")
      e.type = EventType::buy;
    else
      throw DataError("events line " + std::to_string(line_no) + ": unknown event type '" + std::string(f[3]) + "'");
    events.push_back(e);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
  return events;
}

std::vector<Event> read_events(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_events(is);
}

void write_events(const std::filesystem::path& path, std::span<const Event> events) {
  auto os = open_out(path);
  write_events(os, events);
}

}  // namespace pisa::data
