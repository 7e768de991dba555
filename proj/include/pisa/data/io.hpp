#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "pisa/data/types.hpp"

namespace pisa::data {

// Catalog: item_id \t category_id \t title \t description, one item per line.
// Events:  timestamp \t user_id \t item_id \t (click|buy), one event per line.
// Tabs, carriage returns and newlines inside text fields are written as spaces.

std::string sanitize_field(std::string_view text);

void write_catalog(std::ostream& os, const Catalog& catalog);
Catalog read_catalog(std::istream& is);
Catalog read_catalog(const std::filesystem::path& path);
void write_catalog(const std::filesystem::path& path, const Catalog& catalog);

void write_events(std::ostream& os, std::span<const Event> events);
/// Events are returned stably sorted by timestamp.
std::vector<Event> read_events(std::istream& is);
std::vector<Event> read_events(const std::filesystem::path& path);
void write_events(const std::filesystem::path& path, std::span<const Event> events);

}  // namespace pisa::data
