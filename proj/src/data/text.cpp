#include "pisa/data/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "pisa/common/errors.hpp"

namespace pisa::data {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() : words_{"<pad>", "<oov>"} {}

Vocabulary::Vocabulary(std::vector<std::string> corpus_words) : Vocabulary() {
  for (auto& w : corpus_words) {
    if (w.empty() || w == words_[kPad] || w == words_[kOov]) throw DataError("vocabulary: reserved or empty word");
    words_.push_back(std::move(w));
  }
  lookup_.reserve(words_.size());
  for (int i = 2; i < size(); ++i)
    if (!lookup_.emplace(words_[i], i).second) throw DataError("vocabulary: duplicate word " + words_[i]);
}

int Vocabulary::index(std::string_view word) const {
  const auto it = lookup_.find(std::string(word));
  return it == lookup_.end() ? kOov : it->second;
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || index >= size()) throw IndexError("vocabulary: index " + std::to_string(index) + " out of range");
  return words_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> out;
  for (const auto& tok : tokenize(text)) out.push_back(index(tok));
  return out;
}

Vocabulary build_vocabulary(std::span<const std::string> texts, int min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocabulary: min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts)
    for (auto& tok : tokenize(t)) ++counts[std::move(tok)];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, n] : counts)
    if (n >= static_cast<std::size_t>(min_freq)) kept.emplace_back(w, n);
  // counts is ordered lexicographically, so a stable sort keeps that as the tie-break.
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, n] : kept) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

Vocabulary build_vocabulary(const Catalog& catalog, int min_freq) {
  std::vector<std::string> texts;
  texts.reserve(catalog.size() * 2);
  for (const auto& r : catalog.records()) {
    texts.push_back(r.title);
    texts.push_back(r.description);
  }
  return build_vocabulary(texts, min_freq);
}

Item resolve_item(const CatalogRecord& record, const Vocabulary& vocab) {
  return Item{record.id, record.category, vocab.encode(record.title), vocab.encode(record.description)};
}

std::vector<int> item_text(const Item& item) {
  std::vector<int> out;
  out.reserve(item.title_tokens.size() + item.description_tokens.size());
  out.insert(out.end(), item.title_tokens.begin(), item.title_tokens.end());
  out.insert(out.end(), item.description_tokens.begin(), item.description_tokens.end());
  if (out.empty()) out.push_back(Vocabulary::kPad);
  return out;
}

}  // namespace pisa::data
