#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pisa/data/types.hpp"

namespace pisa::data {

/// Lowercases and splits on every maximal run of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;

  /// Just {PAD, OOV}.
  Vocabulary();
  /// Corpus words in index order, starting at index 2.
  explicit Vocabulary(std::vector<std::string> corpus_words);

  int size() const { return static_cast<int>(words_.size()); }
  /// Index of a word, OOV if absent.
  int index(std::string_view word) const;
  const std::string& word(int index) const;
  std::vector<int> encode(std::string_view text) const;

  /// Corpus words (indices 2..) in index order.
  std::vector<std::string> corpus_words() const { return {words_.begin() + 2, words_.end()}; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> lookup_;
};

/// Words with frequency >= min_freq get indices 2.. by descending frequency,
/// ties broken lexicographically.
Vocabulary build_vocabulary(std::span<const std::string> texts, int min_freq = 1);

/// Vocabulary over every title and description in the catalog.
Vocabulary build_vocabulary(const Catalog& catalog, int min_freq = 1);

Item resolve_item(const CatalogRecord& record, const Vocabulary& vocab);

/// Title tokens followed by description tokens; [PAD] when both are empty.
std::vector<int> item_text(const Item& item);

}  // namespace pisa::data
