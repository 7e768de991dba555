#pragma once

#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pisa/data/text.hpp"
#include "pisa/data/types.hpp"
#include "pisa/models/common.hpp"
#include "pisa/nn/layers.hpp"

namespace pisa::models {

struct EmbeddingDims {
  int vocab_size = 2;
  int word_dim = 64;
  int gru_hidden = 150;
  int embed_dim = 50;
  int categories = 13;

  friend bool operator==(const EmbeddingDims&, const EmbeddingDims&) = default;
};

/// Text -> item vector network: word lookup, GRU over the tokens (last hidden
/// state), Dense_1 (tanh). During training a softmax head predicts the item
/// category from Dense_1; afterwards the head is detached and the weights frozen.
class EmbeddingComponent {
 public:
  EmbeddingComponent(const EmbeddingDims& dims, data::Vocabulary vocab, std::uint64_t seed);

  const EmbeddingDims& dims() const { return dims_; }
  const data::Vocabulary& vocabulary() const { return vocab_; }

  /// Dense_1 output for a token sequence (empty input is treated as [PAD]).
  nn::RowVector embed(std::span<const int> tokens) const;
  /// Category logits (0-based classes). Requires the head.
  nn::Vector logits(std::span<const int> tokens) const;

  /// Forward + backward of weight * CE(logits, category_index); returns the unweighted loss.
  double accumulate_gradient(std::span<const int> tokens, int category_index, double weight);

  nn::ParamList parameters();

  void detach_head();
  bool head_detached() const { return head_detached_; }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  nlohmann::json to_json() const;
  static EmbeddingComponent from_json(const nlohmann::json& j);

 private:
  void check_tokens(std::span<const int> tokens) const;

  EmbeddingDims dims_;
  data::Vocabulary vocab_;
  nn::Embedding words_;
  nn::Gru gru_;
  nn::Dense dense1_;
  nn::Dense head_;
  bool head_detached_ = false;
  bool frozen_ = false;
};

/// Item vector of a frozen component. Never looks at the item id, so it is
/// defined for items that were absent from training.
nn::RowVector embed_item(const EmbeddingComponent& component, const data::Item& item);

struct EmbeddingEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_accuracy = 0.0;
  double heldout_loss = 0.0;
};

struct EmbeddingTrainResult {
  EmbeddingComponent component;
  std::vector<EmbeddingEpoch> trace;
  int best_epoch = 0;
  std::size_t heldout_items = 0;
};

/// Trains on (item_text, category) pairs with a 10% held-out item split used to
/// select the best epoch (highest accuracy, then lowest held-out loss). The
/// returned component is frozen with its head detached.
EmbeddingTrainResult train_embedding_component(std::span<const data::Item> items, const data::Vocabulary& vocab,
                                               EmbeddingDims dims, const TrainConfig& cfg);

/// Frozen item vectors keyed by item id. PAD maps to the zero vector.
class ItemEmbeddingTable {
 public:
  ItemEmbeddingTable() = default;
  explicit ItemEmbeddingTable(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const nn::RowVector* find(data::ItemId id) const;
  nn::RowVector pad_vector() const { return nn::RowVector::Zero(dim_); }
  void insert(data::ItemId id, nn::RowVector v);
  const std::map<data::ItemId, nn::RowVector>& entries() const { return vectors_; }

  nlohmann::json to_json() const;
  static ItemEmbeddingTable from_json(const nlohmann::json& j);

 private:
  int dim_ = 0;
  std::map<data::ItemId, nn::RowVector> vectors_;
};

ItemEmbeddingTable build_embedding_table(const EmbeddingComponent& component, std::span<const data::Item> items);

/// Content features for the predictors: the table, with on-demand embedding
/// from catalog text for items the table does not hold.
class ContentFeatures {
 public:
  ContentFeatures(std::shared_ptr<const EmbeddingComponent> component, std::shared_ptr<const ItemEmbeddingTable> table,
                  std::span<const data::Item> catalog_items);

  int dim() const { return table_->dim(); }
  nn::RowVector vector(data::ItemId id) const;
  const EmbeddingComponent& component() const { return *component_; }

 private:
  std::shared_ptr<const EmbeddingComponent> component_;
  std::shared_ptr<const ItemEmbeddingTable> table_;
  std::unordered_map<data::ItemId, data::Item> items_;
};

/// Resolves every catalog record against a vocabulary.
std::vector<data::Item> resolve_catalog(const data::Catalog& catalog, const data::Vocabulary& vocab);

}  // namespace pisa::models
