#pragma once

#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pisa/data/types.hpp"
#include "pisa/models/common.hpp"
#include "pisa/models/embedding.hpp"
#include "pisa/nn/layers.hpp"

namespace pisa::models {

/// Row numbers of the ID embeddings. Items: PAD = 0, UNKNOWN = 1, known items
/// from 2 in ascending id order. Users: UNKNOWN = 0, known users from 1.
class IdIndex {
 public:
  static constexpr int kPadRow = 0;
  static constexpr int kUnknownItemRow = 1;
  static constexpr int kUnknownUserRow = 0;

  IdIndex() = default;
  IdIndex(std::vector<data::ItemId> items, std::vector<data::UserId> users);

  int item_rows() const { return static_cast<int>(items_.size()) + 2; }
  int user_rows() const { return static_cast<int>(users_.size()) + 1; }
  int item_row(std::optional<data::ItemId> id) const;
  int user_row(data::UserId id) const;

  const std::vector<data::ItemId>& items() const { return items_; }
  const std::vector<data::UserId>& users() const { return users_; }

  nlohmann::json to_json() const;
  static IdIndex from_json(const nlohmann::json& j);

  friend bool operator==(const IdIndex& a, const IdIndex& b) { return a.items_ == b.items_ && a.users_ == b.users_; }

 private:
  std::vector<data::ItemId> items_;
  std::vector<data::UserId> users_;
  std::map<data::ItemId, int> item_lookup_;
  std::map<data::UserId, int> user_lookup_;
};

/// Index over every item in the given sessions and every user with at least
/// min_user_sessions of them; rarer users share the UNKNOWN row.
IdIndex build_id_index(std::span<const data::Session> sessions, int min_user_sessions = 2);

/// Sessions padded/pruned to max_len and turned into lookup rows.
/// features row 0 is the PAD zero vector; content_rows index into it.
struct EncodedSessions {
  std::size_t max_len = 10;
  std::vector<int> labels;
  nn::Matrix features;
  std::vector<int> content_rows;  // size() * max_len, empty without content features
  std::vector<int> item_rows;     // size() * max_len, empty without an id index
  std::vector<int> user_rows;     // size(), empty without an id index

  std::size_t size() const { return labels.size(); }
};

/// Either source may be null; the matching rows are then left empty.
EncodedSessions encode_sessions(std::span<const data::Session> sessions, const ContentFeatures* features,
                                const IdIndex* ids, std::size_t max_len = 10);
/// Same for already padded sequences (labels set to 0).
EncodedSessions encode_padded(std::span<const data::PaddedSequence> sequences, std::span<const data::UserId> users,
                              const ContentFeatures* features, const IdIndex* ids);

struct PredictorDims {
  int content_dim = 50;  // item embedding size of the content branch
  int id_dim = 64;
  int lstm_hidden = 150;
  int merge_dim = 100;
  int max_len = 10;

  friend bool operator==(const PredictorDims&, const PredictorDims&) = default;
};

/// Maps a batch of encoded sessions to purchase logits.
class SessionPredictor {
 public:
  virtual ~SessionPredictor() = default;

  virtual ModelKind kind() const = 0;
  const PredictorDims& dims() const { return dims_; }
  virtual bool uses_content() const = 0;
  /// Null for models without ID branches.
  virtual const IdIndex* id_index() const { return nullptr; }

  /// Logits for the given rows of `batch` (no state kept).
  virtual nn::Vector logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const = 0;
  /// Same, keeping what backward() needs.
  virtual nn::Vector forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) = 0;
  /// Accumulates gradients from dL/dlogits of the last forward_train.
  virtual void backward(const nn::Vector& dlogits) = 0;

  virtual nn::ParamList parameters() = 0;

  nlohmann::json to_json() const;

 protected:
  explicit SessionPredictor(const PredictorDims& dims);
  void check_batch(const EncodedSessions& batch, std::span<const std::size_t> rows) const;

  PredictorDims dims_;
};

/// Content LSTM over frozen item vectors, then a 1-unit output layer.
class ContentPredictor final : public SessionPredictor {
 public:
  ContentPredictor(const PredictorDims& dims, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::content; }
  bool uses_content() const override { return true; }
  nn::Vector logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const override;
  nn::Vector forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) override;
  void backward(const nn::Vector& dlogits) override;
  nn::ParamList parameters() override;

 private:
  struct Cache {
    nn::LstmCache lstm;
    nn::DenseCache out;
  };
  nn::Vector run(const EncodedSessions& batch, std::span<const std::size_t> rows, Cache* cache) const;

  nn::Lstm lstm_;
  nn::Dense out_;
  std::optional<Cache> cache_;
};

/// Item-ID embedding + LSTM + output layer. Reads no text.
class BaselinePredictor final : public SessionPredictor {
 public:
  BaselinePredictor(const PredictorDims& dims, IdIndex ids, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::baseline; }
  bool uses_content() const override { return false; }
  const IdIndex* id_index() const override { return &ids_; }
  nn::Vector logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const override;
  nn::Vector forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) override;
  void backward(const nn::Vector& dlogits) override;
  nn::ParamList parameters() override;

 private:
  struct Cache {
    std::vector<std::vector<int>> ids;  // per timestep
    nn::LstmCache lstm;
    nn::DenseCache out;
  };
  nn::Vector run(const EncodedSessions& batch, std::span<const std::size_t> rows, Cache* cache) const;

  IdIndex ids_;
  nn::Embedding items_;
  nn::Lstm lstm_;
  nn::Dense out_;
  std::optional<Cache> cache_;
};

/// Content LSTM and ID LSTM side by side; final hidden states concatenated as
/// [content, id], then the tanh merge layer and the output layer. The ID
/// branch sees the user embedding as its first timestep.
class IntegratedPredictor final : public SessionPredictor {
 public:
  IntegratedPredictor(const PredictorDims& dims, IdIndex ids, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::integrated; }
  bool uses_content() const override { return true; }
  const IdIndex* id_index() const override { return &ids_; }
  nn::Vector logits(const EncodedSessions& batch, std::span<const std::size_t> rows) const override;
  nn::Vector forward_train(const EncodedSessions& batch, std::span<const std::size_t> rows) override;
  void backward(const nn::Vector& dlogits) override;
  nn::ParamList parameters() override;

 private:
  struct Cache {
    std::vector<int> users;
    std::vector<std::vector<int>> ids;
    nn::LstmCache content_lstm;
    nn::LstmCache id_lstm;
    nn::DenseCache merge;
    nn::DenseCache out;
  };
  nn::Vector run(const EncodedSessions& batch, std::span<const std::size_t> rows, Cache* cache) const;

  IdIndex ids_;
  nn::Lstm content_lstm_;
  nn::Embedding items_;
  nn::Embedding users_;
  nn::Lstm id_lstm_;
  nn::Dense merge_;
  nn::Dense out_;
  std::optional<Cache> cache_;
};

/// Fresh, seeded model. ID kinds need an index; the content kind ignores it.
std::unique_ptr<SessionPredictor> make_predictor(ModelKind kind, const PredictorDims& dims, const IdIndex& ids,
                                                 std::uint64_t seed);

/// Rejects unknown versions, kinds other than `expected` (when given) and
/// parameter shapes that disagree with the stored dims.
std::unique_ptr<SessionPredictor> load_predictor(const nlohmann::json& j,
                                                 std::optional<ModelKind> expected = std::nullopt);

/// Purchase probabilities in the open interval (0, 1), in session order.
std::vector<double> predict(const SessionPredictor& model, const EncodedSessions& encoded);

/// Probability for one padded session.
double predict_session(const SessionPredictor& model, const data::PaddedSequence& padded,
                       const ContentFeatures* features, data::UserId user);

/// Encodes with whatever the model needs and predicts.
std::vector<double> predict(const SessionPredictor& model, std::span<const data::Session> sessions,
                            const ContentFeatures* features);

}  // namespace pisa::models
