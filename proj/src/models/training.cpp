#include "pisa/models/training.hpp"

#include <numeric>

#include "pisa/common/errors.hpp"
#include "pisa/common/rng.hpp"
#include "pisa/metrics/metrics.hpp"
#include "pisa/nn/adam.hpp"
#include "pisa/nn/losses.hpp"
#include "pisa/nn/serialize.hpp"

namespace pisa::models {

namespace {
constexpr std::uint64_t kShuffleStream = 21;
}

PredictorTrainResult train_predictor(SessionPredictor& model, const EncodedSessions& train,
                                     const EncodedSessions& validation, const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) throw DataError("train_predictor: empty training set");
  const metrics::ScoredSet probe{{}, validation.labels};
  if (probe.positives() == 0 || probe.negatives() == 0)
    throw MetricError("train_predictor: validation set has a single class, AUC is undefined");

  nn::AdamConfig adam;
  adam.alpha = cfg.learning_rate;
  const nn::ParamList params = model.parameters();
  nn::zero_grads(params);
  Rng rng = Rng(cfg.seed).split(kShuffleStream);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto B = static_cast<std::size_t>(cfg.batch_size);

  PredictorTrainResult result;
  result.best_val_auc = -1.0;
  std::vector<nn::Matrix> best = nn::snapshot(params);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t end = std::min(order.size(), start + B);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const nn::Vector z = model.forward_train(train, rows);
      nn::Vector dz(z.size());
      const double w = 1.0 / static_cast<double>(rows.size());
      for (nn::Index k = 0; k < z.size(); ++k) {
        const auto l = nn::sigmoid_bce(z(k), train.labels[rows[static_cast<std::size_t>(k)]]);
        loss_sum += l.loss;
        dz(k) = w * l.grad_logit;
      }
      model.backward(dz);
      nn::adam_step(params, adam);
    }
    const auto scores = predict(model, validation);
    const double val_auc = metrics::auc({scores, validation.labels});
    result.trace.push_back({epoch, loss_sum / static_cast<double>(train.size()), val_auc});
    if (val_auc > result.best_val_auc) {
      result.best_val_auc = val_auc;
      result.best_epoch = epoch;
      best = nn::snapshot(params);
    }
  }
  nn::restore(params, best);
  for (auto* p : params) p->reset_optimizer();
  return result;
}

}  // namespace pisa::models
