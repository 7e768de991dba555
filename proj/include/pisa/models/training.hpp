#pragma once

#include <vector>

#include "pisa/models/common.hpp"
#include "pisa/models/predictors.hpp"

namespace pisa::models {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean BCE over the epoch's training sessions
  double val_auc = 0.0;
};

struct PredictorTrainResult {
  std::vector<EpochRecord> trace;
  int best_epoch = 0;
  double best_val_auc = 0.0;
};

/// Mini-batch Adam on mean BCE, shuffling the training rows each epoch. After
/// every epoch the validation AUC is recorded; the model is left holding the
/// parameters of the first epoch with the highest validation AUC.
PredictorTrainResult train_predictor(SessionPredictor& model, const EncodedSessions& train,
                                     const EncodedSessions& validation, const TrainConfig& cfg);

}  // namespace pisa::models
