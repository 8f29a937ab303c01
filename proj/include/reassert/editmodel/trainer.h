#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "reassert/editmodel/model.h"
#include "reassert/numcore/optim.h"
#include "reassert/retrieval.h"

namespace reassert {

/// A TAP prepared for the edit model: its top-1 neighbour's assertion, the
/// aligned focal-tests, and the ground-truth assertion as target.
struct TrainingPair {
  std::int64_t tap_id = 0;
  std::int64_t retrieved_id = 0;
  EncodedExample example;
};

/// Retrieves each TAP's neighbour from `retriever` (never the TAP itself),
/// aligns retrieved vs input focal-test and encodes with the target.
std::vector<TrainingPair> build_training_pairs(const std::vector<TAP>& taps,
                                               const Retriever& retriever,
                                               const Vocabulary& vocab,
                                               std::size_t max_input_len);

struct TrainConfig {
  nn::AdamConfig adam;  // lr 0.001
  double clip_norm = 5.0;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
};

struct EpochReport {
  std::size_t epoch = 0;        // 1-based
  double train_loss = 0.0;      // mean token cross-entropy, dropout on
  double valid_perplexity = 0.0;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochReport> history;
  std::size_t best_epoch = 0;
  double best_perplexity = 0.0;
  std::string stop_reason;
};

/// Called after each epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochReport&, EditModel<float>&)>;

/// exp(mean token cross-entropy) without dropout.
double perplexity(EditModel<float>& model, const std::vector<TrainingPair>& pairs);

/// Teacher-forced training with Adam, global-norm clipping and gradient
/// accumulation over batch_size single-example tapes. Keeps the parameters
/// of the epoch with the lowest validation perplexity (training perplexity
/// when `valid` is empty) and stops after `patience` epochs without
/// improvement. The best parameters are left in `model` on return.
TrainResult train(EditModel<float>& model, const std::vector<TrainingPair>& train_pairs,
                  const std::vector<TrainingPair>& valid, const TrainConfig& config,
                  nn::Rng& rng, const EpochCallback& on_epoch = {});

}  // namespace reassert
