#include "reassert/editmodel/trainer.h"

#include <cmath>
#include <numeric>

#include "reassert/error.h"

namespace reassert {

std::vector<TrainingPair> build_training_pairs(const std::vector<TAP>& taps,
                                               const Retriever& retriever,
                                               const Vocabulary& vocab,
                                               std::size_t max_input_len) {
  std::vector<TrainingPair> out;
  out.reserve(taps.size());
  for (const auto& tap : taps) {
    auto hit = retriever.retrieve_top1(tap.focal_test, tap.id);
    auto edits = align(hit.retrieved_focal_test, tap.focal_test);
    truncate(edits, max_input_len);
    TrainingPair pair;
    pair.tap_id = tap.id;
    pair.retrieved_id = hit.tap_id;
    pair.example = encode_example(vocab, hit.retrieved_assertion, edits, &tap.assertion, max_input_len);
    out.push_back(std::move(pair));
  }
  return out;
}

double perplexity(EditModel<float>& model, const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  std::size_t tokens = 0;
  nn::Rng unused(0);
  RunOptions opt;
  for (const auto& pair : pairs) {
    nn::Tape<float> tape(false);
    total += double(model.loss(tape, pair.example, opt, unused).item());
    tokens += pair.example.targets.size();
  }
  return std::exp(total / double(tokens));
}

namespace {

std::vector<std::vector<float>> snapshot(EditModel<float>& model) {
  std::vector<std::vector<float>> out;
  for (auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(EditModel<float>& model, const std::vector<std::vector<float>>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainResult train(EditModel<float>& model, const std::vector<TrainingPair>& train_pairs,
                  const std::vector<TrainingPair>& valid, const TrainConfig& config,
                  nn::Rng& rng, const EpochCallback& on_epoch) {
  if (train_pairs.empty()) throw Error("train: empty training set");
  if (config.batch_size == 0) throw Error("train: batch size must be positive");
  auto params = model.trainable_parameters();
  nn::Adam<float> adam(params, config.adam);
  adam.zero_grad();

  const auto& selection = valid.empty() ? train_pairs : valid;
  TrainResult result;
  std::optional<std::vector<std::vector<float>>> best;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);
  RunOptions opt;
  opt.training = true;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t i = start; i < end; ++i) batch_tokens += train_pairs[order[i]].example.targets.size();
      // Backward seed 1/batch_tokens: gradients accumulate to the mean token loss.
      const float seed = 1.0f / float(batch_tokens);
      for (std::size_t i = start; i < end; ++i) {
        nn::Tape<float> tape;
        auto loss = model.loss(tape, train_pairs[order[i]].example, opt, rng);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw Error("training diverged: loss is " + std::to_string(value) + " at epoch " +
                      std::to_string(epoch) + " on TAP " + std::to_string(train_pairs[order[i]].tap_id));
        }
        epoch_loss += value;
        tape.backward(loss, seed);
      }
      epoch_tokens += batch_tokens;
      nn::clip_global_norm(params, config.clip_norm);
      adam.step();
      adam.zero_grad();
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = epoch_loss / double(epoch_tokens);
    report.valid_perplexity = perplexity(model, selection);
    if (!std::isfinite(report.valid_perplexity)) {
      throw Error("training diverged: perplexity is not finite at epoch " + std::to_string(epoch));
    }
    if (!best || report.valid_perplexity < result.best_perplexity) {
      best = snapshot(model);
      result.best_perplexity = report.valid_perplexity;
      result.best_epoch = epoch;
      report.improved = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.history.push_back(report);
    if (on_epoch && !on_epoch(report, model)) {
      result.stop_reason = "stopped by callback";
      break;
    }
    if (since_best >= config.patience) {
      result.stop_reason = "no improvement for " + std::to_string(config.patience) + " epochs";
      break;
    }
  }
  if (result.stop_reason.empty()) result.stop_reason = "reached max epochs";
  restore(model, *best);
  return result;
}

}  // namespace reassert
