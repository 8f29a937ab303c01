#include "reassert/editmodel/generator.h"

#include <algorithm>
#include <cmath>
#include <thread>

#include "reassert/error.h"

namespace reassert {
namespace {

// Decoder input for an extended id: copied OOV tokens re-enter as UNK.
int input_id(const EncodedExample& ex, int ext_id) {
  return std::size_t(ext_id) < ex.vocab_size ? ext_id : Vocabulary::kUnk;
}

int argmax(std::span<const float> p) {
  return int(std::max_element(p.begin(), p.end()) - p.begin());
}

TokenSeq greedy(EditModel<float>& model, const Vocabulary& vocab, const EncodedExample& ex,
                std::size_t max_len) {
  nn::Tape<float> tape(false);
  nn::Rng unused(0);
  RunOptions opt;
  auto p = model.bind(tape);
  auto enc = model.encode(tape, *p, ex, opt, unused);
  auto state = model.initial_state(tape, *p, enc);
  int prev = Vocabulary::kSos;
  TokenSeq out;
  for (std::size_t j = 0; j < max_len; ++j) {
    auto step = model.decode_step(tape, *p, enc, ex, prev, state, opt, unused);
    int next = argmax(step.mixture.value());
    if (next == Vocabulary::kEos) break;
    out.push_back(ext_token(vocab, ex, next));
    prev = input_id(ex, next);
    state = step.state;
  }
  return out;
}

struct Hypothesis {
  std::vector<int> ids;
  double log_prob = 0.0;
  DecoderState<float> state;
  bool done = false;

  double score() const { return log_prob / double(std::max<std::size_t>(1, ids.size())); }
};

TokenSeq beam(EditModel<float>& model, const Vocabulary& vocab, const EncodedExample& ex,
              std::size_t max_len, std::size_t width) {
  nn::Tape<float> tape(false);
  nn::Rng unused(0);
  RunOptions opt;
  auto p = model.bind(tape);
  auto enc = model.encode(tape, *p, ex, opt, unused);
  std::vector<Hypothesis> live = {{{}, 0.0, model.initial_state(tape, *p, enc), false}};
  std::vector<Hypothesis> finished;
  for (std::size_t j = 0; j < max_len && !live.empty(); ++j) {
    std::vector<Hypothesis> cands;
    for (const auto& h : live) {
      int prev = h.ids.empty() ? Vocabulary::kSos : input_id(ex, h.ids.back());
      auto step = model.decode_step(tape, *p, enc, ex, prev, h.state, opt, unused);
      auto dist = step.mixture.value();
      std::vector<int> top(dist.size());
      for (std::size_t i = 0; i < top.size(); ++i) top[i] = int(i);
      const std::size_t k = std::min(width, top.size());
      std::partial_sort(top.begin(), top.begin() + std::ptrdiff_t(k), top.end(), [&](int a, int b) {
        return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
      });
      for (std::size_t i = 0; i < k; ++i) {
        Hypothesis n{h.ids, h.log_prob + std::log(std::max(double(dist[top[i]]), 1e-30)), step.state, false};
        if (top[i] == Vocabulary::kEos) {
          n.done = true;
        } else {
          n.ids.push_back(top[i]);
        }
        cands.push_back(std::move(n));
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.log_prob > b.log_prob; });
    live.clear();
    for (auto& c : cands) {
      if (live.size() + finished.size() >= width) break;
      (c.done ? finished : live).push_back(std::move(c));
    }
    if (finished.size() >= width) break;
  }
  for (auto& h : live) finished.push_back(std::move(h));
  const auto best = std::max_element(finished.begin(), finished.end(), [](const auto& a, const auto& b) {
    return a.score() < b.score();
  });
  TokenSeq out;
  for (int id : best->ids) out.push_back(ext_token(vocab, ex, id));
  return out;
}

}  // namespace

TokenSeq decode(EditModel<float>& model, const Vocabulary& vocab, const EncodedExample& ex,
                const GenerateOptions& options) {
  if (options.beam_width <= 1) return greedy(model, vocab, ex, options.max_len);
  return beam(model, vocab, ex, options.max_len, options.beam_width);
}

Generator::Generator(EditModel<float>& model, const Vocabulary& vocab, const Retriever& retriever,
                     GenerateOptions options)
    : model_(&model), vocab_(&vocab), retriever_(&retriever), options_(options) {}

GenerationResult Generator::generate(const TokenSeq& focal_test,
                                     std::optional<std::int64_t> exclude_id) const {
  GenerationResult r;
  r.retrieved = retriever_->retrieve_top1(focal_test, exclude_id);
  r.edits = align(r.retrieved.retrieved_focal_test, focal_test);
  const std::size_t max_len = model_->config().max_input_len;
  truncate(r.edits, max_len);
  auto ex = encode_example(*vocab_, r.retrieved.retrieved_assertion, r.edits, nullptr, max_len);
  r.assertion = decode(*model_, *vocab_, ex, options_);
  r.failed = r.assertion.empty();
  return r;
}

std::vector<GenerationResult> Generator::generate_batch(const std::vector<TokenSeq>& focal_tests,
                                                        std::size_t threads) const {
  std::vector<GenerationResult> out(focal_tests.size());
  threads = std::max<std::size_t>(1, std::min(threads, focal_tests.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < focal_tests.size(); ++i) out[i] = generate(focal_tests[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < focal_tests.size(); i += threads) out[i] = generate(focal_tests[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace reassert
