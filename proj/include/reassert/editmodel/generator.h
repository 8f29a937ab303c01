#pragma once

#include <optional>
#include <vector>

#include "reassert/editmodel/model.h"
#include "reassert/retrieval.h"

namespace reassert {

struct GenerateOptions {
  std::size_t max_len = 64;
  std::size_t beam_width = 1;  // 1 = greedy
};

struct GenerationResult {
  TokenSeq assertion;
  RetrievalResult retrieved;
  EditSequence edits;
  /// The decoder emitted end-of-sequence before any token.
  bool failed = false;
};

/// Decodes from the mixture distribution until EOS or max_len. Copied tokens
/// outside the vocabulary are emitted verbatim.
TokenSeq decode(EditModel<float>& model, const Vocabulary& vocab, const EncodedExample& ex,
                const GenerateOptions& options);

/// Retrieve the top-1 TAP, align focal-tests, and edit its assertion.
/// Safe to call concurrently on one model: inference only reads parameters.
class Generator {
 public:
  Generator(EditModel<float>& model, const Vocabulary& vocab, const Retriever& retriever,
            GenerateOptions options = {});

  GenerationResult generate(const TokenSeq& focal_test,
                            std::optional<std::int64_t> exclude_id = std::nullopt) const;

  /// Results in input order; `threads` > 1 fans out over worker threads.
  std::vector<GenerationResult> generate_batch(const std::vector<TokenSeq>& focal_tests,
                                               std::size_t threads = 1) const;

 private:
  EditModel<float>* model_;
  const Vocabulary* vocab_;
  const Retriever* retriever_;
  GenerateOptions options_;
};

}  // namespace reassert
