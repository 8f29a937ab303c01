#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reassert/editmodel/vocab.h"
#include "reassert/editseq.h"
#include "reassert/numcore/layers.h"

namespace reassert {

enum class EmbeddingMode { Trainable, PretrainedFrozen };

struct ModelConfig {
  std::size_t embed_dim = 300;
  std::size_t action_dim = 16;
  std::size_t encoder_hidden = 256;  // per direction; contextual vectors are 2x
  std::size_t decoder_hidden = 512;
  double dropout = 0.2;
  double init_range = 0.1;
  EmbeddingMode embedding_mode = EmbeddingMode::Trainable;
  std::size_t max_input_len = 512;
  std::size_t max_decode_len = 64;

  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// One model input with its per-example extended vocabulary: tokens copyable
/// from the retrieved assertion or from the input slots of the edit sequence
/// but missing from the vocabulary get ids size() + k.
struct EncodedExample {
  std::vector<int> assertion_ids;   // embedding ids, UNK for OOV
  std::vector<int> assertion_ext;   // copy ids into the extended vocabulary
  std::vector<int> edit_retrieved;  // embedding ids, EMPTY for an empty slot
  std::vector<int> edit_input;      // embedding ids, EMPTY for an empty slot
  std::vector<int> edit_action;
  std::vector<int> edit_input_ext;  // copy ids, -1 for an empty slot
  std::vector<std::string> oov;     // extended id size()+k -> oov[k]
  std::vector<int> decoder_inputs;  // SOS y_1 .. y_n (embedding ids)
  std::vector<int> targets;         // y_1 .. y_n EOS (extended ids)
  std::size_t vocab_size = 0;

  std::size_t ext_size() const { return vocab_size + oov.size(); }
  bool has_target() const { return !targets.empty(); }
};

/// Truncates both inputs to `max_len`. `target` may be null at inference.
EncodedExample encode_example(const Vocabulary& vocab, const TokenSeq& retrieved_assertion,
                              const EditSequence& edits, const TokenSeq* target,
                              std::size_t max_len);

/// Token for an extended id.
std::string ext_token(const Vocabulary& vocab, const EncodedExample& ex, int ext_id);

template <typename T>
struct EncoderOutput {
  nn::Var<T> H;             // La x 2h, assertion contextual vectors
  nn::Var<T> H_edit;        // Le x 2h, edit contextual vectors
  nn::Var<T> alpha;         // La x Le, attention of each assertion token over edits
  nn::Var<T> alpha_edit;    // Le x La
  nn::Var<T> Z;             // La x 2h, assertion final representations
  nn::Var<T> Z_edit;        // Le x 2h
  nn::LstmState<T> z_fwd_final, z_bwd_final, z_edit_fwd_final, z_edit_bwd_final;
  std::vector<std::uint8_t> assertion_mask;  // 1 = real position
  std::vector<std::uint8_t> edit_mask;
  std::vector<std::uint8_t> edit_copy_mask;  // real position with a non-empty input slot
};

template <typename T>
struct DecoderState {
  nn::LstmState<T> s;
  nn::Var<T> o;
};

template <typename T>
struct DecoderStep {
  DecoderState<T> state;
  nn::Var<T> context;       // c_j over Z
  nn::Var<T> context_edit;  // c'_j over Z'
  nn::Var<T> beta;          // over assertion positions
  nn::Var<T> beta_edit;     // over edit positions
  nn::Var<T> p_vocab;       // extended size; zero beyond the vocabulary
  nn::Var<T> p_ass;
  nn::Var<T> p_ft;
  nn::Var<T> gamma;         // 1x1
  nn::Var<T> theta;         // 1x1
  nn::Var<T> mixture;
};

struct RunOptions {
  bool training = false;
  /// Appends masked padding positions; encoder and decoder softmaxes must
  /// give them weight exactly 0.
  std::size_t pad_assertion_to = 0;
  std::size_t pad_edits_to = 0;
  std::optional<double> force_gamma;
  std::optional<double> force_theta;
};

/// Retrieve-and-edit sequence model: Bi-LSTM encoders over the retrieved
/// assertion and the edit sequence, a shared bilinear co-attention, two
/// modeling Bi-LSTMs, and an LSTM decoder mixing a vocabulary softmax with
/// copy distributions over both sources.
template <typename T>
class EditModel {
 public:
  EditModel(const ModelConfig& config, std::size_t vocab_size);

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }

  /// uniform(-init_range, init_range) weights, zero biases, forget bias 1.
  void init(nn::Rng& rng);

  /// Every array in declaration order (the checkpoint order).
  std::vector<nn::Tensor<T>*> parameters();
  std::vector<nn::Tensor<T>*> trainable_parameters();
  std::size_t num_scalars();

  /// Reads `token floats...` lines; rows of known tokens are overwritten and
  /// the table is frozen. Returns the number of rows loaded.
  std::size_t load_pretrained_embeddings(const std::filesystem::path& path,
                                         const Vocabulary& vocab);

  struct Bound;

  /// Parameters as leaves of `tape`; reuse one binding per tape.
  std::unique_ptr<Bound> bind(nn::Tape<T>& tape);

  /// Row i = [e(retrieved_i) ; e(input_i) ; e(action_i)], an (Le x 2E+A) matrix.
  nn::Var<T> embed_edits(nn::Tape<T>& tape, Bound& p, const EncodedExample& ex);

  EncoderOutput<T> encode(nn::Tape<T>& tape, Bound& p, const EncodedExample& ex,
                          const RunOptions& opt, nn::Rng& rng);

  DecoderState<T> initial_state(nn::Tape<T>& tape, Bound& p, const EncoderOutput<T>& enc);

  DecoderStep<T> decode_step(nn::Tape<T>& tape, Bound& p, const EncoderOutput<T>& enc,
                             const EncodedExample& ex, int prev_token,
                             const DecoderState<T>& prev, const RunOptions& opt, nn::Rng& rng);

  /// Teacher-forced sum of token cross-entropies (targets required).
  nn::Var<T> loss(nn::Tape<T>& tape, const EncodedExample& ex, const RunOptions& opt,
                  nn::Rng& rng);

  /// Copies values from a model of the same architecture.
  template <typename U>
  void copy_values_from(EditModel<U>& other) {
    auto dst = parameters();
    auto src = other.parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      for (std::size_t k = 0; k < dst[i]->size(); ++k) dst[i]->value[k] = T(src[i]->value[k]);
      dst[i]->requires_grad = src[i]->requires_grad;
    }
  }

  nn::Tensor<T> token_embedding;
  nn::Tensor<T> action_embedding;
  nn::LstmParams<T> edit_fwd, edit_bwd;
  nn::LstmParams<T> assertion_fwd, assertion_bwd;
  nn::Tensor<T> w_alpha;
  nn::LstmParams<T> model_assertion_fwd, model_assertion_bwd;
  nn::LstmParams<T> model_edit_fwd, model_edit_bwd;
  nn::LinearParams<T> init_h, init_c;
  nn::LstmParams<T> decoder;
  nn::LinearParams<T> attend_assertion, attend_edit;
  nn::LinearParams<T> output;      // V_c
  nn::LinearParams<T> vocab_proj;  // V_c'
  nn::LinearParams<T> gates;       // [gamma, theta]

 private:
  ModelConfig config_;
  std::size_t vocab_size_;
};

template <typename T>
struct EditModel<T>::Bound {
  nn::Var<T> token_embedding, action_embedding, w_alpha;
  nn::BoundLstm<T> edit_fwd, edit_bwd, assertion_fwd, assertion_bwd;
  nn::BoundLstm<T> model_assertion_fwd, model_assertion_bwd, model_edit_fwd, model_edit_bwd;
  nn::BoundLinear<T> init_h, init_c;
  nn::BoundLstm<T> decoder;
  nn::BoundLinear<T> attend_assertion, attend_edit, output, vocab_proj, gates;
  std::vector<std::uint8_t> vocab_mask;
};

extern template class EditModel<float>;
extern template class EditModel<double>;

}  // namespace reassert
