#include "reassert/editmodel/model.h"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "reassert/error.h"

namespace reassert {

using nn::Var;

void ModelConfig::validate() const {
  if (embed_dim == 0 || action_dim == 0 || encoder_hidden == 0 || decoder_hidden == 0) {
    throw Error("model dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw Error("dropout must be in [0, 1)");
  if (max_input_len == 0 || max_decode_len == 0) throw Error("length limits must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"action_dim", c.action_dim},
          {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"dropout", c.dropout},
          {"init_range", c.init_range},
          {"embedding_mode",
           c.embedding_mode == EmbeddingMode::Trainable ? "trainable" : "pretrained"},
          {"max_input_len", c.max_input_len},
          {"max_decode_len", c.max_decode_len}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.action_dim = j.value("action_dim", c.action_dim);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.init_range = j.value("init_range", c.init_range);
  std::string mode = j.value("embedding_mode", std::string("trainable"));
  if (mode == "trainable") {
    c.embedding_mode = EmbeddingMode::Trainable;
  } else if (mode == "pretrained") {
    c.embedding_mode = EmbeddingMode::PretrainedFrozen;
  } else {
    throw Error("unknown embedding_mode: " + mode);
  }
  c.max_input_len = j.value("max_input_len", c.max_input_len);
  c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
  c.validate();
  return c;
}

EncodedExample encode_example(const Vocabulary& vocab, const TokenSeq& retrieved_assertion,
                              const EditSequence& edits, const TokenSeq* target,
                              std::size_t max_len) {
  if (retrieved_assertion.empty()) throw Error("retrieved assertion is empty");
  if (edits.empty()) throw Error("edit sequence is empty");
  EncodedExample ex;
  ex.vocab_size = vocab.size();
  std::unordered_map<std::string, int> oov_ids;
  auto copy_id = [&](const std::string& tok) {
    if (auto id = vocab.find(tok)) return *id;
    auto [it, fresh] = oov_ids.emplace(tok, int(vocab.size() + ex.oov.size()));
    if (fresh) ex.oov.push_back(tok);
    return it->second;
  };
  const std::size_t la = std::min(retrieved_assertion.size(), max_len);
  for (std::size_t i = 0; i < la; ++i) {
    const auto& tok = retrieved_assertion[i];
    ex.assertion_ids.push_back(vocab.id(tok));
    ex.assertion_ext.push_back(copy_id(tok));
  }
  const std::size_t le = std::min(edits.size(), max_len);
  for (std::size_t i = 0; i < le; ++i) {
    const auto& e = edits[i];
    ex.edit_retrieved.push_back(e.retrieved ? vocab.id(*e.retrieved) : Vocabulary::kEmpty);
    ex.edit_input.push_back(e.input ? vocab.id(*e.input) : Vocabulary::kEmpty);
    ex.edit_action.push_back(int(e.action));
    ex.edit_input_ext.push_back(e.input ? copy_id(*e.input) : -1);
  }
  if (target) {
    ex.decoder_inputs.push_back(Vocabulary::kSos);
    for (const auto& tok : *target) {
      ex.decoder_inputs.push_back(vocab.id(tok));
      if (auto id = vocab.find(tok)) {
        ex.targets.push_back(*id);
      } else if (auto it = oov_ids.find(tok); it != oov_ids.end()) {
        ex.targets.push_back(it->second);
      } else {
        ex.targets.push_back(Vocabulary::kUnk);
      }
    }
    ex.targets.push_back(Vocabulary::kEos);
  }
  return ex;
}

std::string ext_token(const Vocabulary& vocab, const EncodedExample& ex, int ext_id) {
  if (ext_id < 0) throw Error("negative token id");
  if (std::size_t(ext_id) < vocab.size()) return vocab.token(ext_id);
  return ex.oov.at(std::size_t(ext_id) - vocab.size());
}

template <typename T>
EditModel<T>::EditModel(const ModelConfig& config, std::size_t vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  const std::size_t e = config.embed_dim, a = config.action_dim;
  const std::size_t h = config.encoder_hidden, d = config.decoder_hidden;
  token_embedding = nn::Tensor<T>("token_embedding", {vocab_size, e},
                                  config.embedding_mode == EmbeddingMode::Trainable);
  action_embedding = nn::Tensor<T>("action_embedding", {kNumEditActions, a});
  edit_fwd = nn::LstmParams<T>("edit_encoder.fwd", 2 * e + a, h);
  edit_bwd = nn::LstmParams<T>("edit_encoder.bwd", 2 * e + a, h);
  assertion_fwd = nn::LstmParams<T>("assertion_encoder.fwd", e, h);
  assertion_bwd = nn::LstmParams<T>("assertion_encoder.bwd", e, h);
  w_alpha = nn::Tensor<T>("w_alpha", {2 * h, 2 * h});
  model_assertion_fwd = nn::LstmParams<T>("modeling_assertion.fwd", 4 * h, h);
  model_assertion_bwd = nn::LstmParams<T>("modeling_assertion.bwd", 4 * h, h);
  model_edit_fwd = nn::LstmParams<T>("modeling_edit.fwd", 4 * h, h);
  model_edit_bwd = nn::LstmParams<T>("modeling_edit.bwd", 4 * h, h);
  init_h = nn::LinearParams<T>("decoder_init.h", 4 * h, d);
  init_c = nn::LinearParams<T>("decoder_init.c", 4 * h, d);
  decoder = nn::LstmParams<T>("decoder", e + d, d);
  attend_assertion = nn::LinearParams<T>("decoder_attention.assertion", d, 2 * h, false);
  attend_edit = nn::LinearParams<T>("decoder_attention.edit", d, 2 * h, false);
  output = nn::LinearParams<T>("output", 4 * h + d, d, false);
  vocab_proj = nn::LinearParams<T>("vocab_projection", d, vocab_size, false);
  gates = nn::LinearParams<T>("copy_gates", 4 * h + d, 2);
}

template <typename T>
std::vector<nn::Tensor<T>*> EditModel<T>::parameters() {
  std::vector<nn::Tensor<T>*> out = {&token_embedding, &action_embedding};
  auto append = [&](std::vector<nn::Tensor<T>*> ts) { out.insert(out.end(), ts.begin(), ts.end()); };
  append(edit_fwd.tensors());
  append(edit_bwd.tensors());
  append(assertion_fwd.tensors());
  append(assertion_bwd.tensors());
  out.push_back(&w_alpha);
  append(model_assertion_fwd.tensors());
  append(model_assertion_bwd.tensors());
  append(model_edit_fwd.tensors());
  append(model_edit_bwd.tensors());
  append(init_h.tensors());
  append(init_c.tensors());
  append(decoder.tensors());
  append(attend_assertion.tensors());
  append(attend_edit.tensors());
  append(output.tensors());
  append(vocab_proj.tensors());
  append(gates.tensors());
  return out;
}

template <typename T>
std::vector<nn::Tensor<T>*> EditModel<T>::trainable_parameters() {
  std::vector<nn::Tensor<T>*> out;
  for (auto* p : parameters()) {
    if (p->requires_grad) out.push_back(p);
  }
  return out;
}

template <typename T>
std::size_t EditModel<T>::num_scalars() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->size();
  return n;
}

template <typename T>
void EditModel<T>::init(nn::Rng& rng) {
  const double r = config_.init_range;
  nn::fill_uniform(token_embedding, rng, -r, r);
  nn::fill_uniform(action_embedding, rng, -r, r);
  for (auto* lstm : {&edit_fwd, &edit_bwd, &assertion_fwd, &assertion_bwd, &model_assertion_fwd,
                     &model_assertion_bwd, &model_edit_fwd, &model_edit_bwd, &decoder}) {
    lstm->init(rng, r);
  }
  nn::fill_uniform(w_alpha, rng, -r, r);
  for (auto* lin : {&init_h, &init_c, &attend_assertion, &attend_edit, &output, &vocab_proj, &gates}) {
    lin->init(rng, r);
  }
}

template <typename T>
std::size_t EditModel<T>::load_pretrained_embeddings(const std::filesystem::path& path,
                                                     const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::size_t dim = config_.embed_dim;
  std::string line;
  std::size_t lineno = 0, loaded = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<T> vec;
    double v;
    while (fields >> v) vec.push_back(T(v));
    // fastText .vec files open with a "count dim" header line.
    if (lineno == 1 && vec.size() == 1) continue;
    if (vec.size() != dim) {
      throw FormatError(path.string() + ": expected " + std::to_string(dim) + " values, got " +
                            std::to_string(vec.size()),
                        lineno);
    }
    auto id = vocab.find(token);
    if (!id || Vocabulary::is_special(*id)) continue;
    std::copy(vec.begin(), vec.end(), token_embedding.value.begin() + std::ptrdiff_t(*id * dim));
    ++loaded;
  }
  token_embedding.requires_grad = false;
  return loaded;
}

template <typename T>
std::unique_ptr<typename EditModel<T>::Bound> EditModel<T>::bind(nn::Tape<T>& tape) {
  auto b = std::make_unique<Bound>();
  b->token_embedding = tape.param(token_embedding);
  b->action_embedding = tape.param(action_embedding);
  b->w_alpha = tape.param(w_alpha);
  b->edit_fwd = nn::bind(tape, edit_fwd);
  b->edit_bwd = nn::bind(tape, edit_bwd);
  b->assertion_fwd = nn::bind(tape, assertion_fwd);
  b->assertion_bwd = nn::bind(tape, assertion_bwd);
  b->model_assertion_fwd = nn::bind(tape, model_assertion_fwd);
  b->model_assertion_bwd = nn::bind(tape, model_assertion_bwd);
  b->model_edit_fwd = nn::bind(tape, model_edit_fwd);
  b->model_edit_bwd = nn::bind(tape, model_edit_bwd);
  b->init_h = nn::bind(tape, init_h);
  b->init_c = nn::bind(tape, init_c);
  b->decoder = nn::bind(tape, decoder);
  b->attend_assertion = nn::bind(tape, attend_assertion);
  b->attend_edit = nn::bind(tape, attend_edit);
  b->output = nn::bind(tape, output);
  b->vocab_proj = nn::bind(tape, vocab_proj);
  b->gates = nn::bind(tape, gates);
  // Never generated: padding, start-of-sequence and the empty-slot marker.
  b->vocab_mask.assign(vocab_size_, 1);
  b->vocab_mask[Vocabulary::kPad] = 0;
  b->vocab_mask[Vocabulary::kSos] = 0;
  b->vocab_mask[Vocabulary::kEmpty] = 0;
  return b;
}

template <typename T>
Var<T> EditModel<T>::embed_edits(nn::Tape<T>&, Bound& p, const EncodedExample& ex) {
  auto retrieved = nn::lookup(p.token_embedding, ex.edit_retrieved);
  auto input = nn::lookup(p.token_embedding, ex.edit_input);
  auto action = nn::lookup(p.action_embedding, ex.edit_action);
  return nn::concat_cols(nn::concat_cols(retrieved, input), action);
}

template <typename T>
EncoderOutput<T> EditModel<T>::encode(nn::Tape<T>& tape, Bound& p, const EncodedExample& ex,
                                      const RunOptions& opt, nn::Rng& rng) {
  if (ex.assertion_ids.empty() || ex.edit_action.empty()) {
    throw Error("encode: empty retrieved assertion or edit sequence");
  }
  const double rate = config_.dropout;
  const std::size_t la = ex.assertion_ids.size(), le = ex.edit_action.size();
  const std::size_t la_pad = std::max(la, opt.pad_assertion_to);
  const std::size_t le_pad = std::max(le, opt.pad_edits_to);

  EncoderOutput<T> out;
  out.assertion_mask.assign(la_pad, 0);
  out.edit_mask.assign(le_pad, 0);
  out.edit_copy_mask.assign(le_pad, 0);
  std::fill_n(out.assertion_mask.begin(), la, 1);
  std::fill_n(out.edit_mask.begin(), le, 1);
  for (std::size_t k = 0; k < le; ++k) out.edit_copy_mask[k] = ex.edit_input_ext[k] >= 0;

  // Contextual embedding layer.
  auto x_assert = nn::dropout(nn::lookup(p.token_embedding, ex.assertion_ids), rate, opt.training, rng);
  auto x_edit = nn::dropout(embed_edits(tape, p, ex), rate, opt.training, rng);
  out.H = nn::pad_rows(nn::bilstm_run(x_assert, p.assertion_fwd, p.assertion_bwd).states, la_pad);
  out.H_edit = nn::pad_rows(nn::bilstm_run(x_edit, p.edit_fwd, p.edit_bwd).states, le_pad);

  // Attention layer: scores(i, k) = h'_k^T W h_i, shared by both directions.
  auto scores = nn::matmul_nt(nn::matmul_nt(out.H, p.w_alpha), out.H_edit);
  out.alpha = nn::softmax_rows(scores, out.edit_mask);
  out.alpha_edit = nn::softmax_rows(nn::transpose(scores), out.assertion_mask);
  auto g = nn::matmul(out.alpha, out.H_edit);
  auto g_edit = nn::matmul(out.alpha_edit, out.H);

  // Modeling layer over [g ; h], real positions only.
  auto f = nn::slice_rows(nn::concat_cols(g, out.H), 0, la);
  auto f_edit = nn::slice_rows(nn::concat_cols(g_edit, out.H_edit), 0, le);
  auto z = nn::bilstm_run(nn::dropout(f, rate, opt.training, rng), p.model_assertion_fwd,
                          p.model_assertion_bwd);
  auto z_edit = nn::bilstm_run(nn::dropout(f_edit, rate, opt.training, rng), p.model_edit_fwd,
                               p.model_edit_bwd);
  out.Z = nn::pad_rows(z.states, la_pad);
  out.Z_edit = nn::pad_rows(z_edit.states, le_pad);
  out.z_fwd_final = z.forward_final;
  out.z_bwd_final = z.backward_final;
  out.z_edit_fwd_final = z_edit.forward_final;
  out.z_edit_bwd_final = z_edit.backward_final;
  return out;
}

template <typename T>
DecoderState<T> EditModel<T>::initial_state(nn::Tape<T>& tape, Bound& p,
                                            const EncoderOutput<T>& enc) {
  auto h = nn::concat<T>({enc.z_fwd_final.h, enc.z_bwd_final.h, enc.z_edit_fwd_final.h,
                          enc.z_edit_bwd_final.h});
  auto c = nn::concat<T>({enc.z_fwd_final.c, enc.z_bwd_final.c, enc.z_edit_fwd_final.c,
                          enc.z_edit_bwd_final.c});
  return {{p.init_h(h), p.init_c(c)}, tape.zeros({config_.decoder_hidden, 1})};
}

template <typename T>
DecoderStep<T> EditModel<T>::decode_step(nn::Tape<T>& tape, Bound& p, const EncoderOutput<T>& enc,
                                         const EncodedExample& ex, int prev_token,
                                         const DecoderState<T>& prev, const RunOptions& opt,
                                         nn::Rng& rng) {
  const std::size_t ext = ex.ext_size();
  DecoderStep<T> step;

  auto emb = nn::row(nn::lookup(p.token_embedding, {prev_token}), 0);
  auto input = nn::dropout(nn::concat<T>({emb, prev.o}), config_.dropout, opt.training, rng);
  step.state.s = nn::lstm_cell_step(input, prev.s, p.decoder);
  auto s = step.state.s.h;

  auto scores = nn::matmul(enc.Z, p.attend_assertion(s));
  step.beta = nn::softmax(scores, enc.assertion_mask);
  step.context = nn::matmul_tn(enc.Z, step.beta);
  auto scores_edit = nn::matmul(enc.Z_edit, p.attend_edit(s));
  step.beta_edit = nn::softmax(scores_edit, enc.edit_mask);
  step.context_edit = nn::matmul_tn(enc.Z_edit, step.beta_edit);

  auto features = nn::concat<T>({step.context, step.context_edit, s});
  step.state.o = nn::tanh(p.output(features));
  step.p_vocab = nn::pad_rows(nn::softmax(p.vocab_proj(step.state.o), p.vocab_mask), ext);

  std::vector<int> assertion_index(enc.assertion_mask.size(), Vocabulary::kPad);
  std::copy(ex.assertion_ext.begin(), ex.assertion_ext.end(), assertion_index.begin());
  step.p_ass = nn::scatter_add(step.beta, assertion_index, ext);

  // The input-side copy distribution renormalizes the edit attention over
  // edits whose input slot holds a token.
  bool any_copy = std::find(enc.edit_copy_mask.begin(), enc.edit_copy_mask.end(), 1) !=
                  enc.edit_copy_mask.end();
  if (any_copy) {
    std::vector<int> edit_index(enc.edit_mask.size(), Vocabulary::kPad);
    for (std::size_t k = 0; k < ex.edit_input_ext.size(); ++k) {
      edit_index[k] = std::max(ex.edit_input_ext[k], 0);
    }
    step.p_ft = nn::scatter_add(nn::softmax(scores_edit, enc.edit_copy_mask), edit_index, ext);
  } else {
    step.p_ft = step.p_ass;
  }

  auto gate_values = nn::sigmoid(p.gates(features));
  step.gamma = opt.force_gamma ? tape.constant({1, 1}, {T(*opt.force_gamma)})
                               : nn::slice_rows(gate_values, 0, 1);
  step.theta = opt.force_theta ? tape.constant({1, 1}, {T(*opt.force_theta)})
                               : nn::slice_rows(gate_values, 1, 1);
  auto copy = nn::affine(step.gamma, T(-1), T(1));
  auto w_ass = nn::mul(copy, step.theta);
  auto w_ft = nn::mul(copy, nn::affine(step.theta, T(-1), T(1)));
  step.mixture = nn::add_n<T>({nn::scale(step.gamma, step.p_vocab), nn::scale(w_ass, step.p_ass),
                               nn::scale(w_ft, step.p_ft)});
  return step;
}

template <typename T>
Var<T> EditModel<T>::loss(nn::Tape<T>& tape, const EncodedExample& ex, const RunOptions& opt,
                          nn::Rng& rng) {
  if (!ex.has_target()) throw Error("loss: example has no target");
  auto p = bind(tape);
  auto enc = encode(tape, *p, ex, opt, rng);
  auto state = initial_state(tape, *p, enc);
  std::vector<Var<T>> terms;
  terms.reserve(ex.targets.size());
  for (std::size_t j = 0; j < ex.targets.size(); ++j) {
    auto step = decode_step(tape, *p, enc, ex, ex.decoder_inputs[j], state, opt, rng);
    terms.push_back(nn::cross_entropy_masked(step.mixture, std::size_t(ex.targets[j]), false));
    state = step.state;
  }
  return nn::add_n(terms);
}

template class EditModel<float>;
template class EditModel<double>;

}  // namespace reassert
