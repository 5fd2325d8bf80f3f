#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "simstream/numerics.hpp"
#include "simstream/rng.hpp"
#include "simstream/vocab.hpp"

namespace simstream {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

// 2-layer uni-directional LSTM encoder, 2-layer LSTM decoder, dot-product
// attention over top-layer encoder states, tanh projection of
// [context; hidden], linear vocabulary projection. The decoder's first state
// is all zeros; no input feeding.
template <typename T>
struct Seq2SeqParams {
  int embed = 0;
  int hidden = 0;
  Mat<T> src_embedding;  // [V_src x E]
  Mat<T> tgt_embedding;  // [V_tgt x E]
  std::array<LstmCellParams<T>, 2> encoder;  // layer 0: E->H, layer 1: H->H
  std::array<LstmCellParams<T>, 2> decoder;
  Mat<T> attn_proj;   // [H x 2H], applied to [context; hidden]
  Mat<T> vocab_proj;  // [V_tgt x H]

  int src_vocab() const { return src_embedding.rows; }
  int tgt_vocab() const { return tgt_embedding.rows; }

  static Seq2SeqParams init(int src_vocab, int tgt_vocab, int embed,
                            int hidden, Rng& rng);

  template <typename F>
  void for_each_tensor(F&& f);
  template <typename F>
  void for_each_tensor(F&& f) const;
};

namespace detail {

template <typename T>
LstmCellParams<T> init_cell(int input_dim, int hidden, Rng& rng) {
  LstmCellParams<T> p;
  p.w_input = Mat<T>(4 * hidden, input_dim);
  p.w_recur = Mat<T>(4 * hidden, hidden);
  p.bias.assign(static_cast<std::size_t>(4) * hidden, T(0));
  for (auto& v : p.w_input.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  for (auto& v : p.w_recur.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  for (int j = 0; j < 4 * hidden; ++j) {
    // forget-gate biases start at 1, the rest uniform in [-0.1, 0.1]
    p.bias[j] = (j >= hidden && j < 2 * hidden)
                    ? T(1)
                    : static_cast<T>(rng.uniform(-0.1, 0.1));
  }
  return p;
}

template <typename T, typename P, typename F>
void visit_seq2seq_tensors(P& p, F&& f) {
  f("src_embedding", p.src_embedding.a,
    std::vector<int>{p.src_embedding.rows, p.src_embedding.cols});
  f("tgt_embedding", p.tgt_embedding.a,
    std::vector<int>{p.tgt_embedding.rows, p.tgt_embedding.cols});
  const char* enc_names[2][3] = {{"enc0_wx", "enc0_wh", "enc0_b"},
                                 {"enc1_wx", "enc1_wh", "enc1_b"}};
  const char* dec_names[2][3] = {{"dec0_wx", "dec0_wh", "dec0_b"},
                                 {"dec1_wx", "dec1_wh", "dec1_b"}};
  for (int l = 0; l < 2; ++l) {
    auto& e = p.encoder[l];
    f(enc_names[l][0], e.w_input.a,
      std::vector<int>{e.w_input.rows, e.w_input.cols});
    f(enc_names[l][1], e.w_recur.a,
      std::vector<int>{e.w_recur.rows, e.w_recur.cols});
    f(enc_names[l][2], e.bias, std::vector<int>{(int)e.bias.size()});
  }
  for (int l = 0; l < 2; ++l) {
    auto& d = p.decoder[l];
    f(dec_names[l][0], d.w_input.a,
      std::vector<int>{d.w_input.rows, d.w_input.cols});
    f(dec_names[l][1], d.w_recur.a,
      std::vector<int>{d.w_recur.rows, d.w_recur.cols});
    f(dec_names[l][2], d.bias, std::vector<int>{(int)d.bias.size()});
  }
  f("attn_proj", p.attn_proj.a,
    std::vector<int>{p.attn_proj.rows, p.attn_proj.cols});
  f("vocab_proj", p.vocab_proj.a,
    std::vector<int>{p.vocab_proj.rows, p.vocab_proj.cols});
}

}  // namespace detail

template <typename T>
Seq2SeqParams<T> Seq2SeqParams<T>::init(int src_vocab, int tgt_vocab,
                                        int embed, int hidden, Rng& rng) {
  if (src_vocab < kNumReservedIds || tgt_vocab < kNumReservedIds ||
      embed < 1 || hidden < 1)
    throw std::invalid_argument("Seq2SeqParams::init: bad dimensions");
  Seq2SeqParams<T> p;
  p.embed = embed;
  p.hidden = hidden;
  p.src_embedding = Mat<T>(src_vocab, embed);
  p.tgt_embedding = Mat<T>(tgt_vocab, embed);
  for (auto& v : p.src_embedding.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  for (auto& v : p.tgt_embedding.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  p.encoder[0] = detail::init_cell<T>(embed, hidden, rng);
  p.encoder[1] = detail::init_cell<T>(hidden, hidden, rng);
  p.decoder[0] = detail::init_cell<T>(embed, hidden, rng);
  p.decoder[1] = detail::init_cell<T>(hidden, hidden, rng);
  p.attn_proj = Mat<T>(hidden, 2 * hidden);
  p.vocab_proj = Mat<T>(tgt_vocab, hidden);
  for (auto& v : p.attn_proj.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  for (auto& v : p.vocab_proj.a) v = static_cast<T>(rng.uniform(-0.1, 0.1));
  return p;
}

template <typename T>
template <typename F>
void Seq2SeqParams<T>::for_each_tensor(F&& f) {
  detail::visit_seq2seq_tensors<T>(*this, std::forward<F>(f));
}

template <typename T>
template <typename F>
void Seq2SeqParams<T>::for_each_tensor(F&& f) const {
  detail::visit_seq2seq_tensors<T>(*this, std::forward<F>(f));
}

template <typename U, typename T>
Seq2SeqParams<U> cast_params(const Seq2SeqParams<T>& p) {
  Seq2SeqParams<U> out;
  out.embed = p.embed;
  out.hidden = p.hidden;
  out.src_embedding = cast_mat<U>(p.src_embedding);
  out.tgt_embedding = cast_mat<U>(p.tgt_embedding);
  for (int l = 0; l < 2; ++l) {
    out.encoder[l] = cast_cell<U>(p.encoder[l]);
    out.decoder[l] = cast_cell<U>(p.decoder[l]);
  }
  out.attn_proj = cast_mat<U>(p.attn_proj);
  out.vocab_proj = cast_mat<U>(p.vocab_proj);
  return out;
}

// Gradient buffers shaped like a parameter set.
template <typename T>
struct Seq2SeqGrads {
  Mat<T> src_embedding;
  Mat<T> tgt_embedding;
  std::array<LstmCellGrads<T>, 2> encoder;
  std::array<LstmCellGrads<T>, 2> decoder;
  Mat<T> attn_proj;
  Mat<T> vocab_proj;

  static Seq2SeqGrads zeros_like(const Seq2SeqParams<T>& p) {
    Seq2SeqGrads g;
    g.src_embedding = Mat<T>(p.src_embedding.rows, p.src_embedding.cols);
    g.tgt_embedding = Mat<T>(p.tgt_embedding.rows, p.tgt_embedding.cols);
    for (int l = 0; l < 2; ++l) {
      g.encoder[l].w_input =
          Mat<T>(p.encoder[l].w_input.rows, p.encoder[l].w_input.cols);
      g.encoder[l].w_recur =
          Mat<T>(p.encoder[l].w_recur.rows, p.encoder[l].w_recur.cols);
      g.encoder[l].bias.assign(p.encoder[l].bias.size(), T(0));
      g.decoder[l].w_input =
          Mat<T>(p.decoder[l].w_input.rows, p.decoder[l].w_input.cols);
      g.decoder[l].w_recur =
          Mat<T>(p.decoder[l].w_recur.rows, p.decoder[l].w_recur.cols);
      g.decoder[l].bias.assign(p.decoder[l].bias.size(), T(0));
    }
    g.attn_proj = Mat<T>(p.attn_proj.rows, p.attn_proj.cols);
    g.vocab_proj = Mat<T>(p.vocab_proj.rows, p.vocab_proj.cols);
    return g;
  }

  void zero() {
    for_each_tensor([](const char*, std::vector<T>& v, const std::vector<int>&) {
      std::fill(v.begin(), v.end(), T(0));
    });
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    detail::visit_seq2seq_tensors<T>(*this, std::forward<F>(f));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    detail::visit_seq2seq_tensors<T>(*this, std::forward<F>(f));
  }
};

// Pairs every parameter tensor with its gradient; shapes must match.
template <typename T>
std::vector<ParamGradBind<T>> make_binds(Seq2SeqParams<T>& p,
                                         const Seq2SeqGrads<T>& g) {
  std::vector<std::pair<std::string, std::pair<T*, std::size_t>>> ps;
  p.for_each_tensor([&](const char* name, std::vector<T>& v,
                        const std::vector<int>&) {
    ps.push_back({name, {v.data(), v.size()}});
  });
  std::vector<std::pair<std::string, std::pair<const T*, std::size_t>>> gs;
  g.for_each_tensor([&](const char* name, const std::vector<T>& v,
                        const std::vector<int>&) {
    gs.push_back({name, {v.data(), v.size()}});
  });
  if (ps.size() != gs.size())
    throw std::invalid_argument("make_binds: tensor count mismatch");
  std::vector<ParamGradBind<T>> binds;
  binds.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].first != gs[i].first || ps[i].second.second != gs[i].second.second)
      throw std::invalid_argument("make_binds: shape mismatch at " +
                                  ps[i].first);
    binds.push_back({ps[i].second.first, gs[i].second.first,
                     ps[i].second.second});
  }
  return binds;
}

// ---------------------------------------------------------------------------
// Inference state
// ---------------------------------------------------------------------------

template <typename T>
struct LayerState {
  std::vector<T> h;
  std::vector<T> c;
};

// Streaming encoder state: per-layer carried (h, c) plus the append-only list
// of top-layer hidden vectors. Attention reads exactly the first `consumed`
// stored vectors, never past them.
template <typename T>
struct EncState {
  std::array<LayerState<T>, 2> layers;
  std::vector<std::vector<T>> top;
  std::size_t consumed = 0;

  static EncState initial(int hidden) {
    EncState s;
    for (auto& l : s.layers) {
      l.h.assign(hidden, T(0));
      l.c.assign(hidden, T(0));
    }
    return s;
  }

  std::span<const std::vector<T>> states() const {
    return std::span<const std::vector<T>>(top.data(), consumed);
  }
};

template <typename T>
struct DecState {
  std::array<LayerState<T>, 2> layers;
  int last_token = kBosId;

  static DecState initial(int hidden) {
    DecState s;
    for (auto& l : s.layers) {
      l.h.assign(hidden, T(0));
      l.c.assign(hidden, T(0));
    }
    return s;
  }
};

// Consumes one more source token: one uni-directional step per layer,
// appending exactly one top-layer vector.
template <typename T>
void encode_extend(const Seq2SeqParams<T>& p, EncState<T>& s, int token_id) {
  if (token_id < 0 || token_id >= p.src_vocab())
    throw std::invalid_argument("encode_extend: token id out of range");
  std::span<const T> x(p.src_embedding.row(token_id),
                       static_cast<std::size_t>(p.embed));
  LstmStep<T> s0 = lstm_cell_forward<T>(x, s.layers[0].h, s.layers[0].c,
                                        p.encoder[0]);
  LstmStep<T> s1 = lstm_cell_forward<T>(std::span<const T>(s0.h),
                                        s.layers[1].h, s.layers[1].c,
                                        p.encoder[1]);
  s.layers[0].h = s0.h;
  s.layers[0].c = std::move(s0.c);
  s.layers[1].h = s1.h;
  s.layers[1].c = std::move(s1.c);
  s.top.push_back(std::move(s1.h));
  ++s.consumed;
}

// Offline full-sequence encoding in one pass.
template <typename T>
EncState<T> encode_sequence(const Seq2SeqParams<T>& p,
                            std::span<const int> tokens) {
  EncState<T> s = EncState<T>::initial(p.hidden);
  for (const int t : tokens) encode_extend(p, s, t);
  return s;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

template <typename T>
struct DecodeStepOut {
  std::vector<T> logprobs;  // normalized log-probabilities over V_tgt
  std::array<LayerState<T>, 2> layers;
};

// Embeds the last emitted token, runs both decoder layers, attends over the
// currently stored encoder vectors, and returns log-probabilities.
template <typename T>
DecodeStepOut<T> decode_step(const Seq2SeqParams<T>& p, const DecState<T>& d,
                             const EncState<T>& enc) {
  if (enc.consumed == 0)
    throw std::invalid_argument("decode_step: empty encoder state");
  if (d.last_token < 0 || d.last_token >= p.tgt_vocab())
    throw std::invalid_argument("decode_step: token id out of range");
  std::span<const T> x(p.tgt_embedding.row(d.last_token),
                       static_cast<std::size_t>(p.embed));
  LstmStep<T> s0 =
      lstm_cell_forward<T>(x, d.layers[0].h, d.layers[0].c, p.decoder[0]);
  LstmStep<T> s1 = lstm_cell_forward<T>(std::span<const T>(s0.h),
                                        d.layers[1].h, d.layers[1].c,
                                        p.decoder[1]);
  AttentionOut<T> att = attention<T>(enc.states(), std::span<const T>(s1.h));
  const int h = p.hidden;
  std::vector<T> u(static_cast<std::size_t>(2) * h);
  std::copy(att.context.begin(), att.context.end(), u.begin());
  std::copy(s1.h.begin(), s1.h.end(), u.begin() + h);
  std::vector<T> av(h);
  matvec(p.attn_proj, u.data(), av.data());
  for (auto& v : av) v = std::tanh(v);
  std::vector<T> logits(p.tgt_vocab());
  matvec(p.vocab_proj, av.data(), logits.data());
  DecodeStepOut<T> out;
  out.logprobs = log_softmax<T>(logits);
  out.layers[0].h = std::move(s0.h);
  out.layers[0].c = std::move(s0.c);
  out.layers[1].h = std::move(s1.h);
  out.layers[1].c = std::move(s1.c);
  return out;
}

// First index holding the maximum value.
template <typename T>
int argmax(std::span<const T> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <typename T>
struct GreedyContinuation {
  std::vector<int> tokens;            // emitted words; never contains </s>
  std::vector<T> probs;               // probability of each emitted word
  std::vector<DecState<T>> states;    // decoder state after each word
};

// Repeated argmax decoding until </s> or max_len words.
template <typename T>
GreedyContinuation<T> greedy_continue(const Seq2SeqParams<T>& p,
                                      const DecState<T>& start,
                                      const EncState<T>& enc, int max_len) {
  if (max_len < 1)
    throw std::invalid_argument("greedy_continue: max_len must be >= 1");
  GreedyContinuation<T> out;
  DecState<T> cur = start;
  for (int k = 0; k < max_len; ++k) {
    DecodeStepOut<T> step = decode_step(p, cur, enc);
    const int a = argmax<T>(step.logprobs);
    if (a == kEosId) break;
    cur.layers = std::move(step.layers);
    cur.last_token = a;
    out.tokens.push_back(a);
    out.probs.push_back(static_cast<T>(
        std::exp(static_cast<double>(step.logprobs[a]))));
    out.states.push_back(cur);
  }
  return out;
}

// Word cap used whenever a continuation is regenerated.
inline int decode_length_cap(std::size_t source_consumed) {
  return static_cast<int>(2 * source_consumed + 5);
}

// ---------------------------------------------------------------------------
// Teacher-forced loss (training and gradient checking)
// ---------------------------------------------------------------------------

template <typename T>
struct DecStepCache {
  int input_token = 0;
  int target = 0;
  std::array<LstmStep<T>, 2> step;
  std::vector<T> drop_mask;  // empty when dropout is off
  std::vector<T> l1_input;   // layer-0 output after dropout
  std::vector<T> attn_weights;
  std::vector<T> context;
  std::vector<T> attn_vec;   // post-tanh
  std::vector<T> probs;      // softmax over V_tgt
};

template <typename T>
struct LossCaches {
  std::vector<int> src;
  std::array<std::vector<LstmStep<T>>, 2> enc_steps;
  std::vector<std::vector<T>> enc_drop_mask;
  std::vector<std::vector<T>> enc_l1_input;
  std::vector<std::vector<T>> enc_top;  // stored top-layer vectors
  std::vector<DecStepCache<T>> dec;
  T loss_sum = 0;
  int token_count = 0;
};

// Sum of per-token cross-entropy under teacher forcing. `tgt` holds the gold
// words without <s>/</s>; the decoder input sequence is <s> + tgt and the
// prediction targets are tgt + </s>. Dropout (inverted, between stacked
// layers only) is applied when dropout > 0 and rng != nullptr.
template <typename T>
LossCaches<T> seq2seq_loss_forward(const Seq2SeqParams<T>& p,
                                   std::span<const int> src,
                                   std::span<const int> tgt, T dropout,
                                   Rng* rng) {
  if (src.empty()) throw std::invalid_argument("loss_forward: empty source");
  const int h = p.hidden;
  const bool use_drop = dropout > T(0) && rng != nullptr;
  const T keep_scale = use_drop ? T(1) / (T(1) - dropout) : T(1);
  LossCaches<T> c;
  c.src.assign(src.begin(), src.end());

  // encoder
  std::vector<T> zeros(h, T(0));
  std::span<const T> h0 = zeros, c0 = zeros, h1 = zeros, c1 = zeros;
  for (std::size_t t = 0; t < src.size(); ++t) {
    const int tok = src[t];
    if (tok < 0 || tok >= p.src_vocab())
      throw std::invalid_argument("loss_forward: source id out of range");
    std::span<const T> x(p.src_embedding.row(tok),
                         static_cast<std::size_t>(p.embed));
    c.enc_steps[0].push_back(lstm_cell_forward<T>(x, h0, c0, p.encoder[0]));
    const auto& s0 = c.enc_steps[0].back();
    std::vector<T> in1 = s0.h;
    std::vector<T> mask;
    if (use_drop) {
      mask.resize(h);
      for (int j = 0; j < h; ++j)
        mask[j] = rng->bernoulli(static_cast<double>(dropout)) ? T(0)
                                                               : keep_scale;
      for (int j = 0; j < h; ++j) in1[j] *= mask[j];
    }
    c.enc_drop_mask.push_back(std::move(mask));
    c.enc_steps[1].push_back(lstm_cell_forward<T>(std::span<const T>(in1), h1,
                                                  c1, p.encoder[1]));
    c.enc_l1_input.push_back(std::move(in1));
    const auto& s1 = c.enc_steps[1].back();
    c.enc_top.push_back(s1.h);
    h0 = c.enc_steps[0][t].h;
    c0 = c.enc_steps[0][t].c;
    h1 = s1.h;
    c1 = s1.c;
  }

  // decoder, teacher forced
  const int steps = static_cast<int>(tgt.size()) + 1;
  std::span<const T> dh0 = zeros, dc0 = zeros, dh1 = zeros, dc1 = zeros;
  std::span<const std::vector<T>> enc_states(c.enc_top.data(),
                                             c.enc_top.size());
  for (int t = 0; t < steps; ++t) {
    DecStepCache<T> d;
    d.input_token = (t == 0) ? kBosId : tgt[t - 1];
    d.target = (t < static_cast<int>(tgt.size())) ? tgt[t] : kEosId;
    if (d.input_token < 0 || d.input_token >= p.tgt_vocab() || d.target < 0 ||
        d.target >= p.tgt_vocab())
      throw std::invalid_argument("loss_forward: target id out of range");
    std::span<const T> x(p.tgt_embedding.row(d.input_token),
                         static_cast<std::size_t>(p.embed));
    d.step[0] = lstm_cell_forward<T>(x, dh0, dc0, p.decoder[0]);
    d.l1_input = d.step[0].h;
    if (use_drop) {
      d.drop_mask.resize(h);
      for (int j = 0; j < h; ++j)
        d.drop_mask[j] = rng->bernoulli(static_cast<double>(dropout))
                             ? T(0)
                             : keep_scale;
      for (int j = 0; j < h; ++j) d.l1_input[j] *= d.drop_mask[j];
    }
    d.step[1] = lstm_cell_forward<T>(std::span<const T>(d.l1_input), dh1, dc1,
                                     p.decoder[1]);
    AttentionOut<T> att =
        attention<T>(enc_states, std::span<const T>(d.step[1].h));
    d.attn_weights = std::move(att.weights);
    d.context = std::move(att.context);
    std::vector<T> u(static_cast<std::size_t>(2) * h);
    std::copy(d.context.begin(), d.context.end(), u.begin());
    std::copy(d.step[1].h.begin(), d.step[1].h.end(), u.begin() + h);
    d.attn_vec.resize(h);
    matvec(p.attn_proj, u.data(), d.attn_vec.data());
    for (auto& v : d.attn_vec) v = std::tanh(v);
    std::vector<T> logits(p.tgt_vocab());
    matvec(p.vocab_proj, d.attn_vec.data(), logits.data());
    CrossEntropyOut<T> ce =
        softmax_cross_entropy<T>(std::span<const T>(logits), d.target);
    c.loss_sum += ce.loss;
    ++c.token_count;
    d.probs = std::move(ce.grad);
    d.probs[d.target] += T(1);  // store softmax itself; backward re-subtracts
    c.dec.push_back(std::move(d));
    dh0 = c.dec.back().step[0].h;
    dc0 = c.dec.back().step[0].c;
    dh1 = c.dec.back().step[1].h;
    dc1 = c.dec.back().step[1].c;
  }
  return c;
}

// Backpropagation through time for the summed sentence loss.
template <typename T>
void seq2seq_loss_backward(const Seq2SeqParams<T>& p, const LossCaches<T>& c,
                           Seq2SeqGrads<T>& g) {
  const int h = p.hidden;
  const int n_src = static_cast<int>(c.src.size());
  const int n_dec = static_cast<int>(c.dec.size());
  std::vector<T> zeros(h, T(0));
  std::vector<std::vector<T>> denc_top(n_src, std::vector<T>(h, T(0)));
  std::span<const std::vector<T>> enc_states(c.enc_top.data(),
                                             c.enc_top.size());

  // decoder BPTT
  std::array<std::vector<T>, 2> dh_rec{std::vector<T>(h, T(0)),
                                       std::vector<T>(h, T(0))};
  std::array<std::vector<T>, 2> dc_rec{std::vector<T>(h, T(0)),
                                       std::vector<T>(h, T(0))};
  for (int t = n_dec - 1; t >= 0; --t) {
    const auto& d = c.dec[t];
    std::vector<T> dlogits = d.probs;
    dlogits[d.target] -= T(1);
    add_outer(g.vocab_proj, dlogits.data(), d.attn_vec.data());
    std::vector<T> dav(h, T(0));
    matvec_transpose_add(p.vocab_proj, dlogits.data(), dav.data());
    for (int j = 0; j < h; ++j)
      dav[j] *= (T(1) - d.attn_vec[j] * d.attn_vec[j]);
    std::vector<T> u(static_cast<std::size_t>(2) * h);
    std::copy(d.context.begin(), d.context.end(), u.begin());
    std::copy(d.step[1].h.begin(), d.step[1].h.end(), u.begin() + h);
    add_outer(g.attn_proj, dav.data(), u.data());
    std::vector<T> du(static_cast<std::size_t>(2) * h, T(0));
    matvec_transpose_add(p.attn_proj, dav.data(), du.data());
    std::vector<T> dh1(dh_rec[1]);
    for (int j = 0; j < h; ++j) dh1[j] += du[h + j];
    attention_backward<T>(enc_states, std::span<const T>(d.step[1].h),
                          std::span<const T>(d.attn_weights),
                          std::span<const T>(du.data(), h),
                          std::span<const T>(), std::span<T>(dh1),
                          std::span<std::vector<T>>(denc_top));
    const std::span<const T> h1_prev =
        (t > 0) ? std::span<const T>(c.dec[t - 1].step[1].h)
                : std::span<const T>(zeros);
    const std::span<const T> c1_prev =
        (t > 0) ? std::span<const T>(c.dec[t - 1].step[1].c)
                : std::span<const T>(zeros);
    std::vector<T> d_l1_in(h, T(0));
    std::array<std::vector<T>, 2> dh_new{std::vector<T>(h, T(0)),
                                         std::vector<T>(h, T(0))};
    std::array<std::vector<T>, 2> dc_new{std::vector<T>(h, T(0)),
                                         std::vector<T>(h, T(0))};
    lstm_cell_backward<T>(p.decoder[1], std::span<const T>(d.l1_input),
                          h1_prev, c1_prev, d.step[1],
                          std::span<const T>(dh1), std::span<const T>(dc_rec[1]),
                          g.decoder[1], std::span<T>(d_l1_in),
                          std::span<T>(dh_new[1]), std::span<T>(dc_new[1]));
    if (!d.drop_mask.empty())
      for (int j = 0; j < h; ++j) d_l1_in[j] *= d.drop_mask[j];
    for (int j = 0; j < h; ++j) d_l1_in[j] += dh_rec[0][j];
    const std::span<const T> h0_prev =
        (t > 0) ? std::span<const T>(c.dec[t - 1].step[0].h)
                : std::span<const T>(zeros);
    const std::span<const T> c0_prev =
        (t > 0) ? std::span<const T>(c.dec[t - 1].step[0].c)
                : std::span<const T>(zeros);
    std::vector<T> dx(p.embed, T(0));
    std::span<const T> x(p.tgt_embedding.row(d.input_token),
                         static_cast<std::size_t>(p.embed));
    lstm_cell_backward<T>(p.decoder[0], x, h0_prev, c0_prev, d.step[0],
                          std::span<const T>(d_l1_in),
                          std::span<const T>(dc_rec[0]), g.decoder[0],
                          std::span<T>(dx), std::span<T>(dh_new[0]),
                          std::span<T>(dc_new[0]));
    T* emb_row = g.tgt_embedding.row(d.input_token);
    for (int j = 0; j < p.embed; ++j) emb_row[j] += dx[j];
    dh_rec = std::move(dh_new);
    dc_rec = std::move(dc_new);
  }

  // encoder BPTT
  std::array<std::vector<T>, 2> eh_rec{std::vector<T>(h, T(0)),
                                       std::vector<T>(h, T(0))};
  std::array<std::vector<T>, 2> ec_rec{std::vector<T>(h, T(0)),
                                       std::vector<T>(h, T(0))};
  for (int t = n_src - 1; t >= 0; --t) {
    std::vector<T> dh1(denc_top[t]);
    for (int j = 0; j < h; ++j) dh1[j] += eh_rec[1][j];
    const std::span<const T> h1_prev =
        (t > 0) ? std::span<const T>(c.enc_steps[1][t - 1].h)
                : std::span<const T>(zeros);
    const std::span<const T> c1_prev =
        (t > 0) ? std::span<const T>(c.enc_steps[1][t - 1].c)
                : std::span<const T>(zeros);
    std::vector<T> d_l1_in(h, T(0));
    std::array<std::vector<T>, 2> dh_new{std::vector<T>(h, T(0)),
                                         std::vector<T>(h, T(0))};
    std::array<std::vector<T>, 2> dc_new{std::vector<T>(h, T(0)),
                                         std::vector<T>(h, T(0))};
    lstm_cell_backward<T>(p.encoder[1], std::span<const T>(c.enc_l1_input[t]),
                          h1_prev, c1_prev, c.enc_steps[1][t],
                          std::span<const T>(dh1), std::span<const T>(ec_rec[1]),
                          g.encoder[1], std::span<T>(d_l1_in),
                          std::span<T>(dh_new[1]), std::span<T>(dc_new[1]));
    if (!c.enc_drop_mask[t].empty())
      for (int j = 0; j < h; ++j) d_l1_in[j] *= c.enc_drop_mask[t][j];
    for (int j = 0; j < h; ++j) d_l1_in[j] += eh_rec[0][j];
    const std::span<const T> h0_prev =
        (t > 0) ? std::span<const T>(c.enc_steps[0][t - 1].h)
                : std::span<const T>(zeros);
    const std::span<const T> c0_prev =
        (t > 0) ? std::span<const T>(c.enc_steps[0][t - 1].c)
                : std::span<const T>(zeros);
    std::vector<T> dx(p.embed, T(0));
    std::span<const T> x(p.src_embedding.row(c.src[t]),
                         static_cast<std::size_t>(p.embed));
    lstm_cell_backward<T>(p.encoder[0], x, h0_prev, c0_prev, c.enc_steps[0][t],
                          std::span<const T>(d_l1_in),
                          std::span<const T>(ec_rec[0]), g.encoder[0],
                          std::span<T>(dx), std::span<T>(dh_new[0]),
                          std::span<T>(dc_new[0]));
    T* emb_row = g.src_embedding.row(c.src[t]);
    for (int j = 0; j < p.embed; ++j) emb_row[j] += dx[j];
    eh_rec = std::move(dh_new);
    ec_rec = std::move(dc_new);
  }
}

}  // namespace simstream
