#include "simstream/stream.hpp"

#include <algorithm>
#include <stdexcept>

namespace simstream {

std::vector<int> get_new_tokens(std::span<const int> t_c,
                                std::span<const int> t, int n_w) {
  if (n_w < 0) throw std::invalid_argument("get_new_tokens: negative n_w");
  if (t_c.size() > t.size() ||
      !std::equal(t_c.begin(), t_c.end(), t.begin()))
    throw std::logic_error("get_new_tokens: committed sequence is not a "
                           "prefix of the current sequence");
  std::vector<int> out;
  const std::size_t start = t_c.size();
  const std::size_t end = std::min(t.size(), start + static_cast<std::size_t>(n_w));
  for (std::size_t i = start; i < end; ++i) {
    if (t[i] == kEosId) break;
    out.push_back(t[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Beam search
// ---------------------------------------------------------------------------

namespace {

double final_score(const Hypothesis& h, bool length_norm) {
  const double total = h.total_logp();
  if (!length_norm) return total;
  const int words = h.word_count();
  return words > 0 ? total / words : total;
}

}  // namespace

std::vector<Hypothesis> beam_continue(const Seq2SeqParams<float>& params,
                                      const DecState<float>& start,
                                      const EncState<float>& enc, int beam,
                                      int max_len, bool length_norm) {
  if (beam < 1) throw std::invalid_argument("beam_continue: beam must be >= 1");
  if (max_len < 1)
    throw std::invalid_argument("beam_continue: max_len must be >= 1");

  Hypothesis root;
  root.states.push_back(start);  // state before the first expansion
  std::vector<Hypothesis> frontier{std::move(root)};
  std::vector<Hypothesis> finished;

  struct Candidate {
    std::size_t parent;
    int token;
    float logp;
    double cum;
  };

  for (int step = 0; step < max_len && !frontier.empty(); ++step) {
    std::vector<Candidate> candidates;
    std::vector<DecodeStepOut<float>> outs(frontier.size());
    for (std::size_t p = 0; p < frontier.size(); ++p) {
      const Hypothesis& h = frontier[p];
      outs[p] = decode_step(params, h.states.back(), enc);
      const std::vector<float>& lp = outs[p].logprobs;
      // top-`beam` tokens of this expansion, first max wins ties
      std::vector<int> idx(lp.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      const std::size_t k = std::min<std::size_t>(beam, idx.size());
      std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                        [&](int a, int b) {
                          if (lp[a] != lp[b]) return lp[a] > lp[b];
                          return a < b;
                        });
      const double base = h.total_logp();
      for (std::size_t i = 0; i < k; ++i)
        candidates.push_back({p, idx[i], lp[idx[i]],
                              base + static_cast<double>(lp[idx[i]])});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.cum > b.cum;
                     });
    std::vector<Hypothesis> next;
    for (const Candidate& c :
         candidates) {
      if (static_cast<int>(next.size() + finished.size()) >= beam) break;
      Hypothesis h = frontier[c.parent];
      DecState<float> st;
      st.layers = outs[c.parent].layers;
      st.last_token = c.token;
      h.tokens.push_back(c.token);
      h.logps.push_back(c.logp);
      h.states.push_back(std::move(st));
      if (c.token == kEosId) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    frontier = std::move(next);
  }
  // length-capped leftovers still count as hypotheses
  for (auto& h : frontier) finished.push_back(std::move(h));

  // drop the pre-expansion state so states align one-per-token
  for (auto& h : finished) h.states.erase(h.states.begin());
  std::stable_sort(finished.begin(), finished.end(),
                   [&](const Hypothesis& a, const Hypothesis& b) {
                     return final_score(a, length_norm) >
                            final_score(b, length_norm);
                   });
  return finished;
}

int select_commit_hypothesis(std::span<const Hypothesis> hyps, int n_w) {
  int best = -1;
  double best_score = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (hyps[i].word_count() < n_w) continue;
    const double s = hyps[i].prefix_logp(n_w);
    if (best < 0 || s > best_score) {
      best = static_cast<int>(i);
      best_score = s;
    }
  }
  if (best < 0)
    throw std::logic_error(
        "select_commit_hypothesis: no hypothesis long enough");
  return best;
}

// ---------------------------------------------------------------------------
// ModelBackend
// ---------------------------------------------------------------------------

ModelBackend::ModelBackend(const Seq2SeqParams<float>& params, int beam,
                           bool length_norm, bool force_beam_path)
    : params_(&params),
      beam_(beam),
      length_norm_(length_norm),
      force_beam_(force_beam_path),
      enc_(EncState<float>::initial(params.hidden)),
      saved_(DecState<float>::initial(params.hidden)) {
  if (beam < 1) throw std::invalid_argument("stream: beam must be >= 1");
}

void ModelBackend::regenerate() {
  const int max_len = decode_length_cap(enc_.consumed);
  view_ = Continuation{};
  if (!beam_mode()) {
    greedy_ = greedy_continue(*params_, saved_, enc_, max_len);
    view_.tokens = greedy_.tokens;
    view_.probs = greedy_.probs;
    return;
  }
  hyps_ = beam_continue(*params_, saved_, enc_, beam_, max_len, length_norm_);
  const Hypothesis& best = hyps_.front();
  const int words = best.word_count();
  view_.tokens.assign(best.tokens.begin(), best.tokens.begin() + words);
  view_.probs.resize(words);
  for (int i = 0; i < words; ++i)
    view_.probs[i] =
        static_cast<float>(std::exp(static_cast<double>(best.logps[i])));
}

const Continuation& ModelBackend::read(int token_id) {
  encode_extend(*params_, enc_, token_id);
  regenerate();
  return view_;
}

std::vector<int> ModelBackend::commit(int n) {
  if (n <= 0) return {};
  if (!beam_mode()) {
    std::vector<int> out(greedy_.tokens.begin(), greedy_.tokens.begin() + n);
    saved_ = greedy_.states[n - 1];
    greedy_.tokens.erase(greedy_.tokens.begin(), greedy_.tokens.begin() + n);
    greedy_.probs.erase(greedy_.probs.begin(), greedy_.probs.begin() + n);
    greedy_.states.erase(greedy_.states.begin(), greedy_.states.begin() + n);
    view_.tokens = greedy_.tokens;
    view_.probs = greedy_.probs;
    return out;
  }
  // Re-rank at the commit position, keep that hypothesis alone; future
  // search continues from its state after the committed words. A commit of
  // the whole current continuation keeps the overall best hypothesis, so
  // committing everything reproduces offline beam decoding.
  const int sel = (n >= hyps_.front().word_count())
                      ? 0
                      : select_commit_hypothesis(hyps_, n);
  Hypothesis h = std::move(hyps_[sel]);
  std::vector<int> out(h.tokens.begin(), h.tokens.begin() + n);
  saved_ = h.states[n - 1];
  h.tokens.erase(h.tokens.begin(), h.tokens.begin() + n);
  h.logps.erase(h.logps.begin(), h.logps.begin() + n);
  h.states.erase(h.states.begin(), h.states.begin() + n);
  hyps_.clear();
  hyps_.push_back(std::move(h));
  const Hypothesis& rest = hyps_.front();
  const int words = rest.word_count();
  view_.tokens.assign(rest.tokens.begin(), rest.tokens.begin() + words);
  view_.probs.resize(words);
  for (int i = 0; i < words; ++i)
    view_.probs[i] =
        static_cast<float>(std::exp(static_cast<double>(rest.logps[i])));
  return out;
}

// ---------------------------------------------------------------------------
// StreamSession
// ---------------------------------------------------------------------------

void StreamSession::read(int token_id) {
  if (finished_)
    throw std::logic_error("stream session: read after finish");
  prev_ = cont_;
  has_prev_ = src_consumed_ > 0;
  ++src_consumed_;
  cont_ = backend_.read(token_id);
}

std::vector<int> StreamSession::write(int n_w) {
  if (finished_)
    throw std::logic_error("stream session: write after finish");
  const int n = std::clamp(n_w, 0, static_cast<int>(cont_.tokens.size()));
  std::vector<int> toks = backend_.commit(n);
  for (std::size_t i = 0; i < toks.size(); ++i)
    trace_.push_back(static_cast<int>(src_consumed_));
  committed_.insert(committed_.end(), toks.begin(), toks.end());
  cont_ = backend_.continuation();
  return toks;
}

std::vector<int> StreamSession::current() const {
  std::vector<int> t = committed_;
  t.insert(t.end(), cont_.tokens.begin(), cont_.tokens.end());
  return t;
}

AgentContext StreamSession::context(bool source_finished) const {
  AgentContext ctx;
  ctx.committed_len = committed_.size();
  ctx.cur_tokens = cont_.tokens;
  ctx.cur_probs = cont_.probs;
  ctx.prev_tokens = prev_.tokens;
  ctx.prev_probs = prev_.probs;
  ctx.has_prev = has_prev_;
  ctx.src_consumed = src_consumed_;
  ctx.source_finished = source_finished;
  return ctx;
}

// ---------------------------------------------------------------------------
// Driving loops
// ---------------------------------------------------------------------------

StreamResult run_stream(StreamBackend& backend, Agent& agent,
                        std::span<const int> source, const TraceSink& sink) {
  if (source.empty())
    throw std::invalid_argument("run_stream: empty source");
  StreamSession session(backend);
  agent.reset();
  const std::size_t n = source.size();
  for (std::size_t i = 0; i < n; ++i) {
    session.read(source[i]);
    if (sink)
      sink({TraceEvent::Kind::kRead, session.src_consumed(),
            session.committed().size(), {}});
    int n_w;
    if (i + 1 < n) {
      n_w = agent.decide(session.context(false));
    } else {
      // entire source seen: commit all new words
      n_w = static_cast<int>(session.continuation().tokens.size());
    }
    std::vector<int> toks = session.write(n_w);
    if (sink && !toks.empty())
      sink({TraceEvent::Kind::kWrite, session.src_consumed(),
            session.committed().size(), toks});
  }
  session.finish();
  return {session.committed(), session.trace()};
}

StreamResult run_stream(const Seq2SeqParams<float>& params, Agent& agent,
                        std::span<const int> source, int beam,
                        const TraceSink& sink) {
  ModelBackend backend(params, beam);
  return run_stream(backend, agent, source, sink);
}

std::vector<int> offline_decode(const Seq2SeqParams<float>& params,
                                std::span<const int> source, int beam) {
  if (source.empty()) return {};
  const EncState<float> enc = encode_sequence(params, source);
  const int max_len = decode_length_cap(enc.consumed);
  const DecState<float> start = DecState<float>::initial(params.hidden);
  if (beam <= 1) return greedy_continue(params, start, enc, max_len).tokens;
  const std::vector<Hypothesis> hyps =
      beam_continue(params, start, enc, beam, max_len);
  const Hypothesis& best = hyps.front();
  return std::vector<int>(best.tokens.begin(),
                          best.tokens.begin() + best.word_count());
}

StreamResult chunk_decode(const Seq2SeqParams<float>& params,
                          std::span<const int> source, int chunk_len,
                          int beam) {
  if (chunk_len < 1)
    throw std::invalid_argument("chunk_decode: chunk length must be >= 1");
  StreamResult result;
  std::size_t consumed = 0;
  for (std::size_t pos = 0; pos < source.size();
       pos += static_cast<std::size_t>(chunk_len)) {
    const std::size_t len =
        std::min<std::size_t>(chunk_len, source.size() - pos);
    consumed += len;
    const std::vector<int> words =
        offline_decode(params, source.subspan(pos, len), beam);
    for (const int w : words) {
      result.tokens.push_back(w);
      result.trace.push_back(static_cast<int>(consumed));
    }
  }
  return result;
}

std::string format_trace_event(const TraceEvent& ev, const Vocabulary& vocab) {
  std::string line =
      ev.kind == TraceEvent::Kind::kRead ? "READ" : "WRITE";
  line += '\t';
  line += std::to_string(ev.src_consumed);
  line += '\t';
  line += std::to_string(ev.committed_total);
  line += '\t';
  for (std::size_t i = 0; i < ev.tokens.size(); ++i) {
    if (i) line += ' ';
    line += vocab.to_token(ev.tokens[i]);
  }
  return line;
}

}  // namespace simstream
