#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simstream/agents.hpp"
#include "simstream/model.hpp"

namespace simstream {

// Continuation beyond the committed prefix as agents see it: words only
// (never </s>), with the probability of each word.
struct Continuation {
  std::vector<int> tokens;
  std::vector<float> probs;
};

// One beam-search hypothesis rooted at the last commit point. `tokens` may
// end with </s> when the hypothesis finished; the cumulative score is the
// exact sum of the stored per-token log-probabilities.
struct Hypothesis {
  std::vector<int> tokens;
  std::vector<float> logps;
  std::vector<DecState<float>> states;  // one per token
  bool finished = false;

  double total_logp() const {
    double s = 0;
    for (const float v : logps) s += v;
    return s;
  }
  int word_count() const {
    int n = static_cast<int>(tokens.size());
    if (n > 0 && tokens[n - 1] == kEosId) --n;
    return n;
  }
  // Sum of the first w word log-probabilities.
  double prefix_logp(int w) const {
    double s = 0;
    for (int i = 0; i < w; ++i) s += logps[i];
    return s;
  }
};

// Up to n_w tokens of t immediately after the prefix t_c; fewer when t is
// short. </s> is never returned. Throws std::logic_error when t_c is not a
// prefix of t.
std::vector<int> get_new_tokens(std::span<const int> t_c,
                                std::span<const int> t, int n_w);

// Standard beam search from `start` over the currently stored encoder
// states. Hypotheses are returned best-first; with length_norm the final
// ranking divides by word count.
std::vector<Hypothesis> beam_continue(const Seq2SeqParams<float>& params,
                                      const DecState<float>& start,
                                      const EncState<float>& enc, int beam,
                                      int max_len, bool length_norm = false);

// Re-rank at the commit position: index of the hypothesis with the best
// cumulative log-probability at word n_w, among those with at least n_w
// words. Ties keep the earlier (better-ranked) hypothesis.
int select_commit_hypothesis(std::span<const Hypothesis> hyps, int n_w);

// ---------------------------------------------------------------------------
// Session machinery
// ---------------------------------------------------------------------------

// The decoding side of a session: consumes source tokens, regenerates the
// continuation beyond the commit point, and advances the saved state when
// words are committed.
class StreamBackend {
 public:
  virtual ~StreamBackend() = default;
  // READ: consume one source token and regenerate the continuation.
  virtual const Continuation& read(int token_id) = 0;
  virtual const Continuation& continuation() const = 0;
  // WRITE: commit n words (n is pre-clamped to the continuation length);
  // returns the committed tokens and leaves the continuation trimmed.
  virtual std::vector<int> commit(int n) = 0;
};

// Backend over a trained model: greedy regeneration from the saved decoder
// state, or beam search with commit-point re-ranking when beam > 1.
class ModelBackend : public StreamBackend {
 public:
  // force_beam_path routes beam == 1 through the beam machinery instead of
  // the greedy path (the two must behave identically).
  ModelBackend(const Seq2SeqParams<float>& params, int beam,
               bool length_norm = false, bool force_beam_path = false);
  const Continuation& read(int token_id) override;
  const Continuation& continuation() const override { return view_; }
  std::vector<int> commit(int n) override;
  const EncState<float>& enc() const { return enc_; }
  const DecState<float>& saved_state() const { return saved_; }

 private:
  void regenerate();
  bool beam_mode() const { return beam_ > 1 || force_beam_; }

  const Seq2SeqParams<float>* params_;
  int beam_;
  bool length_norm_;
  bool force_beam_;
  EncState<float> enc_;
  DecState<float> saved_;
  GreedyContinuation<float> greedy_;
  std::vector<Hypothesis> hyps_;
  Continuation view_;
};

// Session state: the committed prefix is append-only, the trace records the
// source consumption of every committed word, and the current sequence is
// always committed + continuation.
class StreamSession {
 public:
  explicit StreamSession(StreamBackend& backend) : backend_(backend) {}

  void read(int token_id);
  // Commits up to n_w words; returns the tokens committed by this event.
  std::vector<int> write(int n_w);
  void finish() { finished_ = true; }

  const std::vector<int>& committed() const { return committed_; }
  const std::vector<int>& trace() const { return trace_; }
  std::vector<int> current() const;
  const Continuation& continuation() const { return cont_; }
  const Continuation& prev_continuation() const { return prev_; }
  bool has_prev() const { return has_prev_; }
  std::size_t src_consumed() const { return src_consumed_; }
  bool finished() const { return finished_; }
  AgentContext context(bool source_finished) const;

 private:
  StreamBackend& backend_;
  std::vector<int> committed_;
  std::vector<int> trace_;
  Continuation cont_;
  Continuation prev_;
  bool has_prev_ = false;
  std::size_t src_consumed_ = 0;
  bool finished_ = false;
};

struct StreamResult {
  std::vector<int> tokens;  // final translation, no </s>
  std::vector<int> trace;   // source consumption per committed word
};

struct TraceEvent {
  enum class Kind { kRead, kWrite };
  Kind kind = Kind::kRead;
  std::size_t src_consumed = 0;
  std::size_t committed_total = 0;
  std::vector<int> tokens;  // committed this event (WRITE only)
};

using TraceSink = std::function<void(const TraceEvent&)>;

// The READ/WRITE loop: one READ per source token, the agent decides n_w
// mid-stream, and the final READ unconditionally commits every remaining
// word of the current sequence.
StreamResult run_stream(StreamBackend& backend, Agent& agent,
                        std::span<const int> source,
                        const TraceSink& sink = {});
StreamResult run_stream(const Seq2SeqParams<float>& params, Agent& agent,
                        std::span<const int> source, int beam = 1,
                        const TraceSink& sink = {});

// Offline decoding of the whole source (greedy, or beam search when
// beam > 1).
std::vector<int> offline_decode(const Seq2SeqParams<float>& params,
                                std::span<const int> source, int beam = 1);

// Translates consecutive chunk_len-token chunks independently, each with a
// fresh zero decoder state and an encoder that sees only that chunk. Trace
// entries record the source tokens consumed through the owning chunk.
StreamResult chunk_decode(const Seq2SeqParams<float>& params,
                          std::span<const int> source, int chunk_len,
                          int beam = 1);

// One trace-log line per event, tab-separated:
// event, source-consumed, committed-count, committed tokens this event.
std::string format_trace_event(const TraceEvent& ev, const Vocabulary& vocab);

}  // namespace simstream
