#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simstream/agents.hpp"
#include "simstream/model.hpp"
#include "simstream/vocab.hpp"

namespace simstream {

// Sum of per-word source-consumption counts normalized by |X|*|Y|. Lies in
// (0, 1]; equals 1 exactly when every word waited for the whole source.
// Throws std::invalid_argument on an empty trace (AP is undefined there).
double average_proportion(std::span<const int> trace, int src_len);

struct BleuResult {
  double score = 0;  // [0, 1]
  std::array<double, 4> precisions{};     // pooled modified n-gram precisions
  std::array<long long, 4> matches{};     // clipped matches per order
  std::array<long long, 4> totals{};      // candidate n-gram counts per order
  long long cand_len = 0;
  long long ref_len = 0;
  double brevity_penalty = 1.0;
};

// Corpus-level case-sensitive BLEU-4 on pre-tokenized text: geometric mean
// of pooled modified precisions times the brevity penalty; 0 when any pooled
// precision is 0. No smoothing.
BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::string>>& references);

// Per-sentence diagnostic only: add-one smoothing on orders >= 2, which is
// NOT the corpus definition above.
double sentence_bleu_smoothed(const std::vector<std::string>& candidate,
                              const std::vector<std::string>& reference);

struct SentenceEval {
  double bleu_smoothed = 0;
  std::optional<double> ap;  // empty when the translation was empty
};

struct EvalResult {
  std::string agent;
  double bleu = 0;     // corpus BLEU in [0, 1]
  double mean_ap = 0;  // arithmetic mean over sentences with defined AP
  std::vector<SentenceEval> per_sentence;
  int n_sentences = 0;
  int excluded_empty = 0;  // sentences excluded from the AP mean
};

// Streams every source sentence through the given agent (or the chunk
// decoder for chunk:N) and aggregates corpus BLEU plus mean AP.
EvalResult evaluate_agent(const Seq2SeqParams<float>& params,
                          const AgentSpec& spec,
                          const std::vector<std::vector<int>>& src_ids,
                          const std::vector<std::vector<std::string>>& refs,
                          const Vocabulary& tgt_vocab, int beam = 1);

std::string eval_result_json(const EvalResult& r);

}  // namespace simstream
