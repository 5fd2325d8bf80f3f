#include "simstream/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "simstream/stream.hpp"

namespace simstream {

double average_proportion(std::span<const int> trace, int src_len) {
  if (trace.empty())
    throw std::invalid_argument(
        "average_proportion: undefined for an empty trace");
  if (src_len < 1)
    throw std::invalid_argument("average_proportion: source length must be "
                                ">= 1");
  long long sum = 0;
  for (const int s : trace) {
    if (s < 1 || s > src_len)
      throw std::invalid_argument(
          "average_proportion: trace entry outside [1, |X|]");
    sum += s;
  }
  return static_cast<double>(sum) /
         (static_cast<double>(src_len) * static_cast<double>(trace.size()));
}

namespace {

// n-grams as separator-joined keys; pooled counting across the corpus.
void count_ngrams(const std::vector<std::string>& tokens, int order,
                  std::unordered_map<std::string, long long>& out) {
  const int n = static_cast<int>(tokens.size());
  for (int i = 0; i + order <= n; ++i) {
    std::string key;
    for (int k = 0; k < order; ++k) {
      if (k) key += '\x1f';
      key += tokens[i + k];
    }
    ++out[key];
  }
}

}  // namespace

BleuResult corpus_bleu(
    const std::vector<std::vector<std::string>>& candidates,
    const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size())
    throw std::invalid_argument("corpus_bleu: candidate/reference length "
                                "mismatch");
  if (references.empty())
    throw std::invalid_argument("corpus_bleu: empty reference corpus");

  BleuResult r;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto& ref = references[i];
    r.cand_len += static_cast<long long>(cand.size());
    r.ref_len += static_cast<long long>(ref.size());
    for (int order = 1; order <= 4; ++order) {
      const long long total =
          std::max<long long>(0, static_cast<long long>(cand.size()) - order + 1);
      if (total == 0) continue;
      std::unordered_map<std::string, long long> cand_counts, ref_counts;
      count_ngrams(cand, order, cand_counts);
      count_ngrams(ref, order, ref_counts);
      long long matched = 0;
      for (const auto& [key, count] : cand_counts) {
        const auto it = ref_counts.find(key);
        if (it != ref_counts.end()) matched += std::min(count, it->second);
      }
      r.matches[order - 1] += matched;
      r.totals[order - 1] += total;
    }
  }

  double log_prec_sum = 0;
  bool any_zero = false;
  for (int order = 0; order < 4; ++order) {
    r.precisions[order] =
        r.totals[order] > 0 ? static_cast<double>(r.matches[order]) /
                                  static_cast<double>(r.totals[order])
                            : 0.0;
    if (r.matches[order] == 0)
      any_zero = true;
    else
      log_prec_sum += std::log(r.precisions[order]);
  }
  r.brevity_penalty =
      (r.cand_len > 0 && r.cand_len < r.ref_len)
          ? std::exp(1.0 - static_cast<double>(r.ref_len) /
                               static_cast<double>(r.cand_len))
          : 1.0;
  if (any_zero || r.cand_len == 0) {
    r.score = 0.0;
    return r;
  }
  r.score = r.brevity_penalty * std::exp(log_prec_sum / 4.0);
  return r;
}

double sentence_bleu_smoothed(const std::vector<std::string>& candidate,
                              const std::vector<std::string>& reference) {
  if (candidate.empty()) return 0.0;
  double log_prec_sum = 0;
  for (int order = 1; order <= 4; ++order) {
    const long long total = std::max<long long>(
        0, static_cast<long long>(candidate.size()) - order + 1);
    std::unordered_map<std::string, long long> cand_counts, ref_counts;
    count_ngrams(candidate, order, cand_counts);
    count_ngrams(reference, order, ref_counts);
    long long matched = 0;
    for (const auto& [key, count] : cand_counts) {
      const auto it = ref_counts.find(key);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (order == 1) {
      if (matched == 0 || total == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = (static_cast<double>(matched) + 1.0) /
          (static_cast<double>(total) + 1.0);
    }
    log_prec_sum += std::log(p);
  }
  const long long c = static_cast<long long>(candidate.size());
  const long long rl = static_cast<long long>(reference.size());
  const double bp =
      c < rl ? std::exp(1.0 - static_cast<double>(rl) / static_cast<double>(c))
             : 1.0;
  return bp * std::exp(log_prec_sum / 4.0);
}

EvalResult evaluate_agent(const Seq2SeqParams<float>& params,
                          const AgentSpec& spec,
                          const std::vector<std::vector<int>>& src_ids,
                          const std::vector<std::vector<std::string>>& refs,
                          const Vocabulary& tgt_vocab, int beam) {
  if (src_ids.size() != refs.size())
    throw std::invalid_argument("evaluate: source/reference length mismatch");
  EvalResult result;
  result.agent = spec.to_string();
  if (beam > 1) result.agent += " beam=" + std::to_string(beam);
  result.n_sentences = static_cast<int>(src_ids.size());

  std::unique_ptr<Agent> agent;
  if (!spec.is_chunk()) agent = make_agent(spec);

  std::vector<std::vector<std::string>> outputs;
  outputs.reserve(src_ids.size());
  double ap_sum = 0;
  int ap_count = 0;
  for (std::size_t i = 0; i < src_ids.size(); ++i) {
    StreamResult sr;
    if (src_ids[i].empty()) {
      sr = StreamResult{};
    } else if (spec.is_chunk()) {
      sr = chunk_decode(params, src_ids[i], spec.chunk_n, beam);
    } else {
      sr = run_stream(params, *agent, src_ids[i], beam);
    }
    SentenceEval se;
    if (!sr.trace.empty()) {
      se.ap = average_proportion(sr.trace,
                                 static_cast<int>(src_ids[i].size()));
      ap_sum += *se.ap;
      ++ap_count;
    } else {
      ++result.excluded_empty;
    }
    std::vector<std::string> words = tgt_vocab.to_tokens(sr.tokens);
    se.bleu_smoothed = sentence_bleu_smoothed(words, refs[i]);
    result.per_sentence.push_back(se);
    outputs.push_back(std::move(words));
  }
  result.bleu = corpus_bleu(outputs, refs).score;
  result.mean_ap = ap_count > 0 ? ap_sum / ap_count
                                : std::numeric_limits<double>::quiet_NaN();
  return result;
}

std::string eval_result_json(const EvalResult& r) {
  nlohmann::json j;
  j["agent"] = r.agent;
  j["bleu"] = r.bleu;
  j["ap"] = r.mean_ap;
  j["n_sentences"] = r.n_sentences;
  j["excluded_empty"] = r.excluded_empty;
  return j.dump(2);
}

}  // namespace simstream
