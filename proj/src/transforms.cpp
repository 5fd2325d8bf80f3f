#include "simstream/transforms.hpp"

#include <algorithm>
#include <charconv>

#include "simstream/rng.hpp"
#include "simstream/textio.hpp"

namespace simstream {

Alignment parse_pharaoh(std::string_view line) {
  Alignment out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::size_t end = i;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    const std::string_view pair = line.substr(start, end - start);
    const std::size_t dash = pair.find('-');
    if (dash == std::string_view::npos || dash == 0 ||
        dash + 1 == pair.size())
      throw AlignParseError("alignment: expected i-j pair", start + 1);
    AlignPoint p;
    auto r1 = std::from_chars(pair.data(), pair.data() + dash, p.src);
    auto r2 = std::from_chars(pair.data() + dash + 1,
                              pair.data() + pair.size(), p.tgt);
    if (r1.ec != std::errc{} || r1.ptr != pair.data() + dash ||
        r2.ec != std::errc{} || r2.ptr != pair.data() + pair.size() ||
        p.src < 0 || p.tgt < 0)
      throw AlignParseError("alignment: malformed indices", start + 1);
    out.push_back(p);
    i = end;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Alignment> read_alignment_file(const std::string& path) {
  std::vector<Alignment> out;
  for (const auto& line : read_lines(path)) out.push_back(parse_pharaoh(line));
  return out;
}

std::string format_pharaoh(const Alignment& a) {
  std::string out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(a[i].src);
    out += '-';
    out += std::to_string(a[i].tgt);
  }
  return out;
}

namespace {

void check_bounds(const Alignment& alignment, std::size_t src_len,
                  std::size_t tgt_len, std::size_t line) {
  for (const AlignPoint& p : alignment)
    if (p.src >= static_cast<int>(src_len) ||
        p.tgt >= static_cast<int>(tgt_len))
      throw CorpusDataError("alignment index out of bounds", line);
}

}  // namespace

std::vector<ChunkPair> chunk_sentence(const std::vector<std::string>& src,
                                      const std::vector<std::string>& tgt,
                                      const Alignment& alignment, int n) {
  if (n < 1) throw std::invalid_argument("chunk: N must be >= 1");
  std::vector<ChunkPair> out;
  const int src_len = static_cast<int>(src.size());
  const int tgt_len = static_cast<int>(tgt.size());
  const int n_chunks = (src_len + n - 1) / n;
  int span_start = 0;
  for (int c = 0; c < n_chunks; ++c) {
    const int lo = c * n;
    const int hi = std::min(src_len, lo + n);
    int max_tgt = -1;
    for (const AlignPoint& p : alignment)
      if (p.src >= lo && p.src < hi) max_tgt = std::max(max_tgt, p.tgt);
    int span_end = std::max(span_start, max_tgt + 1);
    if (c == n_chunks - 1) span_end = tgt_len;  // last chunk takes the rest
    if (span_end > span_start) {
      ChunkPair pair;
      pair.src.assign(src.begin() + lo, src.begin() + hi);
      pair.tgt.assign(tgt.begin() + span_start, tgt.begin() + span_end);
      out.push_back(std::move(pair));
      span_start = span_end;
    }
  }
  return out;
}

std::vector<ChunkPair> chunk_corpus(
    const std::vector<std::vector<std::string>>& src,
    const std::vector<std::vector<std::string>>& tgt,
    const std::vector<Alignment>& alignments, int n) {
  if (src.size() != tgt.size() || src.size() != alignments.size())
    throw std::invalid_argument("chunk: corpora and alignments must be "
                                "parallel");
  std::vector<ChunkPair> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    check_bounds(alignments[i], src[i].size(), tgt[i].size(), i);
    auto pairs = chunk_sentence(src[i], tgt[i], alignments[i], n);
    out.insert(out.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return out;
}

std::vector<PrefixPair> addm_sentence(const std::vector<std::string>& src,
                                      const std::vector<std::string>& tgt,
                                      const Alignment& alignment, int n, int m,
                                      int sentence_id) {
  if (n < 1 || m < 1)
    throw std::invalid_argument("addm: N and M must be >= 1");
  const int src_len = static_cast<int>(src.size());
  const int tgt_len = static_cast<int>(tgt.size());

  // per target word: max alignment point, or -1 when unaligned
  std::vector<int> max_point(tgt_len, -1);
  for (const AlignPoint& p : alignment)
    max_point[p.tgt] = std::max(max_point[p.tgt], p.src);

  std::vector<int> lengths;
  for (int l = n; l < src_len; l += m) lengths.push_back(l);
  lengths.push_back(src_len);  // always include the full sentence

  std::vector<PrefixPair> out;
  for (const int l : lengths) {
    // longest target prefix whose aligned words lie fully inside [0, l);
    // unaligned words only enter when a later aligned word does
    int prefix = 0;
    for (int j = 0; j < tgt_len; ++j) {
      if (max_point[j] < 0) continue;  // unaligned: tentative
      if (max_point[j] >= l) break;
      prefix = j + 1;
    }
    if (prefix == 0) continue;
    PrefixPair pair;
    pair.src.assign(src.begin(), src.begin() + l);
    pair.tgt.assign(tgt.begin(), tgt.begin() + prefix);
    pair.sentence_id = sentence_id;
    pair.prefix_len = l;
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<PrefixPair> addm_corpus(
    const std::vector<std::vector<std::string>>& src,
    const std::vector<std::vector<std::string>>& tgt,
    const std::vector<Alignment>& alignments, int n, int m) {
  if (src.size() != tgt.size() || src.size() != alignments.size())
    throw std::invalid_argument("addm: corpora and alignments must be "
                                "parallel");
  std::vector<PrefixPair> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    check_bounds(alignments[i], src[i].size(), tgt[i].size(), i);
    auto pairs = addm_sentence(src[i], tgt[i], alignments[i], n, m,
                               static_cast<int>(i));
    out.insert(out.end(), std::make_move_iterator(pairs.begin()),
               std::make_move_iterator(pairs.end()));
  }
  return out;
}

SynthTask parse_synth_task(const std::string& name) {
  if (name == "copy") return SynthTask::kCopy;
  if (name == "reverse") return SynthTask::kReverse;
  if (name == "shift") return SynthTask::kShift;
  throw std::invalid_argument("synth: unknown task '" + name +
                              "'; valid tasks: copy | reverse | shift");
}

std::string synth_task_name(SynthTask task) {
  switch (task) {
    case SynthTask::kCopy:
      return "copy";
    case SynthTask::kReverse:
      return "reverse";
    case SynthTask::kShift:
      return "shift";
  }
  return "?";
}

SynthCorpus gen_synthetic(SynthTask task, int n_sentences, int vocab_size,
                          int len_min, int len_max, std::uint64_t seed) {
  if (n_sentences < 1)
    throw std::invalid_argument("synth: need at least one sentence");
  if (vocab_size < 5)
    throw std::invalid_argument("synth: vocab_size must be >= 5");
  if (len_min < 1 || len_min > len_max)
    throw std::invalid_argument("synth: bad length range");

  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (int i = 0; i < vocab_size; ++i)
    words.push_back("w" + std::to_string(i));

  Rng rng(seed);
  SynthCorpus out;
  for (int s = 0; s < n_sentences; ++s) {
    const int len =
        len_min + static_cast<int>(rng.below(
                      static_cast<std::uint64_t>(len_max - len_min + 1)));
    std::vector<std::string> src;
    src.reserve(len);
    for (int i = 0; i < len; ++i)
      src.push_back(words[rng.below(static_cast<std::uint64_t>(vocab_size))]);
    std::vector<std::string> tgt(len);
    Alignment align;
    switch (task) {
      case SynthTask::kCopy:
        tgt = src;
        for (int i = 0; i < len; ++i) align.push_back({i, i});
        break;
      case SynthTask::kReverse:
        for (int i = 0; i < len; ++i) tgt[i] = src[len - 1 - i];
        for (int i = 0; i < len; ++i) align.push_back({i, len - 1 - i});
        break;
      case SynthTask::kShift:
        // rotate right: tgt[j] = src[(j - 1 + len) % len]
        for (int j = 0; j < len; ++j) tgt[j] = src[(j - 1 + len) % len];
        for (int i = 0; i < len; ++i) align.push_back({i, (i + 1) % len});
        break;
    }
    std::sort(align.begin(), align.end());
    out.src.push_back(std::move(src));
    out.tgt.push_back(std::move(tgt));
    out.alignments.push_back(std::move(align));
  }
  return out;
}

}  // namespace simstream
