#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace simstream {

struct AlignPoint {
  int src = 0;
  int tgt = 0;
  auto operator<=>(const AlignPoint&) const = default;
};

// Sorted, duplicate-free alignment point set for one sentence pair.
using Alignment = std::vector<AlignPoint>;

class AlignParseError : public std::runtime_error {
 public:
  AlignParseError(const std::string& msg, std::size_t column)
      : std::runtime_error(msg + " at column " + std::to_string(column)),
        column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class CorpusDataError : public std::runtime_error {
 public:
  CorpusDataError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " at line " + std::to_string(line + 1)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Whitespace-separated "i-j" pairs, 0-based; duplicates are dropped.
Alignment parse_pharaoh(std::string_view line);

std::vector<Alignment> read_alignment_file(const std::string& path);
std::string format_pharaoh(const Alignment& a);

struct ChunkPair {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

// Source cut into consecutive n-token chunks; each chunk's target span runs
// from the previous span's end to one past the highest target index aligned
// into the chunk. Empty spans are skipped; the final chunk's span extends to
// the sentence end.
std::vector<ChunkPair> chunk_sentence(const std::vector<std::string>& src,
                                      const std::vector<std::string>& tgt,
                                      const Alignment& alignment, int n);

std::vector<ChunkPair> chunk_corpus(
    const std::vector<std::vector<std::string>>& src,
    const std::vector<std::vector<std::string>>& tgt,
    const std::vector<Alignment>& alignments, int n);

struct PrefixPair {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  int sentence_id = 0;
  int prefix_len = 0;  // source prefix length L
};

// Growing source prefixes of length N, N+M, N+2M, ... plus the full length.
// The target prefix is the longest one whose aligned words have all their
// alignment points inside the source prefix; trailing unaligned words are
// held back until a later aligned word pulls them in. Pairs with an empty
// side are not emitted.
std::vector<PrefixPair> addm_sentence(const std::vector<std::string>& src,
                                      const std::vector<std::string>& tgt,
                                      const Alignment& alignment, int n, int m,
                                      int sentence_id = 0);

std::vector<PrefixPair> addm_corpus(
    const std::vector<std::vector<std::string>>& src,
    const std::vector<std::vector<std::string>>& tgt,
    const std::vector<Alignment>& alignments, int n, int m);

enum class SynthTask { kCopy, kReverse, kShift };

SynthTask parse_synth_task(const std::string& name);
std::string synth_task_name(SynthTask task);

struct SynthCorpus {
  std::vector<std::vector<std::string>> src;
  std::vector<std::vector<std::string>> tgt;
  std::vector<Alignment> alignments;
};

// Deterministic toy corpora: copy (target = source, diagonal alignment),
// reverse (target reversed, anti-diagonal), shift (target rotated right by
// one, wrap-around alignment).
SynthCorpus gen_synthetic(SynthTask task, int n_sentences, int vocab_size,
                          int len_min, int len_max, std::uint64_t seed);

}  // namespace simstream
