#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "simstream/model.hpp"
#include "simstream/vocab.hpp"

namespace simstream {

// Everything an agent may look at when deciding how many words to commit
// after a READ. Continuations are relative to the committed prefix; the
// previous continuation is positionally aligned with the current one.
struct AgentContext {
  std::size_t committed_len = 0;
  std::span<const int> cur_tokens;
  std::span<const float> cur_probs;
  std::span<const int> prev_tokens;
  std::span<const float> prev_probs;
  bool has_prev = false;
  std::size_t src_consumed = 0;
  bool source_finished = false;
};

// Commit nothing until the whole source has been read.
int decide_wue(const AgentContext& ctx);

// Commit while the probability at each position did not decrease since the
// previous READ.
int decide_wiw(const AgentContext& ctx);

// Commit while the token at each position is unchanged since the previous
// READ.
int decide_wid(const AgentContext& ctx);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual int decide(const AgentContext& ctx) = 0;
  virtual void reset() {}
  virtual std::string name() const = 0;
};

// S startup READs, then one WRITE of RW words after every further group of
// RW READs, starting with the S-th READ itself. Depends only on the READ
// counter, never on token content.
class StaticRwAgent : public Agent {
 public:
  StaticRwAgent(int s, int rw) : s_(s), rw_(rw) {
    if (s < 1 || rw < 1)
      throw std::invalid_argument("static-rw: S and RW must be >= 1");
  }
  int decide(const AgentContext&) override {
    ++reads_;
    if (in_startup_) {
      if (reads_ < s_) return 0;
      in_startup_ = false;
      reads_since_phase_ = 0;
      return rw_;
    }
    if (++reads_since_phase_ == rw_) {
      reads_since_phase_ = 0;
      return rw_;
    }
    return 0;
  }
  void reset() override {
    reads_ = 0;
    reads_since_phase_ = 0;
    in_startup_ = true;
  }
  std::string name() const override {
    return "static:" + std::to_string(s_) + "," + std::to_string(rw_);
  }

 private:
  int s_;
  int rw_;
  int reads_ = 0;
  int reads_since_phase_ = 0;
  bool in_startup_ = true;
};

// Parsed --agent string: wue | wiw | wid | static:S,RW | chunk:N.
struct AgentSpec {
  enum class Kind { kWue, kWiw, kWid, kStaticRw, kChunk };
  Kind kind = Kind::kWue;
  int s = 0;
  int rw = 0;
  int chunk_n = 0;

  static AgentSpec parse(const std::string& text);
  std::string to_string() const;
  bool is_chunk() const { return kind == Kind::kChunk; }
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec);

// ---------------------------------------------------------------------------
// STATIC-RW grid tuning under a latency budget
// ---------------------------------------------------------------------------

struct GridPoint {
  int s = 0;
  int rw = 0;
  double bleu = 0;  // [0, 1]
  double ap = 0;
};

class NoFeasibleAgentError : public std::runtime_error {
 public:
  explicit NoFeasibleAgentError(std::vector<GridPoint> grid)
      : std::runtime_error("no (S, RW) pair satisfies the AP budget"),
        grid_(std::move(grid)) {}
  const std::vector<GridPoint>& grid() const { return grid_; }

 private:
  std::vector<GridPoint> grid_;
};

struct TuneResult {
  int best_s = 0;
  int best_rw = 0;
  std::vector<GridPoint> grid;  // in (S, RW) scan order
};

// Highest BLEU subject to ap <= ap_max; ties break by lower AP, then smaller
// S, then smaller RW. Empty when nothing is feasible.
std::optional<GridPoint> pick_best_grid_point(std::span<const GridPoint> grid,
                                              double ap_max);

// Evaluates every (S, RW) pair on the dev set with run_stream and returns the
// winner plus the full grid. Throws NoFeasibleAgentError (carrying the grid)
// when no pair meets the budget. jobs > 1 evaluates grid points in parallel;
// results are deterministic either way.
TuneResult tune_static_rw(const Seq2SeqParams<float>& params,
                          const std::vector<std::vector<int>>& dev_src,
                          const std::vector<std::vector<std::string>>& dev_ref,
                          const Vocabulary& tgt_vocab,
                          const std::vector<int>& s_range,
                          const std::vector<int>& rw_range, double ap_max,
                          int beam = 1, int jobs = 1);

// Tab-separated "S RW BLEU AP" rows sorted by (AP, -BLEU), and the same grid
// as a JSON array string.
std::string grid_report_tsv(std::span<const GridPoint> grid);
std::string grid_report_json(std::span<const GridPoint> grid);

}  // namespace simstream
