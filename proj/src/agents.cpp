#include "simstream/agents.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "simstream/metrics.hpp"
#include "simstream/stream.hpp"

namespace simstream {

int decide_wue(const AgentContext&) { return 0; }

int decide_wiw(const AgentContext& ctx) {
  if (!ctx.has_prev) return 0;
  const std::size_t limit =
      std::min(ctx.cur_probs.size(), ctx.prev_probs.size());
  std::size_t k = 0;
  while (k < limit && ctx.cur_probs[k] >= ctx.prev_probs[k]) ++k;
  return static_cast<int>(k);
}

int decide_wid(const AgentContext& ctx) {
  if (!ctx.has_prev) return 0;
  const std::size_t limit =
      std::min(ctx.cur_tokens.size(), ctx.prev_tokens.size());
  std::size_t k = 0;
  while (k < limit && ctx.cur_tokens[k] == ctx.prev_tokens[k]) ++k;
  return static_cast<int>(k);
}

namespace {

class WueAgent : public Agent {
 public:
  int decide(const AgentContext& ctx) override { return decide_wue(ctx); }
  std::string name() const override { return "wue"; }
};

class WiwAgent : public Agent {
 public:
  int decide(const AgentContext& ctx) override { return decide_wiw(ctx); }
  std::string name() const override { return "wiw"; }
};

class WidAgent : public Agent {
 public:
  int decide(const AgentContext& ctx) override { return decide_wid(ctx); }
  std::string name() const override { return "wid"; }
};

int parse_positive_int(std::string_view s, const std::string& what) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 1)
    throw std::invalid_argument("agent: bad " + what + " value '" +
                                std::string(s) + "'");
  return v;
}

constexpr const char* kAgentForms =
    "valid agents: wue | wiw | wid | static:S,RW | chunk:N";

}  // namespace

AgentSpec AgentSpec::parse(const std::string& text) {
  AgentSpec spec;
  if (text == "wue") {
    spec.kind = Kind::kWue;
  } else if (text == "wiw") {
    spec.kind = Kind::kWiw;
  } else if (text == "wid") {
    spec.kind = Kind::kWid;
  } else if (text.rfind("static:", 0) == 0) {
    const std::string rest = text.substr(7);
    const std::size_t comma = rest.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("agent: expected static:S,RW; " +
                                  std::string(kAgentForms));
    spec.kind = Kind::kStaticRw;
    spec.s = parse_positive_int(std::string_view(rest).substr(0, comma), "S");
    spec.rw =
        parse_positive_int(std::string_view(rest).substr(comma + 1), "RW");
  } else if (text.rfind("chunk:", 0) == 0) {
    spec.kind = Kind::kChunk;
    spec.chunk_n =
        parse_positive_int(std::string_view(text).substr(6), "N");
  } else {
    throw std::invalid_argument("agent: unknown agent '" + text + "'; " +
                                kAgentForms);
  }
  return spec;
}

std::string AgentSpec::to_string() const {
  switch (kind) {
    case Kind::kWue:
      return "wue";
    case Kind::kWiw:
      return "wiw";
    case Kind::kWid:
      return "wid";
    case Kind::kStaticRw:
      return "static:" + std::to_string(s) + "," + std::to_string(rw);
    case Kind::kChunk:
      return "chunk:" + std::to_string(chunk_n);
  }
  return "?";
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec) {
  switch (spec.kind) {
    case AgentSpec::Kind::kWue:
      return std::make_unique<WueAgent>();
    case AgentSpec::Kind::kWiw:
      return std::make_unique<WiwAgent>();
    case AgentSpec::Kind::kWid:
      return std::make_unique<WidAgent>();
    case AgentSpec::Kind::kStaticRw:
      return std::make_unique<StaticRwAgent>(spec.s, spec.rw);
    case AgentSpec::Kind::kChunk:
      throw std::invalid_argument(
          "agent: chunk decoding is not a READ/WRITE agent");
  }
  throw std::invalid_argument("agent: bad kind");
}

// ---------------------------------------------------------------------------
// Tuner
// ---------------------------------------------------------------------------

std::optional<GridPoint> pick_best_grid_point(std::span<const GridPoint> grid,
                                              double ap_max) {
  std::optional<GridPoint> best;
  for (const GridPoint& p : grid) {
    if (!(p.ap <= ap_max)) continue;  // NaN AP is infeasible
    if (!best || p.bleu > best->bleu ||
        (p.bleu == best->bleu &&
         (p.ap < best->ap ||
          (p.ap == best->ap &&
           (p.s < best->s || (p.s == best->s && p.rw < best->rw))))))
      best = p;
  }
  return best;
}

TuneResult tune_static_rw(const Seq2SeqParams<float>& params,
                          const std::vector<std::vector<int>>& dev_src,
                          const std::vector<std::vector<std::string>>& dev_ref,
                          const Vocabulary& tgt_vocab,
                          const std::vector<int>& s_range,
                          const std::vector<int>& rw_range, double ap_max,
                          int beam, int jobs) {
  if (dev_src.empty())
    throw std::invalid_argument("tune: empty dev set");
  if (s_range.empty() || rw_range.empty())
    throw std::invalid_argument("tune: empty parameter range");

  std::vector<GridPoint> grid;
  for (const int s : s_range)
    for (const int rw : rw_range) grid.push_back({s, rw, 0.0, 0.0});

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= grid.size()) return;
      AgentSpec spec;
      spec.kind = AgentSpec::Kind::kStaticRw;
      spec.s = grid[i].s;
      spec.rw = grid[i].rw;
      const EvalResult r =
          evaluate_agent(params, spec, dev_src, dev_ref, tgt_vocab, beam);
      grid[i].bleu = r.bleu;
      grid[i].ap = r.mean_ap;
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(grid.size()));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const std::optional<GridPoint> best = pick_best_grid_point(grid, ap_max);
  if (!best) throw NoFeasibleAgentError(std::move(grid));
  return {best->s, best->rw, std::move(grid)};
}

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<GridPoint> sorted_for_report(std::span<const GridPoint> grid) {
  std::vector<GridPoint> rows(grid.begin(), grid.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const GridPoint& a, const GridPoint& b) {
                     if (a.ap != b.ap) return a.ap < b.ap;
                     return a.bleu > b.bleu;
                   });
  return rows;
}

}  // namespace

std::string grid_report_tsv(std::span<const GridPoint> grid) {
  std::string out;
  for (const GridPoint& p : sorted_for_report(grid)) {
    out += std::to_string(p.s);
    out += '\t';
    out += std::to_string(p.rw);
    out += '\t';
    out += fmt6(p.bleu);
    out += '\t';
    out += fmt6(p.ap);
    out += '\n';
  }
  return out;
}

std::string grid_report_json(std::span<const GridPoint> grid) {
  nlohmann::json arr = nlohmann::json::array();
  for (const GridPoint& p : sorted_for_report(grid))
    arr.push_back({{"s", p.s}, {"rw", p.rw}, {"bleu", p.bleu}, {"ap", p.ap}});
  return arr.dump(2);
}

}  // namespace simstream
