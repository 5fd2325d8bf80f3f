#include "doctest.h"
#include "oracles.hpp"
#include "simstream/agents.hpp"
#include "simstream/stream.hpp"

using namespace simstream;

namespace {

AgentContext make_ctx(std::span<const int> cur_tokens,
                      std::span<const float> cur_probs,
                      std::span<const int> prev_tokens,
                      std::span<const float> prev_probs, bool has_prev = true) {
  AgentContext ctx;
  ctx.cur_tokens = cur_tokens;
  ctx.cur_probs = cur_probs;
  ctx.prev_tokens = prev_tokens;
  ctx.prev_probs = prev_probs;
  ctx.has_prev = has_prev;
  return ctx;
}

}  // namespace

TEST_CASE("wue: never commits mid-stream") {
  const std::vector<int> cur{4, 5, 6};
  const std::vector<float> probs{0.9f, 0.8f, 0.7f};
  CHECK(decide_wue(make_ctx(cur, probs, cur, probs)) == 0);
}

TEST_CASE("wiw: commits while the probability does not decrease") {
  const std::vector<int> toks{4, 5, 6};
  SUBCASE("increase commits") {
    const std::vector<float> prev{0.4f};
    const std::vector<float> cur{0.5f, 0.9f};
    CHECK(decide_wiw(make_ctx(toks, cur, toks, prev)) == 1);
  }
  SUBCASE("equality is not a decrease") {
    const std::vector<float> prev{0.4f};
    const std::vector<float> cur{0.4f, 0.9f};
    CHECK(decide_wiw(make_ctx(toks, cur, toks, prev)) == 1);
  }
  SUBCASE("stops at the first failing position") {
    const std::vector<float> prev{0.5f, 0.6f};
    const std::vector<float> cur{0.6f, 0.5f, 0.9f};
    CHECK(decide_wiw(make_ctx(toks, cur, toks, prev)) == 1);
  }
  SUBCASE("first read has nothing to compare") {
    const std::vector<float> cur{0.9f};
    CHECK(decide_wiw(make_ctx(toks, cur, {}, {}, false)) == 0);
  }
}

TEST_CASE("wid: commits while the token is unchanged") {
  SUBCASE("two stable tokens") {
    const std::vector<int> prev{7, 8};
    const std::vector<int> cur{7, 8, 9};
    const std::vector<float> p2{0.5f, 0.5f};
    const std::vector<float> p3{0.5f, 0.5f, 0.5f};
    CHECK(decide_wid(make_ctx(cur, p3, prev, p2)) == 2);
  }
  SUBCASE("divergence stops the scan") {
    const std::vector<int> prev{7, 10};
    const std::vector<int> cur{7, 8, 9};
    const std::vector<float> p2{0.5f, 0.5f};
    const std::vector<float> p3{0.5f, 0.5f, 0.5f};
    CHECK(decide_wid(make_ctx(cur, p3, prev, p2)) == 1);
  }
  SUBCASE("empty previous continuation commits nothing") {
    const std::vector<int> cur{7};
    const std::vector<float> p1{0.5f};
    CHECK(decide_wid(make_ctx(cur, p1, {}, {})) == 0);
  }
}

TEST_CASE("static-rw: decision sequence follows the S/RW schedule") {
  StaticRwAgent agent(3, 2);
  agent.reset();
  AgentContext ctx;  // static-rw ignores the context content
  std::vector<int> decisions;
  for (int r = 1; r <= 9; ++r) decisions.push_back(agent.decide(ctx));
  // S=3 startup, then a WRITE of 2 after every 2 further READs
  CHECK(decisions == std::vector<int>{0, 0, 2, 0, 2, 0, 2, 0, 2});
}

TEST_CASE("static-rw: S at least the source length behaves like wue") {
  for (int n = 1; n <= 6; ++n) {
    oracles::OneWordPerReadBackend b1, b2;
    StaticRwAgent agent(8, 2);
    auto wue = make_agent(AgentSpec::parse("wue"));
    std::vector<int> source(n, 1);
    StreamResult rs = run_stream(b1, agent, source);
    StreamResult rw = run_stream(b2, *wue, source);
    CHECK(rs.tokens == rw.tokens);
    CHECK(rs.trace == rw.trace);
  }
}

TEST_CASE("static-rw: smallest schedule commits one word per read") {
  StaticRwAgent agent(1, 1);
  agent.reset();
  AgentContext ctx;
  for (int r = 1; r <= 5; ++r) CHECK(agent.decide(ctx) == 1);
}

TEST_CASE("static-rw: decisions ignore token content") {
  StaticRwAgent a1(2, 2), a2(2, 2);
  a1.reset();
  a2.reset();
  const std::vector<int> t1{4, 5, 6};
  const std::vector<int> t2{6, 4, 5};  // permuted
  const std::vector<float> p1{0.9f, 0.1f, 0.5f};
  const std::vector<float> p2{0.5f, 0.9f, 0.1f};
  for (int r = 1; r <= 8; ++r)
    CHECK(a1.decide(make_ctx(t1, p1, t1, p1)) ==
          a2.decide(make_ctx(t2, p2, t2, p2)));
}

TEST_CASE("static-rw: constructor validates parameters") {
  CHECK_THROWS_AS(StaticRwAgent(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(StaticRwAgent(1, 0), std::invalid_argument);
}

TEST_CASE("agent strings parse and reject unknown forms") {
  CHECK(AgentSpec::parse("wue").kind == AgentSpec::Kind::kWue);
  CHECK(AgentSpec::parse("wiw").kind == AgentSpec::Kind::kWiw);
  CHECK(AgentSpec::parse("wid").kind == AgentSpec::Kind::kWid);
  const AgentSpec s = AgentSpec::parse("static:5,2");
  CHECK(s.s == 5);
  CHECK(s.rw == 2);
  CHECK(s.to_string() == "static:5,2");
  CHECK(AgentSpec::parse("chunk:6").chunk_n == 6);
  CHECK_THROWS_AS(AgentSpec::parse("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(AgentSpec::parse("static:5"), std::invalid_argument);
  CHECK_THROWS_AS(AgentSpec::parse("static:0,2"), std::invalid_argument);
  CHECK_THROWS_AS(AgentSpec::parse("chunk:x"), std::invalid_argument);
}

TEST_CASE("grid selection: constrained argmax with tie rules") {
  SUBCASE("budget excludes the best BLEU") {
    const std::vector<GridPoint> grid{
        {1, 1, 0.50, 0.60}, {2, 1, 0.52, 0.70}, {3, 1, 0.53, 0.80}};
    auto best = pick_best_grid_point(grid, 0.75);
    REQUIRE(best);
    CHECK(best->s == 2);
    CHECK(best->rw == 1);
  }
  SUBCASE("equal BLEU prefers lower AP") {
    const std::vector<GridPoint> grid{{1, 1, 0.50, 0.72}, {2, 1, 0.50, 0.70}};
    auto best = pick_best_grid_point(grid, 0.75);
    REQUIRE(best);
    CHECK(best->s == 2);
  }
  SUBCASE("equal BLEU and AP prefers smaller S, then smaller RW") {
    const std::vector<GridPoint> grid{
        {3, 2, 0.5, 0.7}, {2, 2, 0.5, 0.7}, {2, 1, 0.5, 0.7}};
    auto best = pick_best_grid_point(grid, 0.75);
    REQUIRE(best);
    CHECK(best->s == 2);
    CHECK(best->rw == 1);
  }
  SUBCASE("no feasible point") {
    const std::vector<GridPoint> grid{{1, 1, 0.9, 0.8}};
    CHECK(!pick_best_grid_point(grid, 0.75));
  }
}

TEST_CASE("grid reports: sorted rows and matching row count") {
  const std::vector<GridPoint> grid{
      {1, 1, 0.50, 0.80}, {2, 1, 0.40, 0.60}, {3, 1, 0.60, 0.60}};
  const std::string tsv = grid_report_tsv(grid);
  std::size_t rows = 0;
  for (const char c : tsv) rows += (c == '\n');
  CHECK(rows == grid.size());
  // sorted by AP then -BLEU: (3,1) before (2,1) before (1,1)
  CHECK(tsv.find("3\t1") < tsv.find("2\t1"));
  CHECK(tsv.find("2\t1") < tsv.find("1\t1"));
}

TEST_CASE("tuner: infeasible budget throws with the grid attached") {
  auto p = oracles::random_params(10, 10, 4, 4, 55);
  std::vector<std::vector<int>> dev{{4, 5, 6}, {5, 6, 7}};
  std::vector<std::vector<std::string>> refs{{"a", "b", "c"}, {"b", "c", "d"}};
  Vocabulary v = oracles::vocab_of_size(10);
  try {
    tune_static_rw(p, dev, refs, v, {1, 2}, {1}, 1e-9);
    FAIL("expected NoFeasibleAgentError");
  } catch (const NoFeasibleAgentError& e) {
    CHECK(e.grid().size() == 2);
  }
}

TEST_CASE("tuner: parallel evaluation matches sequential") {
  auto p = oracles::random_params(10, 11, 4, 4, 56);
  Rng rng(57);
  std::vector<std::vector<int>> dev;
  std::vector<std::vector<std::string>> refs;
  for (int i = 0; i < 6; ++i) {
    dev.push_back(oracles::random_sentence(rng, 10, 2, 5));
    refs.push_back({"a", "b", "c"});
  }
  Vocabulary v = oracles::vocab_of_size(11);
  TuneResult seq = tune_static_rw(p, dev, refs, v, {1, 2}, {1, 2}, 1.0, 1, 1);
  TuneResult par = tune_static_rw(p, dev, refs, v, {1, 2}, {1, 2}, 1.0, 1, 4);
  CHECK(seq.best_s == par.best_s);
  CHECK(seq.best_rw == par.best_rw);
  REQUIRE(seq.grid.size() == par.grid.size());
  for (std::size_t i = 0; i < seq.grid.size(); ++i) {
    CHECK(seq.grid[i].bleu == par.grid[i].bleu);
    CHECK(seq.grid[i].ap == par.grid[i].ap);
  }
}
