// simstream command-line tool: training, offline/streaming decoding, agent
// tuning, evaluation, and training-data transforms, all reproducible from a
// seed and recorded in a run manifest.

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "simstream/agents.hpp"
#include "simstream/checkpoint.hpp"
#include "simstream/metrics.hpp"
#include "simstream/model.hpp"
#include "simstream/stream.hpp"
#include "simstream/textio.hpp"
#include "simstream/train.hpp"
#include "simstream/transforms.hpp"
#include "simstream/vocab.hpp"

using namespace simstream;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class ManifestWriter {
 public:
  ManifestWriter(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    j_["flags"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["versions"] = {{"simstream", kVersion},
                      {"checkpoint_format", kCheckpointVersion}};
  }
  template <typename T>
  void flag(const std::string& name, const T& value) {
    j_["flags"][name] = value;
  }
  void input(const std::string& path) { j_["inputs"].push_back(path); }
  void output(const std::string& path) { j_["outputs"].push_back(path); }
  void seed(std::uint64_t s) { j_["seed"] = s; }
  void extra(const std::string& key, const json& value) { j_[key] = value; }
  void write(const std::string& path) {
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - start_;
    j_["duration_seconds"] = dt.count();
    atomic_write_file(path, j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

std::string default_manifest_path(const std::string& manifest_flag,
                                  const std::string& primary_output) {
  if (!manifest_flag.empty()) return manifest_flag;
  return primary_output + ".manifest.json";
}

// "lo:hi" (inclusive) or a single integer.
std::vector<int> parse_range(const std::string& text) {
  const std::size_t colon = text.find(':');
  int lo = 0, hi = 0;
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, colon));
      hi = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError("range", "expected N or LO:HI, got '" + text +
                                            "'");
  }
  if (lo < 1 || hi < lo)
    throw CLI::ValidationError("range", "bad range '" + text + "'");
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

std::vector<std::vector<int>> encode_corpus(
    const std::vector<std::vector<std::string>>& corpus,
    const Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  for (const auto& sent : corpus) out.push_back(vocab.encode(sent));
  return out;
}

struct TrainCli {
  std::string src, tgt, out, init_from, config = "desk", manifest;
  int epochs = -1, hidden = -1, embed = -1, vocab_size = -1, decay_start = -1;
  double lr = -1, decay = -1, dropout = -1, clip = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_train(const TrainCli& cli) {
  TrainConfig cfg;
  Checkpoint base;
  const bool fine_tuning = !cli.init_from.empty();
  if (fine_tuning) {
    base = load_checkpoint(cli.init_from);
    cfg = base.config.fine_tune_defaults();
  } else {
    cfg = (cli.config == "paper") ? TrainConfig::paper_scale()
                                  : TrainConfig::desk();
  }
  if (cli.epochs >= 0) cfg.epochs = cli.epochs;
  if (cli.lr >= 0) cfg.learning_rate = cli.lr;
  if (cli.decay >= 0) cfg.decay_rate = cli.decay;
  if (cli.dropout >= 0) cfg.dropout = cli.dropout;
  if (cli.hidden > 0) cfg.hidden_size = cli.hidden;
  if (cli.embed > 0) cfg.embed_size = cli.embed;
  if (cli.decay_start > 0) cfg.decay_start_epoch = cli.decay_start;
  if (cli.clip == 0)
    cfg.grad_clip = std::nullopt;
  else if (cli.clip > 0)
    cfg.grad_clip = cli.clip;
  if (cli.seed_set) cfg.seed = cli.seed;
  cfg.validate();

  const auto src_text = read_token_lines(cli.src);
  const auto tgt_text = read_token_lines(cli.tgt);
  if (src_text.size() != tgt_text.size())
    throw std::runtime_error("train: corpus line counts differ");

  Vocabulary vocab_src, vocab_tgt;
  if (fine_tuning) {
    vocab_src = base.vocab_src;
    vocab_tgt = base.vocab_tgt;
  } else {
    const int cap = cli.vocab_size > 0 ? cli.vocab_size
                                       : (cli.config == "paper" ? 50000 : 200);
    vocab_src = Vocabulary::build(src_text, cap);
    vocab_tgt = Vocabulary::build(tgt_text, cap);
  }
  const auto src_ids = encode_corpus(src_text, vocab_src);
  const auto tgt_ids = encode_corpus(tgt_text, vocab_tgt);

  ManifestWriter manifest("train");
  manifest.input(cli.src);
  manifest.input(cli.tgt);
  if (fine_tuning) manifest.input(cli.init_from);
  manifest.output(cli.out);
  manifest.seed(cfg.seed);
  manifest.flag("config", fine_tuning ? std::string("fine-tune") : cli.config);
  manifest.extra("resolved_config", config_to_json(cfg));

  std::vector<double> losses;
  const ProgressFn progress = [&](int epoch, double loss) {
    std::cout << "epoch " << epoch << " mean_loss " << loss << "\n";
    losses.push_back(loss);
  };
  TrainResult result =
      fine_tuning
          ? fine_tune(std::move(base.params), src_ids, tgt_ids, cfg, progress)
          : train_full(src_ids, tgt_ids, vocab_src.size(), vocab_tgt.size(),
                       cfg, progress);

  Checkpoint cp;
  cp.config = cfg;
  cp.vocab_src = vocab_src;
  cp.vocab_tgt = vocab_tgt;
  cp.params = std::move(result.params);
  save_checkpoint(cli.out, cp);
  manifest.extra("epoch_mean_loss", losses);
  manifest.extra("skipped_pairs", result.skipped_pairs);
  manifest.write(default_manifest_path(cli.manifest, cli.out));
  return 0;
}

struct DecodeCli {
  std::string model, input, out, manifest;
  int beam = 1;
};

int run_decode(const DecodeCli& cli) {
  const Checkpoint cp = load_checkpoint(cli.model);
  const auto lines = read_token_lines(cli.input);
  std::string buf;
  for (const auto& line : lines) {
    const std::vector<int> ids = cp.vocab_src.encode(line);
    const std::vector<int> out = offline_decode(cp.params, ids, cli.beam);
    buf += join_tokens(cp.vocab_tgt.to_tokens(out));
    buf += '\n';
  }
  atomic_write_file(cli.out, buf);
  ManifestWriter manifest("decode");
  manifest.input(cli.model);
  manifest.input(cli.input);
  manifest.output(cli.out);
  manifest.flag("beam", cli.beam);
  manifest.write(default_manifest_path(cli.manifest, cli.out));
  return 0;
}

struct StreamDecodeCli {
  std::string model, input, agent, out, trace_out, manifest;
  int beam = 1;
};

int run_stream_decode(const StreamDecodeCli& cli) {
  const Checkpoint cp = load_checkpoint(cli.model);
  const AgentSpec spec = AgentSpec::parse(cli.agent);
  const auto lines = read_token_lines(cli.input);

  std::string out_buf;
  std::string trace_buf;
  for (const auto& line : lines) {
    const std::vector<int> ids = cp.vocab_src.encode(line);
    StreamResult result;
    if (ids.empty()) {
      result = StreamResult{};
    } else if (spec.is_chunk()) {
      result = chunk_decode(cp.params, ids, spec.chunk_n, cli.beam);
    } else {
      auto agent = make_agent(spec);
      const TraceSink sink = [&](const TraceEvent& ev) {
        trace_buf += format_trace_event(ev, cp.vocab_tgt);
        trace_buf += '\n';
      };
      result = run_stream(cp.params, *agent, ids, cli.beam,
                          cli.trace_out.empty() ? TraceSink{} : sink);
    }
    out_buf += join_tokens(cp.vocab_tgt.to_tokens(result.tokens));
    out_buf += '\n';
  }
  atomic_write_file(cli.out, out_buf);
  if (!cli.trace_out.empty()) atomic_write_file(cli.trace_out, trace_buf);

  ManifestWriter manifest("stream-decode");
  manifest.input(cli.model);
  manifest.input(cli.input);
  manifest.output(cli.out);
  if (!cli.trace_out.empty()) manifest.output(cli.trace_out);
  manifest.flag("agent", spec.to_string());
  if (spec.kind == AgentSpec::Kind::kStaticRw) {
    manifest.flag("S", spec.s);
    manifest.flag("RW", spec.rw);
  }
  if (spec.is_chunk()) manifest.flag("N", spec.chunk_n);
  manifest.flag("beam", cli.beam);
  manifest.write(default_manifest_path(cli.manifest, cli.out));
  return 0;
}

struct TuneCli {
  std::string model, dev_src, dev_ref, s_range = "1:4", rw_range = "1:3";
  std::string grid_out, manifest;
  double ap_max = 0.75;
  int beam = 1, jobs = 1;
};

int run_tune(const TuneCli& cli) {
  const Checkpoint cp = load_checkpoint(cli.model);
  const auto dev_src_text = read_token_lines(cli.dev_src);
  const auto dev_ref = read_token_lines(cli.dev_ref);
  const auto dev_ids = encode_corpus(dev_src_text, cp.vocab_src);
  const std::vector<int> s_range = parse_range(cli.s_range);
  const std::vector<int> rw_range = parse_range(cli.rw_range);

  ManifestWriter manifest("tune");
  manifest.input(cli.model);
  manifest.input(cli.dev_src);
  manifest.input(cli.dev_ref);
  manifest.output(cli.grid_out);
  manifest.flag("s_range", cli.s_range);
  manifest.flag("rw_range", cli.rw_range);
  manifest.flag("ap_max", cli.ap_max);
  manifest.flag("beam", cli.beam);
  manifest.flag("jobs", cli.jobs);

  auto write_grid = [&](std::span<const GridPoint> grid) {
    atomic_write_file(cli.grid_out, grid_report_tsv(grid));
    atomic_write_file(cli.grid_out + ".json", grid_report_json(grid) + "\n");
  };

  try {
    TuneResult result =
        tune_static_rw(cp.params, dev_ids, dev_ref, cp.vocab_tgt, s_range,
                       rw_range, cli.ap_max, cli.beam, cli.jobs);
    write_grid(result.grid);
    double best_bleu = 0, best_ap = 0;
    for (const GridPoint& g : result.grid)
      if (g.s == result.best_s && g.rw == result.best_rw) {
        best_bleu = g.bleu;
        best_ap = g.ap;
      }
    const json chosen = {{"s", result.best_s},
                         {"rw", result.best_rw},
                         {"bleu", best_bleu},
                         {"ap", best_ap}};
    std::cout << chosen.dump(2) << "\n";
    manifest.extra("chosen", chosen);
    manifest.output(cli.grid_out + ".json");
    manifest.write(default_manifest_path(cli.manifest, cli.grid_out));
    return 0;
  } catch (const NoFeasibleAgentError& e) {
    write_grid(e.grid());
    manifest.extra("chosen", nullptr);
    manifest.output(cli.grid_out + ".json");
    manifest.write(default_manifest_path(cli.manifest, cli.grid_out));
    std::cerr << "error: " << e.what() << " (grid written to " << cli.grid_out
              << ")\n";
    return 3;
  }
}

struct EvaluateCli {
  std::string model, agent, src, ref, out, per_sentence_out, manifest;
  int beam = 1;
};

int run_evaluate(const EvaluateCli& cli) {
  const Checkpoint cp = load_checkpoint(cli.model);
  const AgentSpec spec = AgentSpec::parse(cli.agent);
  const auto src_text = read_token_lines(cli.src);
  const auto refs = read_token_lines(cli.ref);
  const auto src_ids = encode_corpus(src_text, cp.vocab_src);
  const EvalResult result =
      evaluate_agent(cp.params, spec, src_ids, refs, cp.vocab_tgt, cli.beam);
  const std::string payload = eval_result_json(result) + "\n";
  std::cout << payload;
  if (!cli.out.empty()) atomic_write_file(cli.out, payload);
  if (!cli.per_sentence_out.empty()) {
    std::string tsv;
    for (std::size_t i = 0; i < result.per_sentence.size(); ++i) {
      const auto& se = result.per_sentence[i];
      tsv += std::to_string(i);
      tsv += '\t';
      tsv += std::to_string(se.bleu_smoothed);
      tsv += '\t';
      tsv += se.ap ? std::to_string(*se.ap) : std::string("NA");
      tsv += '\n';
    }
    atomic_write_file(cli.per_sentence_out, tsv);
  }
  if (!cli.out.empty() || !cli.manifest.empty()) {
    ManifestWriter manifest("evaluate");
    manifest.input(cli.model);
    manifest.input(cli.src);
    manifest.input(cli.ref);
    if (!cli.out.empty()) manifest.output(cli.out);
    if (!cli.per_sentence_out.empty()) manifest.output(cli.per_sentence_out);
    manifest.flag("agent", spec.to_string());
    manifest.flag("beam", cli.beam);
    manifest.extra("result", json::parse(payload));
    manifest.write(default_manifest_path(
        cli.manifest, cli.out.empty() ? "evaluate" : cli.out));
  }
  return 0;
}

struct GenSynthCli {
  std::string task = "copy", out_src, out_tgt, out_align, manifest;
  int n = 1000, vocab = 20, len_min = 4, len_max = 8;
  std::uint64_t seed = 0;
};

int run_gen_synth(const GenSynthCli& cli) {
  const SynthTask task = parse_synth_task(cli.task);
  const SynthCorpus corpus =
      gen_synthetic(task, cli.n, cli.vocab, cli.len_min, cli.len_max, cli.seed);
  write_token_lines(cli.out_src, corpus.src);
  write_token_lines(cli.out_tgt, corpus.tgt);
  if (!cli.out_align.empty()) {
    std::string buf;
    for (const auto& a : corpus.alignments) {
      buf += format_pharaoh(a);
      buf += '\n';
    }
    atomic_write_file(cli.out_align, buf);
  }
  ManifestWriter manifest("gen-synth");
  manifest.seed(cli.seed);
  manifest.flag("task", cli.task);
  manifest.flag("n", cli.n);
  manifest.flag("vocab", cli.vocab);
  manifest.flag("len_min", cli.len_min);
  manifest.flag("len_max", cli.len_max);
  manifest.output(cli.out_src);
  manifest.output(cli.out_tgt);
  if (!cli.out_align.empty()) manifest.output(cli.out_align);
  manifest.write(default_manifest_path(cli.manifest, cli.out_src));
  return 0;
}

struct GenChunksCli {
  std::string src, tgt, align, out_src, out_tgt, manifest;
  int n = 6;
};

int run_gen_chunks(const GenChunksCli& cli) {
  const auto src = read_token_lines(cli.src);
  const auto tgt = read_token_lines(cli.tgt);
  const auto alignments = read_alignment_file(cli.align);
  const auto pairs = chunk_corpus(src, tgt, alignments, cli.n);
  std::vector<std::vector<std::string>> out_src, out_tgt;
  for (const auto& p : pairs) {
    out_src.push_back(p.src);
    out_tgt.push_back(p.tgt);
  }
  write_token_lines(cli.out_src, out_src);
  write_token_lines(cli.out_tgt, out_tgt);
  ManifestWriter manifest("gen-chunks");
  manifest.input(cli.src);
  manifest.input(cli.tgt);
  manifest.input(cli.align);
  manifest.output(cli.out_src);
  manifest.output(cli.out_tgt);
  manifest.flag("n", cli.n);
  manifest.extra("pairs", pairs.size());
  manifest.write(default_manifest_path(cli.manifest, cli.out_src));
  return 0;
}

struct GenAddmCli {
  std::string src, tgt, align, out_src, out_tgt, manifest;
  int n = 6, m = 1;
};

int run_gen_addm(const GenAddmCli& cli) {
  const auto src = read_token_lines(cli.src);
  const auto tgt = read_token_lines(cli.tgt);
  const auto alignments = read_alignment_file(cli.align);
  const auto pairs = addm_corpus(src, tgt, alignments, cli.n, cli.m);
  std::vector<std::vector<std::string>> out_src, out_tgt;
  for (const auto& p : pairs) {
    out_src.push_back(p.src);
    out_tgt.push_back(p.tgt);
  }
  write_token_lines(cli.out_src, out_src);
  write_token_lines(cli.out_tgt, out_tgt);
  ManifestWriter manifest("gen-addm");
  manifest.input(cli.src);
  manifest.input(cli.tgt);
  manifest.input(cli.align);
  manifest.output(cli.out_src);
  manifest.output(cli.out_tgt);
  manifest.flag("n", cli.n);
  manifest.flag("m", cli.m);
  manifest.extra("pairs", pairs.size());
  manifest.write(default_manifest_path(cli.manifest, cli.out_src));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simstream: simultaneous translation toolkit"};
  app.require_subcommand(1);

  TrainCli train_cli;
  auto* train_cmd =
      app.add_subcommand("train", "train a model (or fine-tune one)");
  train_cmd->add_option("--src", train_cli.src, "source corpus")->required();
  train_cmd->add_option("--tgt", train_cli.tgt, "target corpus")->required();
  train_cmd->add_option("--out", train_cli.out, "output checkpoint")
      ->required();
  train_cmd->add_option("--config", train_cli.config, "desk | paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--init-from", train_cli.init_from,
                        "checkpoint to fine-tune from");
  train_cmd->add_option("--epochs", train_cli.epochs, "training epochs");
  train_cmd->add_option("--lr", train_cli.lr, "initial learning rate");
  train_cmd->add_option("--decay", train_cli.decay, "epoch decay rate");
  train_cmd->add_option("--dropout", train_cli.dropout, "dropout rate");
  train_cmd->add_option("--hidden", train_cli.hidden, "hidden size");
  train_cmd->add_option("--embed", train_cli.embed, "embedding size");
  train_cmd->add_option("--decay-start", train_cli.decay_start,
                        "first decayed epoch");
  train_cmd->add_option("--clip", train_cli.clip,
                        "gradient norm clip (0 disables)");
  train_cmd->add_option("--vocab-size", train_cli.vocab_size,
                        "vocabulary cap");
  auto* seed_opt = train_cmd->add_option("--seed", train_cli.seed, "RNG seed");
  train_cmd->add_option("--manifest", train_cli.manifest, "manifest path");
  train_cmd->callback(
      [&]() { train_cli.seed_set = seed_opt->count() > 0; });

  DecodeCli decode_cli;
  auto* decode_cmd =
      app.add_subcommand("decode", "offline decoding of full sentences");
  decode_cmd->add_option("--model", decode_cli.model, "checkpoint")
      ->required();
  decode_cmd->add_option("--input", decode_cli.input, "source text")
      ->required();
  decode_cmd->add_option("--out", decode_cli.out, "output text")->required();
  decode_cmd->add_option("--beam", decode_cli.beam, "beam width")
      ->check(CLI::PositiveNumber);
  decode_cmd->add_option("--manifest", decode_cli.manifest, "manifest path");

  StreamDecodeCli stream_cli;
  auto* stream_cmd = app.add_subcommand(
      "stream-decode", "incremental READ/WRITE decoding with an agent");
  stream_cmd->add_option("--model", stream_cli.model, "checkpoint")
      ->required();
  stream_cmd->add_option("--input", stream_cli.input, "source text")
      ->required();
  stream_cmd
      ->add_option("--agent", stream_cli.agent,
                   "wue | wiw | wid | static:S,RW | chunk:N")
      ->required()
      ->check([](const std::string& s) -> std::string {
        try {
          AgentSpec::parse(s);
          return {};
        } catch (const std::exception& e) {
          return e.what();
        }
      });
  stream_cmd->add_option("--out", stream_cli.out, "output text")->required();
  stream_cmd->add_option("--beam", stream_cli.beam, "beam width")
      ->check(CLI::PositiveNumber);
  stream_cmd->add_option("--trace-out", stream_cli.trace_out,
                         "READ/WRITE trace log");
  stream_cmd->add_option("--manifest", stream_cli.manifest, "manifest path");

  TuneCli tune_cli;
  auto* tune_cmd = app.add_subcommand(
      "tune", "grid-search STATIC-RW under an AP budget");
  tune_cmd->add_option("--model", tune_cli.model, "checkpoint")->required();
  tune_cmd->add_option("--dev-src", tune_cli.dev_src, "dev source")
      ->required();
  tune_cmd->add_option("--dev-ref", tune_cli.dev_ref, "dev references")
      ->required();
  tune_cmd->add_option("--s-range", tune_cli.s_range, "S range LO:HI");
  tune_cmd->add_option("--rw-range", tune_cli.rw_range, "RW range LO:HI");
  tune_cmd->add_option("--ap-max", tune_cli.ap_max, "AP budget");
  tune_cmd->add_option("--beam", tune_cli.beam, "beam width")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--jobs", tune_cli.jobs, "parallel grid evaluations")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--grid-out", tune_cli.grid_out, "grid report path")
      ->required();
  tune_cmd->add_option("--manifest", tune_cli.manifest, "manifest path");

  EvaluateCli eval_cli;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "corpus BLEU and mean AP for an agent");
  eval_cmd->add_option("--model", eval_cli.model, "checkpoint")->required();
  eval_cmd
      ->add_option("--agent", eval_cli.agent,
                   "wue | wiw | wid | static:S,RW | chunk:N")
      ->required()
      ->check([](const std::string& s) -> std::string {
        try {
          AgentSpec::parse(s);
          return {};
        } catch (const std::exception& e) {
          return e.what();
        }
      });
  eval_cmd->add_option("--src", eval_cli.src, "source text")->required();
  eval_cmd->add_option("--ref", eval_cli.ref, "reference text")->required();
  eval_cmd->add_option("--beam", eval_cli.beam, "beam width")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", eval_cli.out, "result JSON path");
  eval_cmd->add_option("--per-sentence-out", eval_cli.per_sentence_out,
                       "per-sentence TSV");
  eval_cmd->add_option("--manifest", eval_cli.manifest, "manifest path");

  GenSynthCli synth_cli;
  auto* synth_cmd =
      app.add_subcommand("gen-synth", "generate a synthetic toy corpus");
  synth_cmd->add_option("--task", synth_cli.task, "copy | reverse | shift")
      ->check(CLI::IsMember({"copy", "reverse", "shift"}));
  synth_cmd->add_option("--n", synth_cli.n, "sentences");
  synth_cmd->add_option("--vocab", synth_cli.vocab, "vocabulary size");
  synth_cmd->add_option("--len-min", synth_cli.len_min, "minimum length");
  synth_cmd->add_option("--len-max", synth_cli.len_max, "maximum length");
  synth_cmd->add_option("--seed", synth_cli.seed, "RNG seed");
  synth_cmd->add_option("--out-src", synth_cli.out_src, "source output")
      ->required();
  synth_cmd->add_option("--out-tgt", synth_cli.out_tgt, "target output")
      ->required();
  synth_cmd->add_option("--out-align", synth_cli.out_align,
                        "alignment output");
  synth_cmd->add_option("--manifest", synth_cli.manifest, "manifest path");

  GenChunksCli chunks_cli;
  auto* chunks_cmd = app.add_subcommand(
      "gen-chunks", "alignment-projected chunk training pairs");
  chunks_cmd->add_option("--src", chunks_cli.src, "source corpus")
      ->required();
  chunks_cmd->add_option("--tgt", chunks_cli.tgt, "target corpus")
      ->required();
  chunks_cmd->add_option("--align", chunks_cli.align, "alignments")
      ->required();
  chunks_cmd->add_option("--n", chunks_cli.n, "chunk length")
      ->check(CLI::PositiveNumber);
  chunks_cmd->add_option("--out-src", chunks_cli.out_src, "source output")
      ->required();
  chunks_cmd->add_option("--out-tgt", chunks_cli.out_tgt, "target output")
      ->required();
  chunks_cmd->add_option("--manifest", chunks_cli.manifest, "manifest path");

  GenAddmCli addm_cli;
  auto* addm_cmd = app.add_subcommand(
      "gen-addm", "growing-prefix training pairs (N, N+M, N+2M, ...)");
  addm_cmd->add_option("--src", addm_cli.src, "source corpus")->required();
  addm_cmd->add_option("--tgt", addm_cli.tgt, "target corpus")->required();
  addm_cmd->add_option("--align", addm_cli.align, "alignments")->required();
  addm_cmd->add_option("--n", addm_cli.n, "initial prefix length N")
      ->check(CLI::PositiveNumber);
  addm_cmd->add_option("--m", addm_cli.m, "prefix growth step M")
      ->check(CLI::PositiveNumber);
  addm_cmd->add_option("--out-src", addm_cli.out_src, "source output")
      ->required();
  addm_cmd->add_option("--out-tgt", addm_cli.out_tgt, "target output")
      ->required();
  addm_cmd->add_option("--manifest", addm_cli.manifest, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train_cmd)) return run_train(train_cli);
    if (app.got_subcommand(decode_cmd)) return run_decode(decode_cli);
    if (app.got_subcommand(stream_cmd)) return run_stream_decode(stream_cli);
    if (app.got_subcommand(tune_cmd)) return run_tune(tune_cli);
    if (app.got_subcommand(eval_cmd)) return run_evaluate(eval_cli);
    if (app.got_subcommand(synth_cmd)) return run_gen_synth(synth_cli);
    if (app.got_subcommand(chunks_cmd)) return run_gen_chunks(chunks_cli);
    if (app.got_subcommand(addm_cmd)) return run_gen_addm(addm_cli);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
