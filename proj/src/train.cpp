#include "simstream/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace simstream {

void TrainConfig::validate() const {
  if (learning_rate < 0)
    throw std::invalid_argument("config: learning_rate must be >= 0");
  if (decay_rate <= 0 || decay_rate > 1)
    throw std::invalid_argument("config: decay_rate must be in (0, 1]");
  if (dropout < 0 || dropout >= 1)
    throw std::invalid_argument("config: dropout must be in [0, 1)");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (hidden_size < 1 || embed_size < 1)
    throw std::invalid_argument("config: model dimensions must be positive");
  if (grad_clip && *grad_clip <= 0)
    throw std::invalid_argument("config: grad_clip must be > 0");
}

namespace {

TrainResult run_training(Seq2SeqParams<float> params,
                         const std::vector<std::vector<int>>& src,
                         const std::vector<std::vector<int>>& tgt,
                         const TrainConfig& cfg, Rng& rng,
                         const ProgressFn& progress) {
  TrainResult result;
  Seq2SeqGrads<float> grads = Seq2SeqGrads<float>::zeros_like(params);
  std::vector<ParamGradBind<float>> binds = make_binds(params, grads);

  std::vector<std::size_t> order;
  order.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty() || tgt[i].empty()) {
      ++result.skipped_pairs;
      continue;
    }
    order.push_back(i);
  }
  if (order.empty() && cfg.epochs > 0)
    throw std::invalid_argument("train: no usable sentence pairs");

  const float dropout = static_cast<float>(cfg.dropout);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cfg.epoch_lr(epoch);
    rng.shuffle(order);
    double loss_sum = 0;
    long long token_count = 0;
    for (const std::size_t i : order) {
      LossCaches<float> fwd = seq2seq_loss_forward<float>(
          params, src[i], tgt[i], dropout, &rng);
      if (!std::isfinite(static_cast<double>(fwd.loss_sum)))
        throw std::runtime_error("train: non-finite loss at sentence " +
                                 std::to_string(i) + ", epoch " +
                                 std::to_string(epoch));
      loss_sum += static_cast<double>(fwd.loss_sum);
      token_count += fwd.token_count;
      grads.zero();
      seq2seq_loss_backward(params, fwd, grads);
      // per-token gradient, normalized before clipping
      const float inv = 1.0f / static_cast<float>(fwd.token_count);
      grads.for_each_tensor(
          [&](const char*, std::vector<float>& g, const std::vector<int>&) {
            for (auto& x : g) x *= inv;
          });
      sgd_step<float>(binds, lr, cfg.grad_clip);
    }
    bool finite = true;
    params.for_each_tensor([&](const char*, const std::vector<float>& v,
                               const std::vector<int>&) {
      finite = finite && all_finite(v.data(), v.size());
    });
    if (!finite)
      throw std::runtime_error("train: non-finite parameters after epoch " +
                               std::to_string(epoch));
    const double mean = (token_count > 0)
                            ? loss_sum / static_cast<double>(token_count)
                            : 0.0;
    result.epoch_mean_loss.push_back(mean);
    if (progress) progress(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

void check_parallel(const std::vector<std::vector<int>>& src,
                    const std::vector<std::vector<int>>& tgt) {
  if (src.size() != tgt.size())
    throw std::invalid_argument("train: source/target corpus length mismatch");
  if (src.empty()) throw std::invalid_argument("train: empty corpus");
}

}  // namespace

TrainResult train_full(const std::vector<std::vector<int>>& src,
                       const std::vector<std::vector<int>>& tgt, int src_vocab,
                       int tgt_vocab, const TrainConfig& cfg,
                       const ProgressFn& progress) {
  cfg.validate();
  check_parallel(src, tgt);
  Rng rng(cfg.seed);
  Seq2SeqParams<float> params = Seq2SeqParams<float>::init(
      src_vocab, tgt_vocab, cfg.embed_size, cfg.hidden_size, rng);
  return run_training(std::move(params), src, tgt, cfg, rng, progress);
}

TrainResult fine_tune(Seq2SeqParams<float> params,
                      const std::vector<std::vector<int>>& src,
                      const std::vector<std::vector<int>>& tgt,
                      const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (cfg.epochs == 0) {
    TrainResult r;
    r.params = std::move(params);
    return r;
  }
  check_parallel(src, tgt);
  Rng rng(cfg.seed);
  return run_training(std::move(params), src, tgt, cfg, rng, progress);
}

}  // namespace simstream
