#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "simstream/model.hpp"

namespace simstream {

// Training hyperparameters. Defaults are the full-size configuration; desk()
// shrinks the model so experiments run in minutes on one core.
struct TrainConfig {
  double learning_rate = 1.0;
  double decay_rate = 0.5;
  double dropout = 0.3;
  int epochs = 13;
  int hidden_size = 500;
  int embed_size = 500;
  std::uint64_t seed = 0;
  std::optional<double> grad_clip = 5.0;
  // First epoch whose learning rate is multiplied by decay_rate; every later
  // epoch multiplies again.
  int decay_start_epoch = 9;

  static TrainConfig desk() {
    TrainConfig c;
    c.hidden_size = 64;
    c.embed_size = 64;
    return c;
  }
  static TrainConfig paper_scale() { return TrainConfig{}; }

  // Fine-tuning defaults layered on top of this config.
  TrainConfig fine_tune_defaults() const {
    TrainConfig c = *this;
    c.epochs = 3;
    c.learning_rate = 0.1;
    c.decay_rate = 1.0;
    return c;
  }

  double epoch_lr(int epoch) const {  // 1-based
    double lr = learning_rate;
    for (int e = decay_start_epoch; e <= epoch; ++e) lr *= decay_rate;
    return lr;
  }

  void validate() const;
};

struct TrainResult {
  Seq2SeqParams<float> params;
  std::vector<double> epoch_mean_loss;  // per-token mean, one entry per epoch
  std::size_t skipped_pairs = 0;        // pairs with an empty side
};

using ProgressFn = std::function<void(int epoch, double mean_loss)>;

// Teacher-forced training from fresh parameters. Corpora are id sequences
// (no <s>/</s>); source and target must be parallel and nonempty.
TrainResult train_full(const std::vector<std::vector<int>>& src,
                       const std::vector<std::vector<int>>& tgt, int src_vocab,
                       int tgt_vocab, const TrainConfig& cfg,
                       const ProgressFn& progress = {});

// Identical loop, initialized from existing parameters. cfg.epochs == 0
// returns the parameters unchanged.
TrainResult fine_tune(Seq2SeqParams<float> params,
                      const std::vector<std::vector<int>>& src,
                      const std::vector<std::vector<int>>& tgt,
                      const TrainConfig& cfg, const ProgressFn& progress = {});

}  // namespace simstream
