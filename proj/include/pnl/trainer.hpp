#ifndef PNL_TRAINER_HPP_
#define PNL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pnl/encoder.hpp"
#include "pnl/losses.hpp"
#include "pnl/memory.hpp"
#include "pnl/rectify.hpp"
#include "pnl/synthdata.hpp"

namespace pnl {

struct TrainConfig {
  int epochs = 30;
  int rectify_start = 3;  // rectification from epoch rectify_start + 1
  int lgc_start = 5;      // label-guided contrast from epoch lgc_start on
  std::size_t batch_size = 64;
  double lr = 0.1;
  double lr_decay = 0.1;
  int lr_decay_interval = 13;  // epochs between decays
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  double momentum = 0.999;  // key-encoder EMA and prototype momentum
  double tau = 0.1;
  double threshold = 0.8;
  std::size_t queue_size = 512;
  double lambda_pro = 1.0;
  double lambda_lgc = 1.0;
  LossTerms terms{};
  bool label_correction = true;  // only effective with the pro term
  std::vector<Index> hidden = {128};
  Index feature_dim = 16;
  AugmentConfig augment{};
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Non-fatal schedule oddities, e.g. rectify_start > lgc_start.
  std::vector<std::string> warnings() const;
  double lr_at(int epoch) const;
  bool corrects_labels() const { return terms.pro && label_correction; }
};

struct TrainState {
  QueryNetwork query;
  EncoderParams key;
  PrototypeBank bank;
  LabelQueue queue;
  OptimizerState opt;
  int epoch = 0;  // completed epochs
  std::uint64_t step = 0;
  std::mt19937_64 rng;
};

/// Fresh networks from the config seed; the key encoder starts as a copy of
/// the query encoder and prototypes are class means of key features.
TrainState init_state(const TrainConfig& cfg, const Dataset& dataset);

struct StepResult {
  std::vector<LossBreakdown> losses;  // per sample, batch order
  std::vector<Index> labels;          // label used for each sample
  std::size_t changed = 0;
};

/// One optimizer step over `batch` (indices into `dataset`) during `epoch`.
StepResult train_step(TrainState& state, const Dataset& dataset,
                      std::span<const std::size_t> batch, const TrainConfig& cfg, int epoch);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double ce = 0.0;  // per-sample means
  double pro = 0.0;
  double ic = 0.0;
  double lgc = 0.0;
  double total = 0.0;
  std::size_t changed = 0;  // samples trained on a rectified label
  std::size_t steps = 0;
  // Filled by an observer when ground truth is available.
  bool has_correction = false;
  double agreement = 0.0;
  double noise1_recovery = 0.0;
  double noise2_recovery = 0.0;
};

/// Called after every epoch with the labels each sample was trained on.
using EpochObserver =
    std::function<void(const TrainState&, EpochRecord&, const std::vector<Index>& labels)>;

EpochRecord run_epoch(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                      std::vector<Index>* labels = nullptr);

/// Runs epochs state.epoch+1 .. until_epoch (cfg.epochs when negative).
std::vector<EpochRecord> run(TrainState& state, const Dataset& dataset, const TrainConfig& cfg,
                             int until_epoch = -1, const EpochObserver& observer = {});

struct RunResult {
  std::vector<EpochRecord> history;
  TrainState state;
};

RunResult run(const TrainConfig& cfg, const Dataset& dataset, const EpochObserver& observer = {});

/// Labels after training: rectification with the gate open on the clean
/// observations, or the raw labels when correction is disabled.
std::vector<Index> final_labels(const TrainState& state, const Dataset& dataset,
                                const TrainConfig& cfg);

}  // namespace pnl

#endif  // PNL_TRAINER_HPP_
