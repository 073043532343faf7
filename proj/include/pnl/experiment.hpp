#ifndef PNL_EXPERIMENT_HPP_
#define PNL_EXPERIMENT_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pnl/config.hpp"

namespace pnl {

/// The simulated world pushed through noise injection and the
/// filter/sample pipeline, plus a clean probe gallery for retrieval.
struct PreparedData {
  World world;
  NoisyTracklets noisy;
  Dataset dataset;
  Observations probe;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// One trained-and-evaluated configuration.
struct RowResult {
  std::string id;
  std::string terms;
  bool label_correction = false;
  bool ok = false;
  std::string error;
  RetrievalMetrics retrieval;
  CorrectionStats correction;
  std::vector<EpochRecord> history;
  std::optional<TrainState> state;
};

/// Trains `train` on `dataset` and evaluates retrieval on the probe set and
/// label correction against the planted record. Library errors are caught and
/// reported in the row.
RowResult train_and_evaluate(const std::string& id, const TrainConfig& train,
                             const Dataset& dataset, const PreparedData& data);

/// Same as above, but resuming from `state` (already trained for some epochs).
RowResult continue_and_evaluate(const std::string& id, const TrainConfig& train,
                                const Dataset& dataset, const PreparedData& data, TrainState state);

/// Correction stats of the raw labels (the no-correction baseline).
CorrectionStats raw_baseline(const PreparedData& data);

/// Delimited report: one row per configuration with mAP, cmc1 and the
/// correction statistics.
void write_report(std::ostream& out, const std::vector<RowResult>& rows);
void write_metrics_log(std::ostream& out, const RowResult& row);

/// Output directory after applying the PNL_OUTPUT_ROOT override to relative
/// paths.
std::string resolve_output_dir(const std::string& dir);

struct ExperimentOutcome {
  int exit_code = 0;
  std::string output_dir;
  std::vector<RowResult> rows;
};

/// Full pipeline for one config: dataset dump, noise record, per-split
/// training with metrics log and checkpoints, and the final report.
/// `config_text` is echoed verbatim into the output directory.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::string& config_text,
                                 const std::string& output_dir);
ExperimentOutcome run_experiment(const std::string& config_path, const std::string& output_dir = "");

/// Row ids: "1".."7" (ablation rows), "<row>-nolc" (label correction off),
/// "all" (rows 1..7), "lc" (4-nolc, 4, 7-nolc, 7).
std::vector<std::string> expand_rows(const std::vector<std::string>& ids);
TrainConfig row_config(const TrainConfig& base, const std::string& id);

/// Every row shares the world, dataset and seed of `cfg`.
std::vector<RowResult> run_ablation_suite(const ExperimentConfig& cfg,
                                          const std::vector<std::string>& rows,
                                          const PreparedData* data = nullptr);

enum class SweepParam { Tau, Threshold, Momentum };
SweepParam parse_sweep_param(const std::string& name);

std::vector<RowResult> run_sweep(const ExperimentConfig& cfg, SweepParam param,
                                 const std::vector<double>& values,
                                 const PreparedData* data = nullptr);

/// Writes report, metrics log and echoed config for a set of rows.
void write_table_outputs(const std::string& output_dir, const std::string& config_text,
                         const std::vector<RowResult>& rows);

}  // namespace pnl

#endif  // PNL_EXPERIMENT_HPP_
