#include "pnl/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pnl/checkpoint.hpp"
#include "pnl/text_io.hpp"

namespace pnl {

namespace fs = std::filesystem;

namespace {

enum SeedStream : std::uint64_t { kWorldSeed = 0, kNoiseSeed = 1, kProbeSeed = 2, kSplitSeed = 3 };

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << contents;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  fn(out);
}

EpochObserver correction_observer(const Dataset& dataset, const NoiseRecord& record) {
  return [&dataset, &record](const TrainState&, EpochRecord& rec, const std::vector<Index>& labels) {
    const CorrectionStats c = correction_accuracy(labels, dataset, &record);
    rec.has_correction = true;
    rec.agreement = c.agreement;
    rec.noise1_recovery = c.noise1_recovery;
    rec.noise2_recovery = c.noise2_recovery;
  };
}

void finish_row(RowResult& row, const TrainConfig& train, const Dataset& dataset,
                const PreparedData& data) {
  const TrainState& state = *row.state;
  row.retrieval = evaluate_retrieval(state.query.encoder, data.probe);
  row.correction = correction_accuracy(final_labels(state, dataset, train), dataset, &data.noisy.record);
  row.ok = true;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData data;
  data.world = generate_world(cfg.world, derive_seed(cfg.seed, kWorldSeed));
  data.noisy = inject_noise(data.world.tracklets, cfg.noise, derive_seed(cfg.seed, kNoiseSeed));
  data.dataset = filter_and_sample(data.noisy.tracklets, cfg.min_frames, cfg.stride);
  if (data.dataset.samples.empty()) {
    throw ConfigError("data.min_frames: every tracklet was filtered out");
  }
  data.probe = sample_probe_set(data.world, cfg.probe_per_identity, derive_seed(cfg.seed, kProbeSeed));
  return data;
}

RowResult train_and_evaluate(const std::string& id, const TrainConfig& train,
                             const Dataset& dataset, const PreparedData& data) {
  RowResult row;
  row.id = id;
  row.terms = train.terms.describe();
  row.label_correction = train.corrects_labels();
  try {
    TrainState state = init_state(train, dataset);
    return continue_and_evaluate(id, train, dataset, data, std::move(state));
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

RowResult continue_and_evaluate(const std::string& id, const TrainConfig& train,
                                const Dataset& dataset, const PreparedData& data, TrainState state) {
  RowResult row;
  row.id = id;
  row.terms = train.terms.describe();
  row.label_correction = train.corrects_labels();
  try {
    row.history = run(state, dataset, train, -1, correction_observer(dataset, data.noisy.record));
    row.state = std::move(state);
    finish_row(row, train, dataset, data);
  } catch (const Error& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

CorrectionStats raw_baseline(const PreparedData& data) {
  std::vector<Index> raw;
  raw.reserve(data.dataset.size());
  for (const auto& s : data.dataset.samples) raw.push_back(s.y_raw);
  return correction_accuracy(raw, data.dataset, &data.noisy.record);
}

void write_report(std::ostream& out, const std::vector<RowResult>& rows) {
  out << "config_id\tterms\tlc\tmAP\tcmc1\tagreement\tnoise1_recovery\tnoise2_recovery\tstatus\n";
  for (const auto& r : rows) {
    out << r.id << '\t' << r.terms << '\t' << (r.label_correction ? "on" : "off") << '\t';
    if (r.ok) {
      out << format_fixed(100.0 * r.retrieval.map, 4) << '\t' << format_fixed(100.0 * r.retrieval.cmc1, 4)
          << '\t' << format_fixed(100.0 * r.correction.agreement, 4) << '\t'
          << format_fixed(100.0 * r.correction.noise1_recovery, 4) << '\t'
          << format_fixed(100.0 * r.correction.noise2_recovery, 4) << "\tok\n";
    } else {
      std::string msg = r.error;
      for (auto& c : msg) {
        if (c == '\t' || c == '\n') c = ' ';
      }
      out << "-\t-\t-\t-\t-\tfailed: " << msg << '\n';
    }
  }
}

void write_metrics_log(std::ostream& out, const RowResult& row) {
  for (const auto& e : row.history) {
    nlohmann::ordered_json j;
    j["row"] = row.id;
    j["epoch"] = e.epoch;
    j["lr"] = e.lr;
    j["ce"] = e.ce;
    j["pro"] = e.pro;
    j["ic"] = e.ic;
    j["lgc"] = e.lgc;
    j["total"] = e.total;
    j["changed"] = e.changed;
    j["steps"] = e.steps;
    if (e.has_correction) {
      j["agreement"] = e.agreement;
      j["noise1_recovery"] = e.noise1_recovery;
      j["noise2_recovery"] = e.noise2_recovery;
    }
    out << j.dump() << '\n';
  }
}

std::string resolve_output_dir(const std::string& dir) {
  const fs::path p(dir);
  if (p.is_absolute()) return p.string();
  if (const char* root = std::getenv("PNL_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return (fs::path(root) / p).string();
  }
  return p.string();
}

void write_table_outputs(const std::string& output_dir, const std::string& config_text,
                         const std::vector<RowResult>& rows) {
  const fs::path out(output_dir);
  fs::create_directories(out);
  write_file(out / "config.txt", config_text);
  write_with(out / "report.tsv", [&](std::ostream& os) { write_report(os, rows); });
  write_with(out / "metrics.jsonl", [&](std::ostream& os) {
    for (const auto& r : rows) write_metrics_log(os, r);
  });
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::string& config_text,
                                 const std::string& output_dir) {
  ExperimentOutcome outcome;
  outcome.output_dir = resolve_output_dir(output_dir.empty() ? cfg.output_dir : output_dir);
  const fs::path out(outcome.output_dir);
  fs::create_directories(out);
  write_file(out / "config.txt", config_text);

  const PreparedData data = prepare_data(cfg);
  write_with(out / "dataset.tsv", [&](std::ostream& os) { write_dataset(os, data.dataset); });
  write_with(out / "noise_record.tsv", [&](std::ostream& os) { write_noise_record(os, data.noisy.record); });
  write_with(out / "identity_distribution.tsv", [&](std::ostream& os) {
    os << "images\tpercent_labels_below\n";
    for (const auto& p : identity_distribution(data.dataset)) {
      os << p.images << '\t' << format_fixed(p.percent, 6) << '\n';
    }
  });

  for (const auto& split : cfg.splits) {
    const std::string id = split.describe();
    const Dataset subset = make_split(data.dataset, split, derive_seed(cfg.seed, kSplitSeed));
    RowResult row;
    try {
      TrainState state = init_state(cfg.train, subset);
      if (cfg.checkpoint_every > 0) {
        while (state.epoch < cfg.train.epochs) {
          const int until = std::min<int>(cfg.train.epochs, state.epoch + static_cast<int>(cfg.checkpoint_every));
          auto part = run(state, subset, cfg.train, until,
                          correction_observer(subset, data.noisy.record));
          row.history.insert(row.history.end(), part.begin(), part.end());
          save_checkpoint((out / ("checkpoint_" + id + "_epoch" + std::to_string(state.epoch) + ".bin")).string(),
                          state);
        }
        row.id = id;
        row.terms = cfg.train.terms.describe();
        row.label_correction = cfg.train.corrects_labels();
        row.state = std::move(state);
        finish_row(row, cfg.train, subset, data);
      } else {
        row = continue_and_evaluate(id, cfg.train, subset, data, std::move(state));
      }
    } catch (const Error& e) {
      row.id = id;
      row.ok = false;
      row.error = e.what();
    }
    if (row.state) save_checkpoint((out / ("checkpoint_" + id + ".bin")).string(), *row.state);
    if (!row.ok) outcome.exit_code = 2;
    outcome.rows.push_back(std::move(row));
  }

  write_with(out / "report.tsv", [&](std::ostream& os) { write_report(os, outcome.rows); });
  write_with(out / "metrics.jsonl", [&](std::ostream& os) {
    for (const auto& r : outcome.rows) write_metrics_log(os, r);
  });
  return outcome;
}

ExperimentOutcome run_experiment(const std::string& config_path, const std::string& output_dir) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot read config file " + config_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return run_experiment(parse_config(text), text, output_dir);
}

std::vector<std::string> expand_rows(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    if (id == "all") {
      for (int r = 1; r <= 7; ++r) out.push_back(std::to_string(r));
    } else if (id == "lc") {
      for (const char* r : {"4-nolc", "4", "7-nolc", "7"}) out.emplace_back(r);
    } else {
      row_config(TrainConfig{}, id);  // validates the id
      out.push_back(id);
    }
  }
  return out;
}

TrainConfig row_config(const TrainConfig& base, const std::string& id) {
  std::string_view v = id;
  bool no_lc = false;
  constexpr std::string_view kSuffix = "-nolc";
  if (v.size() > kSuffix.size() && v.substr(v.size() - kSuffix.size()) == kSuffix) {
    no_lc = true;
    v = v.substr(0, v.size() - kSuffix.size());
  }
  int row = 0;
  try {
    row = parse_number<int>(v);
  } catch (const FormatError&) {
    throw ConfigError("unknown ablation row '" + id + "'");
  }
  TrainConfig cfg = base;
  cfg.terms = ablation_row(row);
  cfg.label_correction = !no_lc;
  return cfg;
}

std::vector<RowResult> run_ablation_suite(const ExperimentConfig& cfg,
                                          const std::vector<std::string>& rows,
                                          const PreparedData* data) {
  const auto ids = expand_rows(rows);
  std::optional<PreparedData> owned;
  if (data == nullptr) data = &owned.emplace(prepare_data(cfg));
  std::vector<RowResult> out;
  for (const auto& id : ids) {
    out.push_back(train_and_evaluate(id, row_config(cfg.train, id), data->dataset, *data));
  }
  return out;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "tau") return SweepParam::Tau;
  if (name == "T" || name == "threshold") return SweepParam::Threshold;
  if (name == "m" || name == "momentum") return SweepParam::Momentum;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected tau, T or m)");
}

std::vector<RowResult> run_sweep(const ExperimentConfig& cfg, SweepParam param,
                                 const std::vector<double>& values, const PreparedData* data) {
  std::optional<PreparedData> owned;
  if (data == nullptr) data = &owned.emplace(prepare_data(cfg));
  std::vector<RowResult> out;
  for (double v : values) {
    TrainConfig train = cfg.train;
    std::string id;
    switch (param) {
      case SweepParam::Tau:
        train.tau = v;
        id = "tau=";
        break;
      case SweepParam::Threshold:
        train.threshold = v;
        id = "T=";
        break;
      case SweepParam::Momentum:
        train.momentum = v;
        id = "m=";
        break;
    }
    id += format_double(v);
    out.push_back(train_and_evaluate(id, train, data->dataset, *data));
  }
  return out;
}

}  // namespace pnl
