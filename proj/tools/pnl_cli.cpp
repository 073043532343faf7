// Experiment runner: gen | train | eval | ablate | sweep | plot.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pnl/checkpoint.hpp"
#include "pnl/experiment.hpp"
#include "pnl/text_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Loaded {
  pnl::ExperimentConfig cfg;
  std::string text;  // exactly what gets echoed into the output directory
  std::string out_dir;
};

Loaded load(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw pnl::ConfigError("cannot read config file " + c.config_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Loaded l{pnl::parse_config(buf.str()), buf.str(), {}};
  if (c.seed) {
    l.cfg.seed = *c.seed;
    l.cfg.train.seed = *c.seed;
    l.text = pnl::to_text(l.cfg);
  }
  l.out_dir = pnl::resolve_output_dir(c.out.empty() ? l.cfg.output_dir : c.out);
  return l;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--out", c.out, "output directory (relative paths honour PNL_OUTPUT_ROOT)");
}

void print_file(const fs::path& p) {
  std::ifstream in(p);
  std::cout << in.rdbuf();
}

int cmd_gen(const Common& c) {
  const Loaded l = load(c);
  const pnl::PreparedData data = pnl::prepare_data(l.cfg);
  fs::create_directories(l.out_dir);
  const fs::path out(l.out_dir);
  std::ofstream(out / "config.txt", std::ios::binary) << l.text;
  {
    std::ofstream os(out / "dataset.tsv", std::ios::binary);
    pnl::write_dataset(os, data.dataset);
  }
  {
    std::ofstream os(out / "noise_record.tsv", std::ios::binary);
    pnl::write_noise_record(os, data.noisy.record);
  }
  const auto base = pnl::raw_baseline(data);
  std::cout << "samples " << data.dataset.size() << ", labels " << data.dataset.num_classes
            << ", identities " << data.world.identities.size() << ", splits "
            << data.noisy.record.splits.size() << ", merges " << data.noisy.record.merges.size()
            << ", raw agreement " << pnl::format_fixed(100.0 * base.agreement, 2) << "%\n";
  return 0;
}

int cmd_train(const Common& c) {
  const Loaded l = load(c);
  for (const auto& w : l.cfg.train.warnings()) std::cerr << "warning: " << w << "\n";
  const auto outcome = pnl::run_experiment(l.cfg, l.text, l.out_dir);
  print_file(fs::path(outcome.output_dir) / "report.tsv");
  for (const auto& r : outcome.rows) {
    if (!r.ok) std::cerr << "error: row " << r.id << ": " << r.error << "\n";
  }
  return outcome.exit_code;
}

int cmd_eval(const Common& c) {
  const Loaded l = load(c);
  const pnl::PreparedData data = pnl::prepare_data(l.cfg);
  std::vector<pnl::RowResult> rows;
  for (const auto& split : l.cfg.splits) {
    const std::string id = split.describe();
    const fs::path ckpt = fs::path(l.out_dir) / ("checkpoint_" + id + ".bin");
    const pnl::Dataset subset =
        pnl::make_split(data.dataset, split, pnl::derive_seed(l.cfg.seed, 3));
    pnl::RowResult row;
    row.id = id;
    row.terms = l.cfg.train.terms.describe();
    row.label_correction = l.cfg.train.corrects_labels();
    try {
      row.state = pnl::load_checkpoint(ckpt.string());
      row.retrieval = pnl::evaluate_retrieval(row.state->query.encoder, data.probe);
      row.correction = pnl::correction_accuracy(pnl::final_labels(*row.state, subset, l.cfg.train),
                                                subset, &data.noisy.record);
      row.ok = true;
    } catch (const pnl::Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::ofstream os(fs::path(l.out_dir) / "report_eval.tsv", std::ios::binary);
  pnl::write_report(os, rows);
  pnl::write_report(std::cout, rows);
  for (const auto& r : rows) {
    if (!r.ok) return 2;
  }
  return 0;
}

int finish_table(const Loaded& l, const std::vector<pnl::RowResult>& rows) {
  pnl::write_table_outputs(l.out_dir, l.text, rows);
  pnl::write_report(std::cout, rows);
  for (const auto& r : rows) {
    if (!r.ok) return 2;
  }
  return 0;
}

int cmd_ablate(const Common& c, const std::vector<std::string>& row_ids) {
  const Loaded l = load(c);
  return finish_table(l, pnl::run_ablation_suite(l.cfg, row_ids));
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values) {
  const Loaded l = load(c);
  return finish_table(l, pnl::run_sweep(l.cfg, pnl::parse_sweep_param(param), values));
}

int cmd_plot(const Common& c) {
  const Loaded l = load(c);
  const pnl::PreparedData data = pnl::prepare_data(l.cfg);
  const fs::path out(l.out_dir);
  fs::create_directories(out);
  {
    std::ofstream os(out / "identity_distribution.tsv", std::ios::binary);
    os << "images\tpercent_labels_below\n";
    for (const auto& p : pnl::identity_distribution(data.dataset)) {
      os << p.images << '\t' << pnl::format_fixed(p.percent, 6) << '\n';
    }
  }
  const fs::path log = out / "metrics.jsonl";
  if (fs::exists(log)) {
    std::ifstream in(log);
    std::ofstream os(out / "loss_curves.tsv", std::ios::binary);
    os << "row\tepoch\tce\tpro\tic\tlgc\ttotal\tchanged\n";
    std::string line;
    while (std::getline(in, line)) {
      if (pnl::trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      os << j.at("row").get<std::string>() << '\t' << j.at("epoch").get<int>();
      for (const char* k : {"ce", "pro", "ic", "lgc", "total"}) {
        os << '\t' << pnl::format_double(j.at(k).get<double>());
      }
      os << '\t' << j.at("changed").get<long>() << '\n';
    }
    std::cout << "wrote " << (out / "identity_distribution.tsv").string() << " and "
              << (out / "loss_curves.tsv").string() << "\n";
  } else {
    std::cout << "wrote " << (out / "identity_distribution.tsv").string()
              << " (no metrics.jsonl for loss curves)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label contrastive pre-training on simulated tracklets"};
  app.require_subcommand(1);

  Common gen_opts, train_opts, eval_opts, ablate_opts, sweep_opts, plot_opts;
  std::vector<std::string> rows{"all"};
  std::string sweep_param;
  std::vector<double> sweep_values;

  auto* gen = app.add_subcommand("gen", "generate the noisy dataset and dump it");
  add_common(gen, gen_opts);
  auto* train = app.add_subcommand("train", "generate, train every split, evaluate, write artifacts");
  add_common(train, train_opts);
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints in the output directory");
  add_common(eval, eval_opts);
  auto* ablate = app.add_subcommand("ablate", "train ablation rows on one shared world");
  add_common(ablate, ablate_opts);
  ablate->add_option("--row", rows, "row ids: 1..7, <row>-nolc, all, lc")->delimiter(',');
  auto* sweep = app.add_subcommand("sweep", "sweep one hyper-parameter on one shared world");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "tau | T | m")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required()->delimiter(',');
  auto* plot = app.add_subcommand("plot", "write label-size curve and loss curves as TSV");
  add_common(plot, plot_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(gen_opts);
    if (*train) return cmd_train(train_opts);
    if (*eval) return cmd_eval(eval_opts);
    if (*ablate) return cmd_ablate(ablate_opts, rows);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_param, sweep_values);
    if (*plot) return cmd_plot(plot_opts);
  } catch (const pnl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;
  } catch (const pnl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
