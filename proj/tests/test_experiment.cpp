#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnl/experiment.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(schema_version = 1
seed = 5
world.identities = 4
world.probe_identities = 3
world.ambient_dim = 6
world.frames_min = 400
world.frames_max = 500
data.min_frames = 50
data.stride = 10
train.epochs = 3
train.rectify_start = 1
train.lgc_start = 2
train.batch_size = 32
train.queue_size = 64
train.hidden = 8
train.feature_dim = 4
eval.probe_per_identity = 5
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pnl_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parses, echoes and round trips") {
  const auto cfg = pnl::parse_config(kSmall);
  CHECK(cfg.seed == 5);
  CHECK(cfg.train.seed == 5);
  CHECK(cfg.world.identities == 4);
  CHECK(cfg.train.hidden == std::vector<pnl::Index>{8});
  CHECK(cfg.train.terms == pnl::ablation_row(7));
  const auto again = pnl::parse_config(pnl::to_text(cfg));
  CHECK(pnl::to_text(again) == pnl::to_text(cfg));

  const auto multi = pnl::parse_config("schema_version = 1\nsplits = small@0.5, fewshot@0.25\nsplit.rounding = floor\n# c\n");
  REQUIRE(multi.splits.size() == 2);
  CHECK(multi.splits[1].mode == pnl::SplitMode::FewShot);
  CHECK(multi.splits[0].rounding == pnl::SplitRounding::Floor);
  CHECK(pnl::parse_config("schema_version = 1\ntrain.terms = ce+ic\n").train.terms == pnl::ablation_row(3));
}

TEST_CASE("config errors name the key") {
  CHECK_THROWS_WITH_AS(pnl::parse_config("seed = 1\n"), doctest::Contains("schema_version"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 2\n"), doctest::Contains("schema_version"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\ntrain.tau = 0\n"), doctest::Contains("train.tau"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\ntrain.tau = -0.1\n"), doctest::Contains("train.tau"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\ntrain.tau = abc\n"), doctest::Contains("train.tau"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\nbogus = 1\n"), doctest::Contains("bogus"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\nseed = 1\nseed = 2\n"), doctest::Contains("seed"), pnl::ConfigError);
  CHECK_THROWS_WITH_AS(pnl::parse_config("schema_version = 1\ntrain.terms = ce+xx\n"), doctest::Contains("train.terms"), pnl::ConfigError);
  CHECK_THROWS_AS(pnl::parse_config("schema_version = 1\njunk line\n"), pnl::ConfigError);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(pnl::derive_seed(7, 0) != pnl::derive_seed(7, 1));
  CHECK(pnl::derive_seed(7, 0) != pnl::derive_seed(8, 0));
  CHECK(pnl::derive_seed(7, 2) == pnl::derive_seed(7, 2));
}

TEST_CASE("row ids expand and validate") {
  CHECK(pnl::expand_rows({"all"}).size() == 7);
  CHECK(pnl::expand_rows({"lc"}) == std::vector<std::string>{"4-nolc", "4", "7-nolc", "7"});
  CHECK(pnl::expand_rows({"1", "7-nolc"}) == std::vector<std::string>{"1", "7-nolc"});
  CHECK_THROWS_AS(pnl::expand_rows({"9"}), pnl::ConfigError);
  CHECK_THROWS_AS(pnl::expand_rows({"x"}), pnl::ConfigError);
  const auto off = pnl::row_config(pnl::TrainConfig{}, "7-nolc");
  CHECK(off.terms == pnl::ablation_row(7));
  CHECK_FALSE(off.label_correction);
  CHECK_FALSE(pnl::row_config(pnl::TrainConfig{}, "5").corrects_labels());
  CHECK(pnl::parse_sweep_param("T") == pnl::SweepParam::Threshold);
  CHECK_THROWS_AS(pnl::parse_sweep_param("lr"), pnl::ConfigError);
}

TEST_CASE("output root override applies to relative paths") {
  ::setenv("PNL_OUTPUT_ROOT", "/tmp/root", 1);
  CHECK(pnl::resolve_output_dir("run") == "/tmp/root/run");
  CHECK(pnl::resolve_output_dir("/abs/run") == "/abs/run");
  ::unsetenv("PNL_OUTPUT_ROOT");
  CHECK(pnl::resolve_output_dir("run") == "run");
}

TEST_CASE("run_experiment writes every artifact and is reproducible") {
  const auto cfg = pnl::parse_config(kSmall);
  const auto a = scratch("exp_a"), b = scratch("exp_b");
  const auto ra = pnl::run_experiment(cfg, kSmall, a.string());
  const auto rb = pnl::run_experiment(cfg, kSmall, b.string());
  CHECK(ra.exit_code == 0);
  for (const char* f : {"config.txt", "dataset.tsv", "noise_record.tsv", "identity_distribution.tsv",
                        "checkpoint_small@1.bin", "report.tsv", "metrics.jsonl"}) {
    CHECK_MESSAGE(fs::exists(a / f), f);
  }
  CHECK(slurp(a / "config.txt") == kSmall);
  CHECK(slurp(a / "report.tsv") == slurp(b / "report.tsv"));
  CHECK(slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl"));
  CHECK(slurp(a / "checkpoint_small@1.bin") == slurp(b / "checkpoint_small@1.bin"));

  // re-running from the echoed config reproduces the report
  const auto c = scratch("exp_c");
  pnl::run_experiment((a / "config.txt").string(), c.string());
  CHECK(slurp(c / "report.tsv") == slurp(a / "report.tsv"));

  std::ifstream log(a / "metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 3);
  for (const auto& p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("intermediate checkpoints resume to the same result") {
  auto cfg = pnl::parse_config(kSmall);
  cfg.checkpoint_every = 1;
  const auto a = scratch("ckpt_every");
  const auto with = pnl::run_experiment(cfg, kSmall, a.string());
  cfg.checkpoint_every = 0;
  const auto b = scratch("ckpt_none");
  pnl::run_experiment(cfg, kSmall, b.string());
  CHECK(fs::exists(a / "checkpoint_small@1_epoch1.bin"));
  CHECK(fs::exists(a / "checkpoint_small@1_epoch2.bin"));
  CHECK(slurp(a / "report.tsv") == slurp(b / "report.tsv"));
  CHECK(slurp(a / "checkpoint_small@1.bin") == slurp(b / "checkpoint_small@1.bin"));
  CHECK(with.rows.front().history.size() == 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("ablation rows share one world") {
  const auto cfg = pnl::parse_config(kSmall);
  const auto data = pnl::prepare_data(cfg);
  const auto rows = pnl::run_ablation_suite(cfg, {"1", "7"}, &data);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].terms == "ce");
  CHECK(rows[1].terms == "ce+pro+lgc");
  for (const auto& r : rows) {
    CHECK(r.ok);
    CHECK(r.history.size() == 3);
  }
  const auto raw = pnl::raw_baseline(data);
  CHECK(rows[0].correction.agreement == raw.agreement);

  std::ostringstream report;
  pnl::write_report(report, rows);
  std::istringstream lines(report.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "config_id\tterms\tlc\tmAP\tcmc1\tagreement\tnoise1_recovery\tnoise2_recovery\tstatus");
}

TEST_CASE("single-value sweep equals the plain experiment") {
  const auto cfg = pnl::parse_config(kSmall);
  const auto data = pnl::prepare_data(cfg);
  const auto sweep = pnl::run_sweep(cfg, pnl::SweepParam::Tau, {cfg.train.tau}, &data);
  const auto dir = scratch("sweep_single");
  const auto plain = pnl::run_experiment(cfg, kSmall, dir.string());
  REQUIRE(sweep.size() == 1);
  CHECK(sweep[0].id == "tau=0.1");
  CHECK(sweep[0].retrieval.map == plain.rows[0].retrieval.map);
  CHECK(sweep[0].retrieval.cmc1 == plain.rows[0].retrieval.cmc1);
  CHECK(sweep[0].correction.agreement == plain.rows[0].correction.agreement);
  fs::remove_all(dir);
}

TEST_CASE("failed rows are reported, not dropped") {
  auto cfg = pnl::parse_config(kSmall);
  const auto data = pnl::prepare_data(cfg);
  const auto rows = pnl::run_sweep(cfg, pnl::SweepParam::Threshold, {0.8, 1.5}, &data);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK_FALSE(rows[1].ok);
  CHECK(rows[1].error.find("train.threshold") != std::string::npos);
  std::ostringstream report;
  pnl::write_report(report, rows);
  CHECK(report.str().find("failed: ") != std::string::npos);
}
