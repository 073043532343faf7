#include "pnl/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pnl/text_io.hpp"

namespace pnl {

namespace {

struct Field {
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

template <typename T>
Field number(T& ref) {
  return {[&ref](std::string_view v) { ref = parse_number<T>(v); },
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(ref);
            } else {
              return std::to_string(ref);
            }
          }};
}

Field boolean(bool& ref) {
  return {[&ref](std::string_view v) {
            if (v == "true" || v == "1") {
              ref = true;
            } else if (v == "false" || v == "0") {
              ref = false;
            } else {
              throw FormatError("expected true/false, got '" + std::string(v) + "'");
            }
          },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field text(std::string& ref) {
  return {[&ref](std::string_view v) { ref = std::string(v); }, [&ref] { return ref; }};
}

Field widths(std::vector<Index>& ref) {
  return {[&ref](std::string_view v) {
            ref.clear();
            if (v.empty() || v == "none") return;
            for (auto f : split_fields(v, ',')) ref.push_back(parse_number<Index>(trim(f)));
          },
          [&ref] {
            if (ref.empty()) return std::string("none");
            std::string s;
            for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? "," : "") + std::to_string(ref[i]);
            return s;
          }};
}

Field terms(LossTerms& ref) {
  return {[&ref](std::string_view v) { ref = parse_terms(v); }, [&ref] { return ref.describe(); }};
}

Field splits(std::vector<SplitSpec>& ref) {
  return {[&ref](std::string_view v) {
            const SplitRounding rounding = ref.empty() ? SplitRounding::Ceil : ref.front().rounding;
            ref.clear();
            for (auto f : split_fields(v, ',')) {
              SplitSpec s = parse_split(trim(f));
              s.rounding = rounding;
              ref.push_back(s);
            }
          },
          [&ref] {
            std::string s;
            for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? "," : "") + ref[i].describe();
            return s;
          }};
}

Field rounding(std::vector<SplitSpec>& ref) {
  return {[&ref](std::string_view v) {
            SplitRounding r;
            if (v == "ceil") {
              r = SplitRounding::Ceil;
            } else if (v == "floor") {
              r = SplitRounding::Floor;
            } else {
              throw FormatError("expected ceil or floor");
            }
            for (auto& s : ref) s.rounding = r;
          },
          [&ref] {
            return std::string(!ref.empty() && ref.front().rounding == SplitRounding::Floor ? "floor"
                                                                                             : "ceil");
          }};
}

// Ordered so that `splits` is applied before `split.rounding`.
std::vector<std::pair<std::string, Field>> fields(ExperimentConfig& c) {
  return {
      {"seed", number(c.seed)},
      {"output_dir", text(c.output_dir)},
      {"world.identities", number(c.world.identities)},
      {"world.probe_identities", number(c.world.probe_identities)},
      {"world.ambient_dim", number(c.world.ambient_dim)},
      {"world.centroid_scale", number(c.world.centroid_scale)},
      {"world.margin", number(c.world.margin)},
      {"world.spread", number(c.world.spread)},
      {"world.drift_scale", number(c.world.drift_scale)},
      {"world.drift_correlation", number(c.world.drift_correlation)},
      {"world.tracklet_offset", number(c.world.tracklet_offset)},
      {"world.frames_min", number(c.world.frames_min)},
      {"world.frames_max", number(c.world.frames_max)},
      {"noise.split_rate", number(c.noise.split_rate)},
      {"noise.merge_rate", number(c.noise.merge_rate)},
      {"noise.split_fraction_min", number(c.noise.split_fraction_min)},
      {"noise.split_fraction_max", number(c.noise.split_fraction_max)},
      {"noise.merge_fraction_min", number(c.noise.merge_fraction_min)},
      {"noise.merge_fraction_max", number(c.noise.merge_fraction_max)},
      {"data.min_frames", number(c.min_frames)},
      {"data.stride", number(c.stride)},
      {"train.epochs", number(c.train.epochs)},
      {"train.rectify_start", number(c.train.rectify_start)},
      {"train.lgc_start", number(c.train.lgc_start)},
      {"train.batch_size", number(c.train.batch_size)},
      {"train.lr", number(c.train.lr)},
      {"train.lr_decay", number(c.train.lr_decay)},
      {"train.lr_decay_interval", number(c.train.lr_decay_interval)},
      {"train.sgd_momentum", number(c.train.sgd_momentum)},
      {"train.weight_decay", number(c.train.weight_decay)},
      {"train.momentum", number(c.train.momentum)},
      {"train.tau", number(c.train.tau)},
      {"train.threshold", number(c.train.threshold)},
      {"train.queue_size", number(c.train.queue_size)},
      {"train.lambda_pro", number(c.train.lambda_pro)},
      {"train.lambda_lgc", number(c.train.lambda_lgc)},
      {"train.terms", terms(c.train.terms)},
      {"train.label_correction", boolean(c.train.label_correction)},
      {"train.hidden", widths(c.train.hidden)},
      {"train.feature_dim", number(c.train.feature_dim)},
      {"augment.noise_scale", number(c.train.augment.noise_scale)},
      {"augment.dropout", number(c.train.augment.dropout)},
      {"eval.probe_per_identity", number(c.probe_per_identity)},
      {"eval.checkpoint_every", number(c.checkpoint_every)},
      {"splits", splits(c.splits)},
      {"split.rounding", rounding(c.splits)},
  };
}

}  // namespace

void ExperimentConfig::validate() const {
  world.validate();
  noise.validate();
  if (min_frames < 0) throw ConfigError("data.min_frames: must be >= 0");
  if (stride < 1) throw ConfigError("data.stride: must be >= 1");
  train.validate();
  if (probe_per_identity < 2) throw ConfigError("eval.probe_per_identity: must be >= 2");
  if (checkpoint_every < 0) throw ConfigError("eval.checkpoint_every: must be >= 0");
  if (splits.empty()) throw ConfigError("splits: at least one split required");
  for (const auto& s : splits) {
    if (!(s.fraction > 0.0 && s.fraction <= 1.0)) throw ConfigError("splits: fraction must be in (0,1]");
  }
}

LossTerms parse_terms(std::string_view s) {
  LossTerms t{false, false, false, false};
  for (auto part : split_fields(s, '+')) {
    part = trim(part);
    if (part == "ce") {
      t.ce = true;
    } else if (part == "ic") {
      t.ic = true;
    } else if (part == "pro") {
      t.pro = true;
    } else if (part == "lgc") {
      t.lgc = true;
    } else {
      throw FormatError("unknown loss term '" + std::string(part) + "'");
    }
  }
  return t;
}

SplitSpec parse_split(std::string_view s) {
  const auto at = s.find('@');
  if (at == std::string_view::npos) throw FormatError("split must look like small@0.2 or fewshot@0.5");
  SplitSpec spec;
  const auto mode = s.substr(0, at);
  if (mode == "small") {
    spec.mode = SplitMode::SmallScale;
  } else if (mode == "fewshot") {
    spec.mode = SplitMode::FewShot;
  } else {
    throw FormatError("unknown split mode '" + std::string(mode) + "'");
  }
  spec.fraction = parse_number<double>(s.substr(at + 1));
  return spec;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool saw_version = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key == "schema_version") {
      if (value != std::to_string(kConfigSchemaVersion)) {
        throw ConfigError("schema_version: unsupported version '" + value + "'");
      }
      saw_version = true;
      continue;
    }
    if (!values.emplace(key, value).second) throw ConfigError(key + ": given more than once");
  }
  if (!saw_version) throw ConfigError("schema_version: missing");

  auto table = fields(cfg);
  for (auto& [key, field] : table) {
    const auto it = values.find(key);
    if (it == values.end()) continue;
    try {
      field.set(it->second);
    } catch (const Error& e) {
      throw ConfigError(key + ": " + e.what());
    }
    values.erase(it);
  }
  if (!values.empty()) throw ConfigError(values.begin()->first + ": unknown key");
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::string out = "schema_version = " + std::to_string(kConfigSchemaVersion) + "\n";
  for (auto& [key, field] : fields(copy)) out += key + " = " + field.get() + "\n";
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace pnl
