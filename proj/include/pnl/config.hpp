#ifndef PNL_CONFIG_HPP_
#define PNL_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pnl/eval.hpp"
#include "pnl/synthdata.hpp"
#include "pnl/trainer.hpp"

namespace pnl {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything needed to reproduce one experiment. Serialized as flat
/// `key = value` lines; `#` starts a comment. See README for the key list.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "pnl_out";
  WorldConfig world{};
  NoiseSpec noise{};
  Index min_frames = 200;
  Index stride = 20;
  TrainConfig train{};
  Index probe_per_identity = 40;
  std::vector<SplitSpec> splits{SplitSpec{}};
  Index checkpoint_every = 0;  // epochs between intermediate checkpoints; 0 disables

  void validate() const;
};

/// Throws ConfigError with the offending key for unknown keys, bad values and
/// schema mismatches.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string to_text(const ExperimentConfig& cfg);

LossTerms parse_terms(std::string_view s);
SplitSpec parse_split(std::string_view s);

/// Independent seed for one consumer of the experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pnl

#endif  // PNL_CONFIG_HPP_
