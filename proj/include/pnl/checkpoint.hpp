#ifndef PNL_CHECKPOINT_HPP_
#define PNL_CHECKPOINT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "pnl/trainer.hpp"

namespace pnl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary dump of a TrainState: both encoders, classifier, prototypes, queue,
/// optimizer buffers, counters and RNG state. Host byte order; doubles are
/// stored bit-for-bit so a round trip is exact.
void save_checkpoint(std::ostream& out, const TrainState& state);
TrainState load_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

/// Serialized bytes, convenient for bitwise state comparison.
std::string checkpoint_bytes(const TrainState& state);

}  // namespace pnl

#endif  // PNL_CHECKPOINT_HPP_
