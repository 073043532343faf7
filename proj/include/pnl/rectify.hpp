#ifndef PNL_RECTIFY_HPP_
#define PNL_RECTIFY_HPP_

#include "pnl/numerics.hpp"

namespace pnl {

struct RectifyConfig {
  double threshold = 0.8;  // T, strict: a label switches only when max l > T
  int start_epoch = 3;     // rectification active when epoch > start_epoch
};

struct Rectified {
  Index label;
  Vec soft;  // (p + s) / 2
  bool changed;
};

/// Combines classifier probabilities `p` and prototype scores `s` into a soft
/// label and returns its argmax when confident enough, otherwise `raw_label`.
/// Ties in the argmax go to the lowest class index.
Rectified rectify(const Vec& p, const Vec& s, Index raw_label, const RectifyConfig& cfg, int epoch);

}  // namespace pnl

#endif  // PNL_RECTIFY_HPP_
