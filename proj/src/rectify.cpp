#include "pnl/rectify.hpp"

#include <cmath>
#include <string>

namespace pnl {

namespace {

void check_simplex(const Vec& v, const char* name) {
  constexpr double kTol = 1e-9;
  if (!v.allFinite() || v.minCoeff() < -kTol || std::abs(v.sum() - 1.0) > kTol) {
    throw ContractViolation(std::string("rectify: ") + name + " is not on the simplex");
  }
}

}  // namespace

Rectified rectify(const Vec& p, const Vec& s, Index raw_label, const RectifyConfig& cfg,
                  int epoch) {
  if (p.size() != s.size()) throw ShapeError("rectify: p and s differ in length");
  if (raw_label < 0 || raw_label >= p.size()) {
    throw LabelRangeError("rectify: raw label " + std::to_string(raw_label) + " out of range");
  }
  check_simplex(p, "p");
  check_simplex(s, "s");

  Rectified out{raw_label, 0.5 * (p + s), false};
  if (epoch > cfg.start_epoch) {
    const Index best = argmax(out.soft);
    if (out.soft(best) > cfg.threshold) out.label = best;
  }
  out.changed = out.label != raw_label;
  return out;
}

}  // namespace pnl
