#include <doctest.h>

#include "pnl/rectify.hpp"
#include "support.hpp"

using namespace testing;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

const pnl::RectifyConfig kDefault{0.8, 3};

}  // namespace

TEST_CASE("rectify examples") {
  const Vec hot = Vec::Unit(4, 2);
  for (Index raw = 0; raw < 4; ++raw) {
    const auto r = pnl::rectify(hot, hot, raw, kDefault, 4);
    CHECK(r.label == 2);
    CHECK(r.changed == (raw != 2));
  }

  // max l = 0.75 < T
  const auto low = pnl::rectify(v2(0.8, 0.2), v2(0.7, 0.3), 1, kDefault, 10);
  CHECK(low.label == 1);
  CHECK_FALSE(low.changed);

  for (int epoch = 0; epoch <= 3; ++epoch) CHECK(pnl::rectify(hot, hot, 0, kDefault, epoch).label == 0);

  const auto keep = pnl::rectify(v2(0.9, 0.1), v2(0.5, 0.5), 1, kDefault, 5);
  CHECK(keep.soft(0) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(keep.soft(1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(keep.label == 1);
  const auto sw = pnl::rectify(v2(0.9, 0.1), v2(0.5, 0.5), 1, {0.6, 3}, 5);
  CHECK(sw.label == 0);
  CHECK(sw.changed);
}

TEST_CASE("rectify truth table over threshold and gate") {
  const Vec p = v2(0.95, 0.05), s = v2(0.85, 0.15);  // l = (0.9, 0.1)
  struct Row {
    double threshold;
    int epoch;
    Index expect;
  };
  const Row rows[] = {{0.8, 4, 0}, {0.8, 3, 1}, {0.95, 4, 1}, {0.95, 3, 1}};
  for (const auto& r : rows) CHECK(pnl::rectify(p, s, 1, {r.threshold, 3}, r.epoch).label == r.expect);

  // max l exactly at T keeps the raw label
  const auto tie = pnl::rectify(v2(0.75, 0.25), v2(0.75, 0.25), 1, {0.75, 0}, 1);
  CHECK(tie.soft(0) == 0.75);
  CHECK(tie.label == 1);
}

TEST_CASE("rectify breaks argmax ties toward the lower class") {
  Vec p(3), s(3);
  p << 0.0, 0.5, 0.5;
  s << 0.0, 0.5, 0.5;
  CHECK(pnl::rectify(p, s, 0, {0.4, 0}, 1).label == 1);
}

TEST_CASE("rectify properties on random simplex points") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const Index k = uniform_int(2, 6, rng);
    const Vec p = pnl::softmax_temp(gaussian_vec(k, rng, 3.0), 1.0);
    const Vec s = pnl::softmax_temp(gaussian_vec(k, rng, 3.0), 1.0);
    const Index raw = uniform_int(0, static_cast<int>(k) - 1, rng);
    const auto r = pnl::rectify(p, s, raw, {0.5, 0}, 1);
    CHECK(std::abs(r.soft.sum() - 1.0) < 1e-12);
    CHECK((r.soft.array() >= 0).all());
    const auto again = pnl::rectify(p, s, raw, {0.5, 0}, 1);
    CHECK(again.label == r.label);
    CHECK((again.soft.array() == r.soft.array()).all());

    CHECK(pnl::rectify(p, s, raw, {0.999999999, 0}, 1).label ==
          (r.soft.maxCoeff() > 0.999999999 ? pnl::argmax(r.soft) : raw));
    CHECK(pnl::rectify(p, s, raw, {1e-12, 0}, 1).label == pnl::argmax(r.soft));
  }
}

TEST_CASE("rectify rejects off-simplex inputs") {
  CHECK_THROWS_AS(pnl::rectify(v2(0.6, 0.6), v2(0.5, 0.5), 0, kDefault, 5), pnl::ContractViolation);
  CHECK_THROWS_AS(pnl::rectify(v2(1.1, -0.1), v2(0.5, 0.5), 0, kDefault, 5), pnl::ContractViolation);
  CHECK_NOTHROW(pnl::rectify(v2(0.5 + 1e-10, 0.5), v2(0.5, 0.5), 0, kDefault, 5));
  CHECK_THROWS_AS(pnl::rectify(v2(0.5, 0.5), v2(0.5, 0.5), 2, kDefault, 5), pnl::LabelRangeError);
}
