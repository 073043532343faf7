#include <doctest.h>

#include <random>

#include "pnl/numerics.hpp"

using pnl::Vec;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<pnl::Index>(xs.size()));
  pnl::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("l2_normalize examples") {
  Vec a = pnl::l2_normalize(vec({3, 4}));
  CHECK(a(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a(1) == doctest::Approx(0.8).epsilon(1e-15));

  Vec b = pnl::l2_normalize(vec({1, 0, 0}));
  CHECK(b == vec({1, 0, 0}));

  Vec c = pnl::l2_normalize(vec({2, 2}));
  CHECK(std::abs(c(0) - 0.70710678118654752) < 1e-15);
  CHECK(std::abs(c(1) - 0.70710678118654752) < 1e-15);

  CHECK_THROWS_AS(pnl::l2_normalize(vec({0, 0})), pnl::DegenerateInput);
  CHECK_THROWS_AS(pnl::l2_normalize(vec({1, NAN})), pnl::DegenerateInput);
}

TEST_CASE("l2_normalize is unit norm and bitwise idempotent") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Vec v(1 + trial % 9);
    for (auto& x : v) x = g(rng);
    const Vec once = pnl::l2_normalize(v);
    CHECK(std::abs(once.norm() - 1.0) < 1e-12);
    const Vec twice = pnl::l2_normalize(once);
    REQUIRE(once.size() == twice.size());
    CHECK((once.array() == twice.array()).all());
    // direction preserved
    CHECK((v / v.norm() - once).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("softmax_temp examples") {
  Vec u = pnl::softmax_temp(vec({0, 0, 0}), 0.1);
  for (double x : u) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Vec s = pnl::softmax_temp(vec({1, 0}), 1.0);
  const double e = std::exp(1.0);
  CHECK(std::abs(s(0) - e / (e + 1)) < 1e-15);
  CHECK(std::abs(s(1) - 1 / (e + 1)) < 1e-15);
  CHECK(std::abs(s(0) - 0.7310585786300049) < 1e-15);

  Vec t = pnl::softmax_temp(vec({1, 0}), 0.1);
  CHECK(std::abs(t(0) - 0.9999546021312976) < 1e-15);
  CHECK(std::abs(t(1) - 4.5397868702434395e-05) < 1e-18);

  CHECK_THROWS_AS(pnl::softmax_temp(vec({1, 0}), 0.0), pnl::InvalidHyperparameter);
  CHECK_THROWS_AS(pnl::softmax_temp(vec({1, 0}), -1.0), pnl::InvalidHyperparameter);
  CHECK_THROWS_AS(pnl::softmax_temp(vec({1, INFINITY}), 1.0), pnl::DegenerateInput);
  CHECK_THROWS_AS(pnl::softmax_temp(Vec(), 1.0), pnl::DegenerateInput);
}

TEST_CASE("softmax_temp sums to one and ignores shifts") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 5.0);
  std::uniform_real_distribution<double> logtau(-3.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Vec z(1 + trial % 12);
    for (auto& x : z) x = g(rng);
    const double tau = std::pow(10.0, logtau(rng));
    const Vec p = pnl::softmax_temp(z, tau);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK((p.array() >= 0.0).all());
    const double c = g(rng) * 100.0;
    const Vec shifted = pnl::softmax_temp(Vec(z.array() + c), tau);
    CHECK((p - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax_temp survives large logits") {
  Vec p = pnl::softmax_temp(vec({1000, 999, -1000}), 0.1);
  CHECK(p.allFinite());
  CHECK(std::abs(p.sum() - 1.0) < 1e-12);
}

TEST_CASE("log_sum_exp matches direct sum on moderate input") {
  Vec z = vec({0.5, -1.0, 2.0});
  CHECK(pnl::log_sum_exp(z) == doctest::Approx(std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0))).epsilon(1e-15));
  CHECK(std::isinf(pnl::log_sum_exp(Vec())));
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(pnl::argmax(vec({0.2, 0.5, 0.5})) == 1);
  CHECK(pnl::argmax(vec({1, 1, 1})) == 0);
  CHECK(pnl::argmax(vec({-3, -1, -2})) == 1);
}

TEST_CASE("finite_diff_grad examples") {
  std::function<double(const Vec&)> sq = [](const Vec& x) { return x(0) * x(0); };
  Vec g = pnl::finite_diff_grad(sq, vec({3}), 1e-4);
  CHECK(std::abs(g(0) - 6.0) < 1e-7);

  std::function<double(const Vec&)> xy = [](const Vec& x) { return x(0) * x(1); };
  Vec h = pnl::finite_diff_grad(xy, vec({2, 5}), 1e-4);
  CHECK(std::abs(h(0) - 5.0) < 1e-7);
  CHECK(std::abs(h(1) - 2.0) < 1e-7);

  std::function<double(const Vec&)> bad = [](const Vec& x) { return x(0) > 0 ? std::log(-1.0) : 0.0; };
  CHECK_THROWS_AS(pnl::finite_diff_grad(bad, vec({1}), 1e-4), pnl::OracleFailure);
  CHECK_THROWS_AS(pnl::finite_diff_grad(sq, vec({1}), 0.0), pnl::InvalidHyperparameter);
}

TEST_CASE("finite_diff_grad is exact on quadratics up to rounding") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    pnl::Mat a(n, n);
    Vec b(n), x(n);
    for (auto& v : a.reshaped()) v = g(rng);
    for (auto& v : b) v = g(rng);
    for (auto& v : x) v = g(rng);
    std::function<double(const Vec&)> f = [&](const Vec& t) { return t.dot(a * t) + b.dot(t) + 1.5; };
    const Vec expect = (a + a.transpose()) * x + b;
    const Vec got = pnl::finite_diff_grad(f, x, 1e-3);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("require_same_size rejects mismatched shapes") {
  CHECK_NOTHROW(pnl::require_same_size(vec({1, 2}), vec({3, 4}), "t"));
  CHECK_THROWS_AS(pnl::require_same_size(vec({1, 2}), vec({3}), "t"), pnl::ShapeError);
}
