#include <doctest.h>

#include "pnl/losses.hpp"
#include "support.hpp"

using namespace testing;

TEST_CASE("ce_loss examples") {
  const Vec uniform = Vec::Constant(4, 0.25);
  for (Index y = 0; y < 4; ++y) CHECK(std::abs(pnl::ce_loss(uniform, y).value - std::log(4.0)) < 1e-15);
  CHECK(pnl::ce_loss(Vec::Unit(3, 1), 1).value == 0.0);

  Vec p(2);
  p << 0.7310585786300049, 0.2689414213699951;
  CHECK(std::abs(pnl::ce_loss(p, 1).value - 1.3132616875182228) < 1e-12);
  const auto g = pnl::ce_loss(p, 1).grad;
  CHECK(g(0) == p(0));
  CHECK(g(1) == p(1) - 1.0);

  const auto clamped = pnl::ce_loss(Vec::Unit(2, 0), 1);
  CHECK(clamped.value == doctest::Approx(-std::log(pnl::kProbabilityFloor)));
  CHECK_THROWS_AS(pnl::ce_loss(p, 2), pnl::LabelRangeError);
}

TEST_CASE("proto_loss examples") {
  Mat c(2, 2);
  c << 1, 0, 0, 1;
  pnl::PrototypeBank bank(c);
  const auto a = pnl::proto_loss(Vec::Unit(2, 0), bank, 0, 0.1);
  CHECK(std::abs(a.value - 4.5398899216870535e-05) < 1e-15);

  std::mt19937_64 rng(1);
  const Vec u = unit_vec(3, rng);
  pnl::PrototypeBank same(Mat(u.replicate(1, 3)));
  CHECK(std::abs(pnl::proto_loss(unit_vec(3, rng), same, 2, 0.1).value - std::log(3.0)) < 1e-12);
  CHECK_THROWS_AS(pnl::proto_loss(u, same, 3, 0.1), pnl::LabelRangeError);
  CHECK_THROWS_AS(pnl::proto_loss(u, same, 0, 0.0), pnl::InvalidHyperparameter);
}

TEST_CASE("inst_contrast_loss examples") {
  std::mt19937_64 rng(2);
  const Vec q = unit_vec(3, rng);
  const Vec k = unit_vec(3, rng);
  CHECK(pnl::inst_contrast_loss(q, k, Mat(3, 0), 0.1).value == 0.0);
  CHECK(std::abs(pnl::inst_contrast_loss(q, k, Mat(k), 0.1).value - std::log(2.0)) < 1e-12);
  const auto c = pnl::inst_contrast_loss(Vec::Unit(3, 0), Vec::Unit(3, 0), Mat(Vec::Unit(3, 1)), 0.1);
  CHECK(std::abs(c.value - 4.5398899216870535e-05) < 1e-15);
}

TEST_CASE("label_guided_loss examples") {
  std::mt19937_64 rng(3);
  const Vec q = unit_vec(4, rng);
  const Vec k = unit_vec(4, rng);
  CHECK(pnl::label_guided_loss(q, Mat(k), Mat(4, 0), 0.1).value == 0.0);

  Mat pos(2, 2);
  pos << 1, 1, 0, 0;
  Mat neg(2, 1);
  neg << 0, 1;
  const long double e = std::exp(1.0L);
  const long double expect = -0.5L * std::log(2.0L * e / (2.0L * e + 1.0L));
  const double got = pnl::label_guided_loss(Vec::Unit(2, 0), pos, neg, 1.0).value;
  CHECK(std::abs(static_cast<long double>(got) - expect) < 1e-15L);

  CHECK_THROWS_AS(pnl::label_guided_loss(q, Mat(4, 0), Mat(k), 0.1), pnl::ContractViolation);
  CHECK_THROWS_AS(pnl::label_guided_loss(q, Mat(Vec::Unit(3, 0)), Mat(4, 0), 0.1), pnl::ShapeError);
}

TEST_CASE("label_guided_loss with one positive equals inst_contrast_loss bitwise") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Index d = uniform_int(2, 8, rng);
    const Vec q = unit_vec(d, rng);
    const Vec k = unit_vec(d, rng);
    const Mat neg = unit_cols(d, uniform_int(0, 6, rng), rng);
    const double tau = std::uniform_real_distribution<double>(0.05, 0.3)(rng);
    const auto a = pnl::label_guided_loss(q, Mat(k), neg, tau);
    const auto b = pnl::inst_contrast_loss(q, k, neg, tau);
    CHECK(a.value == b.value);
    CHECK((a.grad.array() == b.grad.array()).all());
  }
}

TEST_CASE("losses are finite and nonnegative on unit inputs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const Index d = uniform_int(2, 8, rng), k = uniform_int(2, 5, rng);
    const double tau = std::uniform_real_distribution<double>(0.05, 0.3)(rng);
    const Vec q = unit_vec(d, rng);
    pnl::PrototypeBank bank(unit_cols(d, k, rng));
    const Index y = uniform_int(0, static_cast<int>(k) - 1, rng);
    const Mat pos = unit_cols(d, uniform_int(1, 4, rng), rng);
    const Mat neg = unit_cols(d, uniform_int(0, 6, rng), rng);
    const double values[] = {
        pnl::ce_loss(pnl::softmax_temp(gaussian_vec(k, rng), 1.0), y).value,
        pnl::proto_loss(q, bank, y, tau).value,
        pnl::inst_contrast_loss(q, pos.col(0), neg, tau).value,
        pnl::label_guided_loss(q, pos, neg, tau).value,
    };
    for (double v : values) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("label_guided_loss decreases as a positive aligns with q") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 5;
    const Vec q = unit_vec(d, rng);
    Mat pos = unit_cols(d, 3, rng);
    const Mat neg = unit_cols(d, 4, rng);
    const Vec start = pos.col(1);
    double prev = 1e300;
    for (int s = 0; s <= 10; ++s) {
      const double t = s / 10.0;
      pos.col(1) = pnl::l2_normalize(Vec((1 - t) * start + t * q + 1e-9 * Vec::Ones(d)));
      const double v = pnl::label_guided_loss(q, pos, neg, 0.1).value;
      CHECK(v <= prev + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("temperature and logit scale are dual") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 6;
    const Vec q = unit_vec(d, rng);
    const Mat pos = unit_cols(d, 2, rng), neg = unit_cols(d, 5, rng);
    const double tau = 0.2, alpha = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
    const double a = pnl::label_guided_loss(q, pos, neg, tau / alpha).value;
    const double b = pnl::label_guided_loss(Vec(alpha * q), pos, neg, tau).value;
    CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, a));
    pnl::PrototypeBank bank(unit_cols(d, 4, rng));
    const double c = pnl::proto_loss(q, bank, 1, tau / alpha).value;
    const double e = pnl::proto_loss(Vec(alpha * q), bank, 1, tau).value;
    CHECK(std::abs(c - e) < 1e-12 * std::max(1.0, c));
  }
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    std::mt19937_64 rng(seed);
    const Index d = uniform_int(2, 8, rng), k = uniform_int(2, 5, rng);
    const double tau = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const Vec q = unit_vec(d, rng);
    const Vec logits = gaussian_vec(k, rng);
    const Index y = uniform_int(0, static_cast<int>(k) - 1, rng);
    pnl::PrototypeBank bank(unit_cols(d, k, rng));
    const Index n_queue = uniform_int(0, 6, rng);
    const Mat pos = unit_cols(d, 1 + uniform_int(0, static_cast<int>(n_queue), rng), rng);
    const Mat neg = unit_cols(d, n_queue - (pos.cols() - 1), rng);
    constexpr double kStep = 1e-6;

    std::function<double(const Vec&)> ce = [&](const Vec& z) {
      return pnl::ce_loss(pnl::softmax_temp(z, 1.0), y).value;
    };
    CHECK(max_rel_err(pnl::ce_loss(pnl::softmax_temp(logits, 1.0), y).grad,
                      pnl::finite_diff_grad(ce, logits, kStep)) < 1e-5);

    std::function<double(const Vec&)> pro = [&](const Vec& v) { return pnl::proto_loss(v, bank, y, tau).value; };
    CHECK(max_rel_err(pnl::proto_loss(q, bank, y, tau).grad, pnl::finite_diff_grad(pro, q, kStep)) < 1e-5);

    std::function<double(const Vec&)> ic = [&](const Vec& v) {
      return pnl::inst_contrast_loss(v, pos.col(0), neg, tau).value;
    };
    CHECK(max_rel_err(pnl::inst_contrast_loss(q, pos.col(0), neg, tau).grad,
                      pnl::finite_diff_grad(ic, q, kStep)) < 1e-5);

    std::function<double(const Vec&)> lgc = [&](const Vec& v) {
      return pnl::label_guided_loss(v, pos, neg, tau).value;
    };
    CHECK(max_rel_err(pnl::label_guided_loss(q, pos, neg, tau).grad, pnl::finite_diff_grad(lgc, q, kStep)) < 1e-5);
  }
}

TEST_CASE("total_loss examples and ablation rows") {
  pnl::LossBreakdown c;
  c.ce = 1;
  c.pro = 2;
  c.lgc = 3;
  c.ic = 0.5;
  CHECK(pnl::total_loss(c, {true, false, true, true}).total == 6.0);
  CHECK(pnl::total_loss(c, pnl::ablation_row(1)).total == 1.0);
  CHECK(pnl::total_loss(c, pnl::ablation_row(7)).total == 6.0);
  CHECK(pnl::total_loss(c, pnl::ablation_row(2)).total == 0.5);
  const auto r6 = pnl::total_loss(c, pnl::ablation_row(6));
  CHECK(r6.total == 3.5);
  CHECK(r6.lgc == 0.0);

  c.lambda_pro = 0.5;
  c.lambda_lgc = 2.0;
  CHECK(pnl::total_loss(c, pnl::ablation_row(7)).total == 1.0 + 1.0 + 6.0);

  CHECK(pnl::ablation_row(1).describe() == "ce");
  CHECK(pnl::ablation_row(2).describe() == "ic");
  CHECK(pnl::ablation_row(3).describe() == "ce+ic");
  CHECK(pnl::ablation_row(4).describe() == "ce+pro");
  CHECK(pnl::ablation_row(5).describe() == "ce+lgc");
  CHECK(pnl::ablation_row(6).describe() == "ce+ic+pro");
  CHECK(pnl::ablation_row(7).describe() == "ce+pro+lgc");
  CHECK_THROWS_AS(pnl::ablation_row(0), pnl::ConfigError);
  CHECK_THROWS_AS(pnl::ablation_row(8), pnl::ConfigError);
}

TEST_CASE("total_loss recombines logged components exactly") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    pnl::LossBreakdown c;
    c.ce = u(rng);
    c.pro = u(rng);
    c.lgc = u(rng);
    c.ic = u(rng);
    c.lambda_pro = u(rng);
    c.lambda_lgc = u(rng);
    const auto t = pnl::total_loss(c, pnl::ablation_row(1 + trial % 7));
    CHECK(std::abs(t.total - (t.ce + t.ic + t.lambda_pro * t.pro + t.lambda_lgc * t.lgc)) < 1e-12);
  }
}
