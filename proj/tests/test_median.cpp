#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "hst/errors.hpp"
#include "hst/median.hpp"
#include "hst/privacy.hpp"
#include "hst/rng.hpp"

using namespace hst;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double l2_dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double l2_norm(const Point& a) {
  double s = 0.0;
  for (double c : a) s += c * c;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("weiszfeld: coincident points return the common location") {
  WeightedPoints input{{{0.3, -0.2}, {0.3, -0.2}, {0.3, -0.2}}, {}};
  Point out = weiszfeld(input);
  CHECK(l2_dist(out, {0.3, -0.2}) < 1e-9);
}

TEST_CASE("weiszfeld: collinear points pick the middle one") {
  // The median of three collinear points is the middle point, which is an
  // input point, so the iteration has to step across the singularity.
  WeightedPoints input{{{0.0, 0.0}, {1.0, 0.0}, {0.2, 0.0}}, {}};
  Point out = weiszfeld(input);
  CHECK(l2_dist(out, {0.2, 0.0}) < 1e-5);
}

TEST_CASE("weiszfeld: two points, the heavier endpoint wins") {
  WeightedPoints input{{{-0.4, 0.1}, {0.5, 0.3}}, {3.0, 1.0}};
  Point out = weiszfeld(input);
  CHECK(l2_dist(out, {-0.4, 0.1}) < 1e-5);
}

TEST_CASE("weiszfeld: equilateral triangle balances at the centroid") {
  const double h = std::sqrt(3.0) / 2.0;
  WeightedPoints input{{{0.0, 0.0}, {1.0, 0.0}, {0.5, h}}, {}};
  Point out = weiszfeld(input);
  CHECK(l2_dist(out, {0.5, h / 3.0}) < 1e-7);
}

TEST_CASE("weiszfeld: square corners meet in the center") {
  WeightedPoints input{{{-1., -1.}, {1., -1.}, {1., 1.}, {-1., 1.}}, {}};
  Point out = weiszfeld(input);
  CHECK(l2_dist(out, {0.0, 0.0}) < 1e-8);
}

TEST_CASE("weighted_mean matches the closed form") {
  WeightedPoints input{{{1.0, 2.0}, {3.0, -2.0}, {0.0, 6.0}}, {2.0, 1.0, 1.0}};
  Point out = weighted_mean(input);
  CHECK(out[0] == doctest::Approx((2.0 * 1.0 + 3.0 + 0.0) / 4.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx((2.0 * 2.0 - 2.0 + 6.0) / 4.0).epsilon(1e-15));

  WeightedPoints plain{{{1.0}, {2.0}, {6.0}}, {}};
  CHECK(weighted_mean(plain)[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("total_weight defaults to the point count") {
  WeightedPoints plain{{{0.0}, {1.0}, {2.0}}, {}};
  CHECK(plain.total_weight() == 3.0);
  WeightedPoints weighted{{{0.0}, {1.0}}, {0.25, 1.5}};
  CHECK(weighted.total_weight() == 1.75);
}

TEST_CASE("dp_one_median respects weights without noise") {
  // Heavy weight drags the median onto the heavy point.
  WeightedPoints input{{{-0.3, 0.0}, {0.4, 0.2}}, {5.0, 1.0}};
  OneMedianConfig cfg;
  cfg.epsilon = kInf;
  cfg.lambda_smooth = 0.001;
  PrivacyBudget budget(kInf);
  RngStream rng(7, "median");
  Point out = dp_one_median(input, cfg, rng, budget);
  CHECK(l2_dist(out, {-0.3, 0.0}) < 5e-3);
}

TEST_CASE("dp_one_median stays in the ball whatever the noise does") {
  WeightedPoints input{{{0.95, 0.0}, {0.0, 0.95}, {-0.9, 0.2}}, {}};
  OneMedianConfig cfg;
  cfg.epsilon = 0.01;  // enormous perturbation
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PrivacyBudget budget(1.0);
    RngStream rng(seed, "median");
    Point out = dp_one_median(input, cfg, rng, budget);
    CHECK(l2_norm(out) <= cfg.lambda * (1.0 + 1e-12));
  }
}

TEST_CASE("dp_one_median charges its epsilon once") {
  WeightedPoints input{{{0.1, 0.2}, {-0.2, 0.1}}, {}};
  OneMedianConfig cfg;
  cfg.epsilon = 0.75;
  PrivacyBudget budget(0.75);
  RngStream rng(11, "median");
  dp_one_median(input, cfg, rng, budget);
  CHECK(budget.charged() == 0.75);
  REQUIRE(budget.entries().size() == 1);
  CHECK(budget.entries()[0].eps == 0.75);
}

TEST_CASE("dp_one_median is a deterministic function of the stream") {
  WeightedPoints input{{{0.1, 0.3}, {-0.4, 0.0}, {0.2, -0.2}}, {}};
  OneMedianConfig cfg;
  cfg.epsilon = 2.0;
  auto run = [&](std::uint64_t seed) {
    PrivacyBudget budget(2.0);
    RngStream rng(seed, "median");
    return dp_one_median(input, cfg, rng, budget);
  };
  Point a = run(5);
  Point b = run(5);
  CHECK(a == b);
  Point c = run(6);
  CHECK(l2_dist(a, c) > 0.0);
}

TEST_CASE("dp_one_median perturbation shrinks with epsilon") {
  // Wider budget tracks the clean optimum tighter on average. The random
  // tilt scales with 1 / (epsilon * n), so a small instance keeps it above
  // the optimizer's own error floor.
  WeightedPoints input;
  RngStream gen(31, "points");
  for (int i = 0; i < 5; ++i)
    input.pts.push_back({gen.uniform(-0.5, 0.5), gen.uniform(-0.5, 0.5)});
  const Point clean = weiszfeld(input);
  auto mean_err = [&](double eps) {
    OneMedianConfig cfg;
    cfg.epsilon = eps;
    cfg.lambda_smooth = 0.001;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      PrivacyBudget budget(eps);
      RngStream rng(900 + seed, "median");
      total += l2_dist(dp_one_median(input, cfg, rng, budget), clean);
    }
    return total / 40.0;
  };
  CHECK(mean_err(10.0) * 1.5 < mean_err(0.05));
}

TEST_CASE("dp_one_mean: exact mean and two half charges without noise") {
  WeightedPoints input{{{0.2, 0.4}, {-0.6, 0.0}, {0.1, -0.1}}, {}};
  PrivacyBudget budget(kInf);
  RngStream rng(13, "mean");
  bool degenerate = true;
  Point out = dp_one_mean(input, kInf, 1.0, rng, budget, &degenerate);
  CHECK(!degenerate);
  CHECK(out[0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.1).epsilon(1e-12));
  REQUIRE(budget.entries().size() == 2);
  CHECK(budget.entries()[0].label == "one-mean-sum");
  CHECK(budget.entries()[1].label == "one-mean-count");
}

TEST_CASE("dp_one_mean: a true single point survives the degenerate guard") {
  WeightedPoints input{{{0.33, -0.21}}, {}};
  PrivacyBudget budget(kInf);
  RngStream rng(17, "mean");
  bool degenerate = true;
  Point out = dp_one_mean(input, kInf, 1.0, rng, budget, &degenerate);
  CHECK(!degenerate);
  CHECK(out[0] == doctest::Approx(0.33).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(-0.21).epsilon(1e-12));
}

TEST_CASE("dp_one_mean: weights scale the sum and the count") {
  WeightedPoints input{{{0.3, 0.0}, {0.0, 0.3}}, {2.0, 1.0}};
  PrivacyBudget budget(kInf);
  RngStream rng(19, "mean");
  Point out = dp_one_mean(input, kInf, 1.0, rng, budget);
  CHECK(out[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("dp_one_mean: negative noisy counts collapse to the origin") {
  WeightedPoints input{{{0.5, 0.5}}, {}};
  int degenerate_hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    PrivacyBudget budget(0.05);
    RngStream rng(seed, "mean");
    bool degenerate = false;
    Point out = dp_one_mean(input, 0.05, 1.0, rng, budget, &degenerate);
    if (degenerate) {
      ++degenerate_hits;
      CHECK(out[0] == 0.0);
      CHECK(out[1] == 0.0);
    } else {
      CHECK(l2_norm(out) <= 1.0 + 1e-12);
    }
  }
  // Lap(2 / 0.05) = Lap(40) pushes 1 below 1 roughly half the time.
  CHECK(degenerate_hits >= 10);
}

TEST_CASE("solvers reject empty or weightless input") {
  WeightedPoints empty;
  OneMedianConfig cfg;
  PrivacyBudget budget(kInf);
  RngStream rng(1, "err");
  CHECK_THROWS_WITH_AS(weiszfeld(empty), "empty dataset", DataError);
  CHECK_THROWS_WITH_AS(weighted_mean(empty), "empty dataset", DataError);
  CHECK_THROWS_WITH_AS(dp_one_median(empty, cfg, rng, budget),
                       "empty dataset", DataError);
  CHECK_THROWS_WITH_AS(dp_one_mean(empty, 1.0, 1.0, rng, budget),
                       "empty dataset", DataError);
  WeightedPoints zero_w{{{0.1, 0.1}}, {0.0}};
  CHECK_THROWS_WITH_AS(dp_one_median(zero_w, cfg, rng, budget),
                       "nonpositive total weight", DataError);
}
