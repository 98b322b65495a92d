#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hst/errors.hpp"
#include "hst/privacy.hpp"
#include "hst/quadtree.hpp"
#include "hst/rng.hpp"
#include "hst/tree_dp.hpp"

using namespace hst;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset uniform_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  RngStream rng(seed, "dp-data");
  std::vector<double> coords;
  for (std::size_t i = 0; i < n * d; ++i) coords.push_back(rng.uniform(-0.9, 0.9));
  return Dataset(d, std::move(coords));
}

struct Instance {
  Quadtree tree;
  NoisyWeights noise;
};

Instance build(const Dataset& data, int max_depth, double epsilon,
               double tau_override, std::uint64_t seed) {
  TreeParams params;
  params.lambda = 1.0;
  params.stop_diam = 0.0;
  params.max_depth = max_depth;
  Quadtree tree(data, RngStream(seed, "shifts"), params);
  PrivacyBudget budget(kInf);
  MakePrivateOptions opt;
  opt.tau_override = tau_override;
  NoisyWeights nw =
      make_private(tree, epsilon, RngStream(seed, "noise"), budget, opt);
  return {std::move(tree), std::move(nw)};
}

// Ground truth by enumeration: best charge over every center placement on
// the visited leaves using at most j of them (duplicates never help).
std::vector<double> exhaustive_values(const Instance& inst,
                                      const std::vector<Point>& leaves, int k,
                                      int z) {
  std::vector<double> best(std::size_t(k) + 1,
                           std::numeric_limits<double>::infinity());
  best[0] = tree_placement_cost(inst.tree, inst.noise, {}, z);
  const unsigned L = unsigned(leaves.size());
  REQUIRE(L <= 16);
  for (unsigned mask = 1; mask < (1u << L); ++mask) {
    const int used = std::popcount(mask);
    if (used > k) continue;
    std::vector<Point> centers;
    for (unsigned b = 0; b < L; ++b)
      if (mask & (1u << b)) centers.push_back(leaves[b]);
    const double cost = tree_placement_cost(inst.tree, inst.noise, centers, z);
    for (int j = used; j <= k; ++j) best[std::size_t(j)] = std::min(best[std::size_t(j)], cost);
  }
  return best;
}

}  // namespace

TEST_CASE("dp_combine scans splits upward and keeps the first minimum") {
  std::vector<double> low{5.0, 1.0, 0.5};
  std::vector<double> high{7.0, 2.0, 1.0};
  std::vector<double> v(3, -7.0);
  std::vector<std::uint16_t> pick(3, 77);
  dp_combine(low, high, 2, v, pick);
  CHECK(v[0] == -7.0);  // own term is the caller's business
  CHECK(v[1] == 7.0);   // k1 = 0: 5 + 2 beats k1 = 1: 1 + 7
  CHECK(pick[1] == 0);
  CHECK(v[2] == 3.0);  // k1 = 1: 1 + 2 beats 5 + 1 and 0.5 + 7
  CHECK(pick[2] == 1);

  // A genuine tie: both splits give 6, the smaller k1 must win.
  std::vector<double> sl{4.0, 2.0};
  std::vector<double> sh{4.0, 2.0};
  std::vector<double> tv(2, 0.0);
  std::vector<std::uint16_t> tp(2, 9);
  dp_combine(sl, sh, 1, tv, tp);
  CHECK(tv[1] == 6.0);
  CHECK(tp[1] == 0);
}

TEST_CASE("root-only tree: one center erases the whole charge") {
  Dataset data = uniform_data(4, 2, 101);
  // The threshold exceeds the count, so the queue never leaves the root.
  Instance inst = build(data, 1, kInf, 1000.0, 101);
  std::vector<Point> leaves = dp_leaf_centers(inst.tree, inst.noise);
  REQUIRE(leaves.size() == 1);
  CHECK(leaves[0][0] == 0.0);  // root is [-1, 1]^2 regardless of shifts
  CHECK(leaves[0][1] == 0.0);

  for (int z : {1, 2}) {
    TreeDpResult res = dp_solve(inst.tree, inst.noise, 3, z);
    const double diam2 = inst.tree.cell(Quadtree::kRoot).geom.diam2;
    CHECK(res.value[0] == dp_cell_charge(4.0, diam2, z));
    CHECK(res.value[1] == 0.0);
    CHECK(res.value[3] == 0.0);
    CHECK(res.cost == 0.0);
    REQUIRE(res.centers.size() == 3);
    for (const Point& c : res.centers) CHECK(c == leaves[0]);
  }
}

TEST_CASE("dp_solve matches exhaustive placement, noise disabled") {
  int tested = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const std::size_t d = 1 + (i % 2);
    const std::size_t n = 2 + (i % 5);
    const int depth = (d == 1) ? 3 : 2 + int(i % 2);
    Dataset data = uniform_data(n, d, 1000 + i);
    Instance inst = build(data, depth, kInf, 0.0, 1000 + i);
    std::vector<Point> leaves = dp_leaf_centers(inst.tree, inst.noise);
    if (leaves.size() > 12) continue;
    ++tested;
    for (int z : {1, 2}) {
      const int k = 3;
      TreeDpResult res = dp_solve(inst.tree, inst.noise, k, z);
      std::vector<double> oracle = exhaustive_values(inst, leaves, k, z);
      for (int j = 0; j <= k; ++j)
        CHECK(res.value[std::size_t(j)] == oracle[std::size_t(j)]);
      CHECK(res.cost == res.value[std::size_t(k)]);
      CHECK(tree_placement_cost(inst.tree, inst.noise, res.centers, z) ==
            res.cost);
    }
  }
  CHECK(tested >= 40);
}

TEST_CASE("dp_solve matches exhaustive placement under noisy weights") {
  int tested = 0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const std::size_t d = 1 + (i % 2);
    const std::size_t n = 3 + (i % 4);
    Dataset data = uniform_data(n, d, 2000 + i);
    // A low threshold expands noisy empty cells too; the depth cap keeps
    // the leaf count enumerable.
    Instance inst = build(data, 2 + int(i % 2), 2.0, 0.1, 2000 + i);
    std::vector<Point> leaves = dp_leaf_centers(inst.tree, inst.noise);
    if (leaves.size() > 12) continue;
    ++tested;
    for (int z : {1, 2}) {
      const int k = 2;
      TreeDpResult res = dp_solve(inst.tree, inst.noise, k, z);
      std::vector<double> oracle = exhaustive_values(inst, leaves, k, z);
      for (int j = 0; j <= k; ++j)
        CHECK(res.value[std::size_t(j)] == oracle[std::size_t(j)]);
      CHECK(tree_placement_cost(inst.tree, inst.noise, res.centers, z) ==
            res.cost);
    }
  }
  CHECK(tested >= 24);
}

TEST_CASE("value is non-increasing from one center on") {
  Dataset data = uniform_data(40, 2, 31);
  Instance noisy = build(data, 4, 1.0, 0.5, 31);
  const int k = 8;
  for (int z : {1, 2}) {
    TreeDpResult res = dp_solve(noisy.tree, noisy.noise, k, z);
    for (int j = 1; j < k; ++j)
      CHECK(res.value[std::size_t(j + 1)] <= res.value[std::size_t(j)]);
  }
  // Without noise the no-center charge dominates as well.
  Instance exact = build(data, 4, kInf, 0.0, 31);
  TreeDpResult res = dp_solve(exact.tree, exact.noise, k, 1);
  CHECK(res.value[1] <= res.value[0]);
}

TEST_CASE("k beyond the leaf count saturates and repeats centers") {
  Dataset data = uniform_data(3, 1, 77);
  Instance inst = build(data, 2, kInf, 0.0, 77);
  std::vector<Point> leaves = dp_leaf_centers(inst.tree, inst.noise);
  const int L = int(leaves.size());
  const int k = L + 2;
  TreeDpResult res = dp_solve(inst.tree, inst.noise, k, 1);
  REQUIRE(res.centers.size() == std::size_t(k));
  CHECK(res.value[std::size_t(L)] == res.value[std::size_t(k)]);
  CHECK(res.value[std::size_t(L)] == 0.0);  // a center in every leaf pays nothing
}

TEST_CASE("argument guards") {
  Dataset data = uniform_data(4, 1, 5);
  Instance inst = build(data, 2, kInf, 0.0, 5);
  CHECK_THROWS_AS(dp_solve(inst.tree, inst.noise, 0, 1), ConfigError);
  CHECK_THROWS_AS(dp_solve(inst.tree, inst.noise, 2, 3), ConfigError);
  CHECK_THROWS_AS(tree_placement_cost(inst.tree, inst.noise, {}, 0),
                  ConfigError);
  NoisyWeights empty;
  CHECK_THROWS_WITH_AS(dp_solve(inst.tree, empty, 1, 1),
                       "tree has no visited cells", ConfigError);
}
