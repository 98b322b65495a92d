#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "hst/cost.hpp"
#include "hst/csv.hpp"
#include "hst/dataset.hpp"
#include "hst/errors.hpp"
#include "hst/rng.hpp"
#include "hst/simd/kernels.hpp"

using namespace hst;

namespace {

Dataset make_random(std::size_t n, std::size_t d, RngStream& rng,
                    double radius = 0.9) {
  std::vector<double> coords;
  coords.reserve(n * d);
  for (std::size_t i = 0; i < n * d; ++i) {
    coords.push_back(rng.uniform(-radius / std::sqrt(double(d)),
                                 radius / std::sqrt(double(d))));
  }
  return Dataset(d, std::move(coords));
}

}  // namespace

TEST_CASE("rng streams are deterministic and label-separated") {
  RngStream a(42, "tree-shifts");
  RngStream b(42, "tree-shifts");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, "tree-noise");
  RngStream d(42, "tree-shifts");
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) {
    if (c.next_u64() != d.next_u64()) all_equal = false;
  }
  CHECK_FALSE(all_equal);

  RngStream e(43, "tree-shifts");
  RngStream f(42, "tree-shifts");
  bool seed_equal = true;
  for (int i = 0; i < 16; ++i) {
    if (e.next_u64() != f.next_u64()) seed_equal = false;
  }
  CHECK_FALSE(seed_equal);
}

TEST_CASE("keyed streams ignore parent stream position") {
  RngStream fresh(7, "noise");
  RngStream advanced(7, "noise");
  for (int i = 0; i < 37; ++i) advanced.next_u64();
  RngStream k1 = fresh.keyed(0xabcdef);
  RngStream k2 = advanced.keyed(0xabcdef);
  for (int i = 0; i < 32; ++i) CHECK(k1.next_u64() == k2.next_u64());

  RngStream k3 = fresh.keyed(0xabcdee);
  RngStream k4 = fresh.keyed(0xabcdef);
  bool differ = false;
  for (int i = 0; i < 16; ++i) {
    if (k3.next_u64() != k4.next_u64()) differ = true;
  }
  CHECK(differ);
}

TEST_CASE("uniform01 stays strictly inside (0,1); gaussian has sane moments") {
  RngStream rng(11, "u");
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 0.01);

  RngStream g(11, "g");
  double gs = 0.0, gs2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.gaussian();
    gs += x;
    gs2 += x * x;
  }
  CHECK(std::abs(gs / n) < 0.02);
  CHECK(std::abs(gs2 / n - 1.0) < 0.03);
}

TEST_CASE("normalize maps the two-point segment symmetrically") {
  Dataset raw(2, {0.0, 0.0, 2.0, 0.0});
  NormalizedData nd = normalize(raw, 1.0);
  CHECK(nd.data.size() == 2);
  const double mx = 1.0 - 1e-9;
  CHECK(nd.data.point(0)[0] == doctest::Approx(-mx).epsilon(1e-12));
  CHECK(nd.data.point(0)[1] == 0.0);
  CHECK(nd.data.point(1)[0] == doctest::Approx(mx).epsilon(1e-12));
  CHECK(l2_norm(nd.data.point(0)) == doctest::Approx(mx).epsilon(1e-12));
}

TEST_CASE("normalize handles a single point via unit scale") {
  Dataset raw(2, {5.0, 5.0});
  NormalizedData nd = normalize(raw, 1.0);
  CHECK(nd.data.point(0)[0] == 0.0);
  CHECK(nd.data.point(0)[1] == 0.0);
  CHECK(nd.transform.scale == 1.0);
  Point back = nd.transform.to_raw(nd.data.point(0));
  CHECK(back[0] == doctest::Approx(5.0));
  CHECK(back[1] == doctest::Approx(5.0));
}

TEST_CASE("normalize keeps random data strictly inside the ball") {
  RngStream rng(3, "norm-test");
  std::vector<double> coords;
  for (int i = 0; i < 200; ++i) coords.push_back(rng.uniform(0.0, 10.0));
  Dataset raw(2, std::move(coords));
  NormalizedData nd = normalize(raw, 1.0);
  for (std::size_t i = 0; i < nd.data.size(); ++i) {
    CHECK(l2_norm(nd.data.point(i)) < 1.0);
  }
}

TEST_CASE("normalize rejects bad input") {
  CHECK_THROWS_WITH_AS(normalize(Dataset(), 1.0), "empty dataset", DataError);
  Dataset bad(1, {std::nan("")});
  CHECK_THROWS_WITH_AS(normalize(bad, 1.0), "invalid coordinate", DataError);
  Dataset ok(1, {0.5});
  CHECK_THROWS_AS(normalize(ok, 0.0), DataError);
}

TEST_CASE("clustering cost matches the 3-4-5 triangle") {
  Dataset data(2, {0.0, 0.0, 3.0, 4.0});
  std::vector<Point> centers = {{0.0, 0.0}};
  CHECK(clustering_cost(data, centers, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(clustering_cost(data, centers, 2) == doctest::Approx(25.0).epsilon(1e-15));

  std::vector<Point> self = {{0.0, 0.0}, {3.0, 4.0}};
  CHECK(clustering_cost(data, self, 1) == 0.0);
  CHECK(clustering_cost(data, self, 2) == 0.0);

  CHECK_THROWS_AS(clustering_cost(data, {}, 1), ConfigError);
  CHECK_THROWS_AS(clustering_cost(data, centers, 3), ConfigError);
}

TEST_CASE("assignment breaks ties toward the lowest center index") {
  Dataset data(1, {0.0});
  std::vector<Point> centers = {{1.0}, {-1.0}};
  std::vector<std::uint32_t> asg;
  assign_points(data, centers, 1, asg);
  CHECK(asg[0] == 0);
}

TEST_CASE("triangle inequality holds on random triples") {
  RngStream rng(5, "triples");
  for (int t = 0; t < 2000; ++t) {
    Point a = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Point b = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Point c = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(l2_dist(a, c) <= l2_dist(a, b) + l2_dist(b, c) + 1e-12);
  }
}

TEST_CASE("cost is monotone non-increasing in the center set") {
  RngStream rng(6, "mono");
  Dataset data = make_random(200, 3, rng);
  std::vector<Point> centers = {{0.1, 0.0, 0.0}};
  for (int z = 1; z <= 2; ++z) {
    double prev = clustering_cost(data, centers, z);
    std::vector<Point> grown = centers;
    for (int t = 0; t < 20; ++t) {
      grown.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                       rng.uniform(-0.5, 0.5)});
      const double now = clustering_cost(data, grown, z);
      CHECK(now <= prev + 1e-12);
      prev = now;
    }
  }
}

TEST_CASE("normalization round-trip rescales cost by scale^z") {
  RngStream rng(8, "round-trip");
  std::vector<double> coords;
  for (int i = 0; i < 300; ++i) coords.push_back(rng.uniform(3.0, 17.0));
  Dataset raw(3, std::move(coords));
  NormalizedData nd = normalize(raw, 1.0);

  std::vector<Point> centers_norm = {{0.2, 0.1, -0.3}, {-0.4, 0.0, 0.2}};
  std::vector<Point> centers_raw;
  for (const auto& c : centers_norm) centers_raw.push_back(nd.transform.to_raw(c));
  for (int z = 1; z <= 2; ++z) {
    const double cn = clustering_cost(nd.data, centers_norm, z);
    const double cr = clustering_cost(raw, centers_raw, z);
    CHECK(cr * std::pow(nd.transform.scale, z) ==
          doctest::Approx(cn).epsilon(1e-9));
  }
}

TEST_CASE("csv round trip preserves values; header and delimiters accepted") {
  Dataset data(2, {1.5, -2.25, 0.0, 1e-3});
  std::ostringstream out;
  write_csv(out, data);
  std::istringstream in(out.str());
  Dataset back = read_csv(in);
  REQUIRE(back.size() == 2);
  REQUIRE(back.dim() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(back.point(i)[j] == data.point(i)[j]);
    }
  }

  std::istringstream with_header("x,y\n1,2\n3 4\n");
  Dataset h = read_csv(with_header);
  REQUIRE(h.size() == 2);
  CHECK(h.point(1)[1] == 4.0);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), DataError);
  std::istringstream empty("");
  CHECK_THROWS_WITH_AS(read_csv(empty), "empty dataset", DataError);
  std::istringstream nonnum("1,2\n3,dog\n");
  CHECK_THROWS_AS(read_csv(nonnum), DataError);
}

TEST_CASE("scalar and avx2 kernels agree bitwise") {
#if defined(__x86_64__) || defined(_M_X64)
  if (!__builtin_cpu_supports("avx2")) return;
  RngStream rng(13, "kernel-eq");
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + std::size_t(rng.next_u64() % 97);
    const std::size_t d = 1 + std::size_t(rng.next_u64() % 9);
    const std::size_t k = 1 + std::size_t(rng.next_u64() % 7);
    Dataset data = make_random(n, d, rng);
    std::vector<double> centers;
    for (std::size_t i = 0; i < k * d; ++i) {
      centers.push_back(rng.uniform(-0.5, 0.5));
    }
    const int z = 1 + int(rng.next_u64() % 2);

    std::vector<std::uint32_t> asg_s(n), asg_v(n);
    double cost_s = 0.0, cost_v = 0.0;
    simd::assign_scalar(data.raw(), n, d, centers.data(), k, z, asg_s.data(),
                        &cost_s);
    simd::assign_avx2(data.raw(), n, d, centers.data(), k, z, asg_v.data(),
                      &cost_v);
    CHECK(cost_s == cost_v);
    CHECK(asg_s == asg_v);

    std::vector<double> min_s(n, 1e300), min_v(n, 1e300);
    simd::update_min_sqdist_scalar(data.raw(), n, d, centers.data(), min_s.data());
    simd::update_min_sqdist_avx2(data.raw(), n, d, centers.data(), min_v.data());
    CHECK(min_s == min_v);
  }
#endif
}

TEST_CASE("kernel cost matches a naive evaluation") {
  RngStream rng(14, "kernel-naive");
  const std::size_t n = 61, d = 4, k = 3;
  Dataset data = make_random(n, d, rng);
  std::vector<Point> centers;
  for (std::size_t c = 0; c < k; ++c) {
    Point p(d);
    for (auto& x : p) x = rng.uniform(-0.5, 0.5);
    centers.push_back(p);
  }
  for (int z = 1; z <= 2; ++z) {
    double naive = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = 1e300;
      for (const auto& c : centers) best = std::min(best, sq_dist(data.point(i), c));
      naive += z == 2 ? best : std::sqrt(best);
    }
    CHECK(clustering_cost(data, centers, z) ==
          doctest::Approx(naive).epsilon(1e-12));
  }
}
