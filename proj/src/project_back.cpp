#include "hst/project_back.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hst/errors.hpp"

namespace hst {

namespace {

std::size_t default_sample_size(std::size_t n) {
  double lg = std::log2(double(n) + 2.0);
  return std::size_t(std::ceil(25.0 * lg * lg));
}

}  // namespace

Point project_back(const Dataset& cluster, const Point& anchor,
                   double apx_cost, const ProjectBackParams& params,
                   double epsilon, const RngStream& rng,
                   PrivacyBudget& budget) {
  const std::size_t n = cluster.size();
  if (n == 0) return anchor;
  if (cluster.dim() != anchor.size())
    throw ConfigError("anchor dimension mismatch");
  if (!(apx_cost >= 0)) throw ConfigError("cost estimate must be nonnegative");
  const std::size_t d = cluster.dim();
  const double half = epsilon / 2.0;

  std::size_t t = params.t_sample > 0 ? params.t_sample
                                      : default_sample_size(n);
  t = std::min(t, n);

  std::vector<std::uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  RngStream omega = rng.keyed(0x01);
  for (std::size_t j = 0; j < t; ++j) {
    std::size_t r = j + std::size_t(omega.next_u64() % (n - j));
    std::swap(idx[j], idx[r]);
  }

  const double alpha_apx =
      params.alpha_apx > 0
          ? params.alpha_apx
          : std::pow(double(d), 1.5) * std::log2(double(n) + 2.0);
  const double delta =
      apx_cost > 0 ? (params.d_close / alpha_apx) * (apx_cost / double(n))
                   : 0.0;

  // Band top: everything further than 2^top * delta still lands in the
  // last band rather than escaping the filter.
  const int top = std::max(
      1, int(std::ceil(std::log2(std::max(2.0, double(n) * alpha_apx)))));
  const double r_small =
      params.r_small > 0 ? params.r_small : 1.0 / (8.0 * double(top + 1));

  // band 0: merged into the anchor (distance under delta).
  // band -1: between delta and 2*delta, close enough to keep outright.
  // band i in [1, top]: distance in (2^i delta, 2^{i+1} delta].
  std::vector<std::uint32_t> kept;       // sampled indices, banded
  std::vector<int> band_of;              // band per kept index
  std::vector<std::size_t> band_count(std::size_t(top) + 1, 0);
  for (std::size_t j = 0; j < t; ++j) {
    double dist = l2_dist(cluster.point(idx[j]), anchor);
    if (delta > 0 && dist < delta) {
      ++band_count[0];
      continue;
    }
    int band = -1;
    if (delta > 0 && dist > 2.0 * delta) {
      band = 1;
      double bound = 4.0 * delta;
      while (dist > bound && band < top) {
        ++band;
        bound *= 2.0;
      }
      ++band_count[std::size_t(band)];
    }
    kept.push_back(idx[j]);
    band_of.push_back(band);
  }

  // Noisy population filter, one decision per band, keyed so the outcome
  // does not depend on evaluation order. Bands under the threshold are
  // treated as stray mass and dropped. The decisions touch disjoint
  // points, so the half-budget is charged per band in parallel.
  RngStream filter = rng.keyed(0x02);
  const double filter_scale = std::isinf(half) ? 0.0 : 1.0 / half;
  std::vector<char> band_ok(std::size_t(top) + 1, 0);
  budget.charge_parallel("ring-filter", half);
  if (delta > 0) {
    for (int b = 0; b <= top; ++b) {
      double noise = keyed_laplace(filter, std::uint64_t(b), filter_scale);
      band_ok[std::size_t(b)] =
          double(band_count[std::size_t(b)]) >= r_small * double(t) + noise;
      if (b > 0) budget.charge_parallel("ring-filter", half);
    }
  }

  WeightedPoints wp;
  if (delta > 0 && band_ok[0] && band_count[0] > 0) {
    wp.pts.push_back(anchor);
    wp.weights.push_back(double(band_count[0]));
  }
  for (std::size_t j = 0; j < kept.size(); ++j) {
    int band = band_of[j];
    if (band >= 1 && !band_ok[std::size_t(band)]) continue;
    wp.pts.push_back(cluster.point_copy(kept[j]));
    if (!wp.weights.empty()) wp.weights.push_back(1.0);
  }

  if (wp.pts.empty()) {
    // The filter spent its half deciding to drop everything; the solver
    // half is still recorded so the run's ledger stays at face value.
    budget.charge("one-median", half);
    return anchor;
  }

  OneMedianConfig cfg;
  cfg.epsilon = half;
  cfg.lambda = params.lambda;
  cfg.lambda_smooth = params.lambda_smooth;
  cfg.gamma_grad = params.gamma_grad;
  RngStream solver = rng.keyed(0x03);
  return dp_one_median(wp, cfg, solver, budget);
}

}  // namespace hst
