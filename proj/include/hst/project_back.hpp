#pragma once

#include <cstddef>

#include "hst/dataset.hpp"
#include "hst/median.hpp"
#include "hst/privacy.hpp"
#include "hst/rng.hpp"

namespace hst {

// Recovers a full-dimensional center for one cluster from a rough anchor.
// The anchor and its cost estimate must already be private; everything
// here spends fresh budget. epsilon splits in half: the ring filter
// composes in parallel across rings (disjoint point sets) for the first
// half, the smoothed median solver takes the second.
struct ProjectBackParams {
  std::size_t t_sample = 0;  // 0: ceil(25 * log2^2(n + 2))
  double d_close = 1.0;      // closeness constant in the merge radius
  double r_small = 0.0;      // 0: 1 / (8 * number of rings)
  double alpha_apx = 0.0;    // 0: dim^(3/2) * log2(n + 2)
  double lambda = 1.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;
};

// cluster: the points assigned to this center, original coordinates.
// anchor: current center estimate. apx_cost: the cluster's cost under the
// anchor, same units as the coordinates.
//
// Sample t points, merge everything within delta = apx_cost /
// (alpha_apx / d_close * |cluster|) into the anchor, band the rest by
// doubling distance, drop bands too thin to be population (noisy count
// below r_small * t), then run the private median on what survives. A
// zero apx_cost degenerates to the plain sampled median. If the filter
// drops everything the anchor itself comes back.
Point project_back(const Dataset& cluster, const Point& anchor,
                   double apx_cost, const ProjectBackParams& params,
                   double epsilon, const RngStream& rng,
                   PrivacyBudget& budget);

}  // namespace hst
