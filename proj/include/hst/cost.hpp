#pragma once

#include <cstdint>
#include <vector>

#include "hst/dataset.hpp"

namespace hst {

// A clustering outcome. `cost` is the Euclidean clustering cost in the
// normalized coordinate space; z = 1 sums distances (k-median), z = 2 sums
// squared distances (k-means).
struct Solution {
  std::vector<Point> centers;
  int z = 1;
  double cost = 0.0;
  std::vector<std::uint32_t> assignment;
};

// sum over points of min over centers of dist(p, c)^z. Ties in the argmin
// go to the lowest center index. The summation order is fixed (4-lane
// chunked reduction), so the value does not depend on which kernel variant
// runs. Throws ConfigError on empty centers or z outside {1, 2}.
double clustering_cost(const Dataset& data, const std::vector<Point>& centers,
                       int z);

// Same, also reporting per-point nearest-center indices.
double assign_points(const Dataset& data, const std::vector<Point>& centers,
                     int z, std::vector<std::uint32_t>& assignment_out);

// Flattens centers into row-major storage for the kernels.
std::vector<double> flatten_centers(const std::vector<Point>& centers,
                                    std::size_t dim);

}  // namespace hst
