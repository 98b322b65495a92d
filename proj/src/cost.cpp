#include "hst/cost.hpp"

#include "hst/errors.hpp"
#include "hst/simd/kernels.hpp"

namespace hst {

std::vector<double> flatten_centers(const std::vector<Point>& centers,
                                    std::size_t dim) {
  std::vector<double> flat;
  flat.reserve(centers.size() * dim);
  for (const auto& c : centers) {
    if (c.size() != dim) throw ConfigError("center dimension mismatch");
    flat.insert(flat.end(), c.begin(), c.end());
  }
  return flat;
}

static void check_cost_args(const std::vector<Point>& centers, int z) {
  if (centers.empty()) throw ConfigError("cost requires at least one center");
  if (z != 1 && z != 2) throw ConfigError("cost exponent must be 1 or 2");
}

double clustering_cost(const Dataset& data, const std::vector<Point>& centers,
                       int z) {
  check_cost_args(centers, z);
  auto flat = flatten_centers(centers, data.dim());
  double cost = 0.0;
  simd::assign(data.raw(), data.size(), data.dim(), flat.data(),
               centers.size(), z, nullptr, &cost);
  return cost;
}

double assign_points(const Dataset& data, const std::vector<Point>& centers,
                     int z, std::vector<std::uint32_t>& assignment_out) {
  check_cost_args(centers, z);
  auto flat = flatten_centers(centers, data.dim());
  assignment_out.resize(data.size());
  double cost = 0.0;
  simd::assign(data.raw(), data.size(), data.dim(), flat.data(),
               centers.size(), z, assignment_out.data(), &cost);
  return cost;
}

}  // namespace hst
