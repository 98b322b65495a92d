#include <cmath>
#include <limits>

#include "hst/simd/kernels.hpp"

namespace hst::simd {

void assign_scalar(const double* pts, std::size_t n, std::size_t d,
                   const double* centers, std::size_t k, int z,
                   std::uint32_t* assignment_out, double* cost_out) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = pts + i * d;
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double* ctr = centers + c * d;
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double diff = p[j] - ctr[j];
        sq += diff * diff;
      }
      if (sq < best) {
        best = sq;
        best_c = static_cast<std::uint32_t>(c);
      }
    }
    if (assignment_out) assignment_out[i] = best_c;
    lane[i % 4] += (z == 1) ? std::sqrt(best) : best;
  }
  if (cost_out) *cost_out = ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

void update_min_sqdist_scalar(const double* pts, std::size_t n, std::size_t d,
                              const double* center, double* min_sq_inout) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = pts + i * d;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double diff = p[j] - center[j];
      sq += diff * diff;
    }
    if (sq < min_sq_inout[i]) min_sq_inout[i] = sq;
  }
}

}  // namespace hst::simd
