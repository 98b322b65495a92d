#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "hst/simd/kernels.hpp"

// Points are processed four per tile, one vector lane per point. Squared
// distances accumulate coordinate by coordinate exactly like the scalar
// reference, so every lane reproduces the scalar result bit for bit.
namespace hst::simd {

namespace {

constexpr std::size_t kMaxStackDim = 64;

// Scalar continuation for the final n % 4 points. Accumulates into the
// same lane slots the vector loop used, preserving the canonical 4-lane
// reduction order.
void assign_tail(const double* pts, std::size_t begin, std::size_t n,
                 std::size_t d, const double* centers, std::size_t k, int z,
                 std::uint32_t* assignment_out, double lane[4]) {
  for (std::size_t i = begin; i < n; ++i) {
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
}

}  // namespace

void assign_avx2(const double* pts, std::size_t n, std::size_t d,
                 const double* centers, std::size_t k, int z,
                 std::uint32_t* assignment_out, double* cost_out) {
  __m256d cost_acc = _mm256_setzero_pd();
  const std::size_t tiles = n / 4;
  __m256d coord[kMaxStackDim];

  for (std::size_t t = 0; t < tiles; ++t) {
    const double* p0 = pts + (4 * t + 0) * d;
    const double* p1 = pts + (4 * t + 1) * d;
    const double* p2 = pts + (4 * t + 2) * d;
    const double* p3 = pts + (4 * t + 3) * d;
    const bool buffered = d <= kMaxStackDim;
    if (buffered)
      for (std::size_t j = 0; j < d; ++j)
        coord[j] = _mm256_set_pd(p3[j], p2[j], p1[j], p0[j]);

    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best_c = _mm256_setzero_pd();
    for (std::size_t c = 0; c < k; ++c) {
      const double* ctr = centers + c * d;
      __m256d sq = _mm256_setzero_pd();
      for (std::size_t j = 0; j < d; ++j) {
        __m256d v = buffered ? coord[j]
                             : _mm256_set_pd(p3[j], p2[j], p1[j], p0[j]);
        __m256d diff = _mm256_sub_pd(v, _mm256_set1_pd(ctr[j]));
        sq = _mm256_add_pd(sq, _mm256_mul_pd(diff, diff));
      }
      __m256d lt = _mm256_cmp_pd(sq, best, _CMP_LT_OQ);
      best = _mm256_blendv_pd(best, sq, lt);
      best_c = _mm256_blendv_pd(best_c, _mm256_set1_pd(double(c)), lt);
    }

    if (assignment_out) {
      double idx[4];
      _mm256_storeu_pd(idx, best_c);
      for (int l = 0; l < 4; ++l)
        assignment_out[4 * t + l] = static_cast<std::uint32_t>(idx[l]);
    }
    __m256d contrib = (z == 1) ? _mm256_sqrt_pd(best) : best;
    cost_acc = _mm256_add_pd(cost_acc, contrib);
  }

  double lane[4];
  _mm256_storeu_pd(lane, cost_acc);
  assign_tail(pts, tiles * 4, n, d, centers, k, z, assignment_out, lane);
  if (cost_out) *cost_out = ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

void update_min_sqdist_avx2(const double* pts, std::size_t n, std::size_t d,
                            const double* center, double* min_sq_inout) {
  const std::size_t tiles = n / 4;
  for (std::size_t t = 0; t < tiles; ++t) {
    const double* p0 = pts + (4 * t + 0) * d;
    const double* p1 = pts + (4 * t + 1) * d;
    const double* p2 = pts + (4 * t + 2) * d;
    const double* p3 = pts + (4 * t + 3) * d;
    __m256d sq = _mm256_setzero_pd();
    for (std::size_t j = 0; j < d; ++j) {
      __m256d v = _mm256_set_pd(p3[j], p2[j], p1[j], p0[j]);
      __m256d diff = _mm256_sub_pd(v, _mm256_set1_pd(center[j]));
      sq = _mm256_add_pd(sq, _mm256_mul_pd(diff, diff));
    }
    __m256d cur = _mm256_loadu_pd(min_sq_inout + 4 * t);
    _mm256_storeu_pd(min_sq_inout + 4 * t, _mm256_min_pd(sq, cur));
  }
  update_min_sqdist_scalar(pts + tiles * 4 * d, n - tiles * 4, d, center,
                           min_sq_inout + tiles * 4);
}

}  // namespace hst::simd

#endif  // x86_64
