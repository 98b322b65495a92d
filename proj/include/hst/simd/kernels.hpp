#pragma once

#include <cstddef>
#include <cstdint>

// Hot inner loops of cost evaluation and center assignment. Two variants
// exist: a scalar reference and an AVX2 version; the dispatcher picks one
// at startup based on CPU support (override with HST_KERNEL=scalar|avx2).
//
// Both variants are bitwise-equivalent by construction:
//  - per point, squared distances accumulate coordinate by coordinate in
//    index order, with no FMA contraction (the kernel TUs are built with
//    -ffp-contract=off and without -mfma);
//  - the nearest center is the strictly smallest squared distance, ties
//    keeping the lowest center index;
//  - the cost sum is a 4-lane chunked reduction: lane l accumulates the
//    contributions of points with index = l (mod 4) in index order, and
//    lanes combine as ((l0+l1)+l2)+l3. Missing tail points contribute 0.
// This fixed reduction makes the reported cost independent of which
// variant ran.
namespace hst::simd {

// Nearest-center assignment plus clustering cost. `z` is the cost
// exponent: 1 sums distances, 2 sums squared distances. `assignment_out`
// may be null when only the cost is needed.
using assign_fn = void (*)(const double* pts, std::size_t n, std::size_t d,
                           const double* centers, std::size_t k, int z,
                           std::uint32_t* assignment_out, double* cost_out);

// min_sq_inout[i] <- min(min_sq_inout[i], sqdist(pts[i], center)).
using update_min_fn = void (*)(const double* pts, std::size_t n,
                               std::size_t d, const double* center,
                               double* min_sq_inout);

void assign_scalar(const double* pts, std::size_t n, std::size_t d,
                   const double* centers, std::size_t k, int z,
                   std::uint32_t* assignment_out, double* cost_out);
void update_min_sqdist_scalar(const double* pts, std::size_t n, std::size_t d,
                              const double* center, double* min_sq_inout);

#if defined(__x86_64__) || defined(_M_X64)
void assign_avx2(const double* pts, std::size_t n, std::size_t d,
                 const double* centers, std::size_t k, int z,
                 std::uint32_t* assignment_out, double* cost_out);
void update_min_sqdist_avx2(const double* pts, std::size_t n, std::size_t d,
                            const double* center, double* min_sq_inout);
#endif

// Dispatched entry points.
void assign(const double* pts, std::size_t n, std::size_t d,
            const double* centers, std::size_t k, int z,
            std::uint32_t* assignment_out, double* cost_out);
void update_min_sqdist(const double* pts, std::size_t n, std::size_t d,
                       const double* center, double* min_sq_inout);

// Name of the variant the dispatcher selected ("scalar" or "avx2").
const char* active_kernel();

}  // namespace hst::simd
