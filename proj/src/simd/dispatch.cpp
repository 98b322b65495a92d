#include <cstdlib>
#include <cstring>

#include "hst/simd/kernels.hpp"

namespace hst::simd {

namespace {

struct Selected {
  assign_fn assign;
  update_min_fn update_min;
  const char* name;
};

Selected select() {
#if defined(__x86_64__) || defined(_M_X64)
  const char* force = std::getenv("HST_KERNEL");
  bool want_scalar = force && std::strcmp(force, "scalar") == 0;
  bool want_avx2 = force && std::strcmp(force, "avx2") == 0;
  if (!want_scalar && (want_avx2 || __builtin_cpu_supports("avx2")))
    return {assign_avx2, update_min_sqdist_avx2, "avx2"};
#endif
  return {assign_scalar, update_min_sqdist_scalar, "scalar"};
}

const Selected& active() {
  static const Selected s = select();
  return s;
}

}  // namespace

void assign(const double* pts, std::size_t n, std::size_t d,
            const double* centers, std::size_t k, int z,
            std::uint32_t* assignment_out, double* cost_out) {
  active().assign(pts, n, d, centers, k, z, assignment_out, cost_out);
}

void update_min_sqdist(const double* pts, std::size_t n, std::size_t d,
                       const double* center, double* min_sq_inout) {
  active().update_min(pts, n, d, center, min_sq_inout);
}

const char* active_kernel() { return active().name; }

}  // namespace hst::simd
