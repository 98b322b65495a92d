#pragma once

#include <cstdint>
#include <vector>

#include "hst/dataset.hpp"
#include "hst/rng.hpp"

namespace hst {

// Target dimension for clustering k centers: ceil(4 * log2(k + 2)).
std::size_t jl_target_dim(std::size_t k);

// Gaussian random projection onto target_dim coordinates, entries
// N(0,1)/sqrt(target_dim). When the data dimension is already at or below
// the target the map is the identity. Data-independent: safe to build
// before touching points.
class JlMap {
 public:
  JlMap(std::size_t dim_in, std::size_t dim_out, RngStream rng);
  static JlMap identity(std::size_t dim);

  bool is_identity() const { return identity_; }
  std::size_t dim_in() const { return dim_in_; }
  std::size_t dim_out() const { return dim_out_; }

  Point apply(std::span<const double> x) const;
  Dataset apply_all(const Dataset& data) const;

  // Minimum-norm preimage A^T (A A^T)^{-1} y. Maps a center found in the
  // projected space back to a representative in the original space.
  Point pull_back(std::span<const double> y) const;

 private:
  JlMap() = default;
  std::size_t dim_in_ = 0;
  std::size_t dim_out_ = 0;
  bool identity_ = true;
  std::vector<double> rows_;  // dim_out x dim_in, row-major
};

}  // namespace hst
