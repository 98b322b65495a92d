#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hst {

using Point = std::vector<double>;

// Row-major flat point storage. Clustering code assumes coordinates are
// already normalized into the ball B(0, lambda); raw user data goes
// through normalize() first.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> coords);

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  Point point_copy(std::size_t i) const;
  void push_back(std::span<const double> p);

  const double* raw() const { return coords_.data(); }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

// Affine map recorded by normalize(): x_norm = (x_raw - shift) * scale.
struct NormalizeTransform {
  std::vector<double> shift;
  double scale = 1.0;

  Point to_raw(std::span<const double> normalized) const;
  Point to_normalized(std::span<const double> raw) const;
};

struct NormalizedData {
  Dataset data;
  NormalizeTransform transform;
  double lambda = 1.0;
};

// Shifts the bounding-box midpoint to the origin and rescales so the
// largest point norm is lambda * (1 - 1e-9), which keeps every point
// strictly inside B(0, lambda). If all points coincide the scale stays 1.
// Throws DataError on an empty dataset or non-finite coordinates.
NormalizedData normalize(const Dataset& raw, double lambda);

double l2_norm(std::span<const double> p);
double l2_dist(std::span<const double> a, std::span<const double> b);
double sq_dist(std::span<const double> a, std::span<const double> b);

}  // namespace hst
