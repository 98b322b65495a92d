#include "hst/dataset.hpp"

#include <cmath>
#include <limits>

#include "hst/errors.hpp"

namespace hst {

Dataset::Dataset(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw DataError("dataset dimension must be positive");
  if (coords_.size() % dim_ != 0)
    throw DataError("coordinate count is not a multiple of the dimension");
}

Point Dataset::point_copy(std::size_t i) const {
  auto p = point(i);
  return Point(p.begin(), p.end());
}

void Dataset::push_back(std::span<const double> p) {
  if (dim_ == 0) dim_ = p.size();
  if (p.size() != dim_) throw DataError("point dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

Point NormalizeTransform::to_raw(std::span<const double> normalized) const {
  Point out(normalized.size());
  for (std::size_t j = 0; j < normalized.size(); ++j)
    out[j] = normalized[j] / scale + shift[j];
  return out;
}

Point NormalizeTransform::to_normalized(std::span<const double> raw) const {
  Point out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j)
    out[j] = (raw[j] - shift[j]) * scale;
  return out;
}

NormalizedData normalize(const Dataset& raw, double lambda) {
  if (raw.empty()) throw DataError("empty dataset");
  if (!(lambda > 0)) throw DataError("lambda must be positive");
  const std::size_t n = raw.size();
  const std::size_t d = raw.dim();

  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    auto p = raw.point(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(p[j])) throw DataError("invalid coordinate");
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  }

  NormalizeTransform t;
  t.shift.resize(d);
  for (std::size_t j = 0; j < d; ++j) t.shift[j] = 0.5 * (lo[j] + hi[j]);

  double max_norm = 0.0;
  std::vector<double> shifted(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = raw.point(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double v = p[j] - t.shift[j];
      shifted[i * d + j] = v;
      sq += v * v;
    }
    max_norm = std::max(max_norm, std::sqrt(sq));
  }

  t.scale = max_norm > 0 ? lambda * (1.0 - 1e-9) / max_norm : 1.0;
  for (double& v : shifted) v *= t.scale;

  return NormalizedData{Dataset(d, std::move(shifted)), std::move(t), lambda};
}

double l2_norm(std::span<const double> p) {
  double sq = 0.0;
  for (double v : p) sq += v * v;
  return std::sqrt(sq);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double diff = a[j] - b[j];
    sq += diff * diff;
  }
  return sq;
}

double l2_dist(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(sq_dist(a, b));
}

}  // namespace hst
