#include "hst/jl.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "hst/errors.hpp"

namespace hst {

std::size_t jl_target_dim(std::size_t k) {
  return std::size_t(std::ceil(4.0 * std::log2(double(k) + 2.0)));
}

JlMap::JlMap(std::size_t dim_in, std::size_t dim_out, RngStream rng)
    : dim_in_(dim_in), dim_out_(dim_out) {
  if (dim_in == 0 || dim_out == 0) throw ConfigError("projection needs dims");
  if (dim_out >= dim_in) {
    dim_out_ = dim_in;
    identity_ = true;
    return;
  }
  identity_ = false;
  rows_.resize(dim_out * dim_in);
  const double inv = 1.0 / std::sqrt(double(dim_out));
  for (double& v : rows_) v = rng.gaussian() * inv;
}

JlMap JlMap::identity(std::size_t dim) {
  JlMap m;
  m.dim_in_ = dim;
  m.dim_out_ = dim;
  m.identity_ = true;
  return m;
}

Point JlMap::apply(std::span<const double> x) const {
  if (x.size() != dim_in_) throw ConfigError("projection dimension mismatch");
  if (identity_) return Point(x.begin(), x.end());
  Point out(dim_out_, 0.0);
  for (std::size_t r = 0; r < dim_out_; ++r) {
    const double* row = rows_.data() + r * dim_in_;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_in_; ++j) acc += row[j] * x[j];
    out[r] = acc;
  }
  return out;
}

Dataset JlMap::apply_all(const Dataset& data) const {
  if (identity_) return data;
  std::vector<double> coords;
  coords.reserve(data.size() * dim_out_);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Point y = apply(data.point(i));
    coords.insert(coords.end(), y.begin(), y.end());
  }
  return Dataset(dim_out_, std::move(coords));
}

Point JlMap::pull_back(std::span<const double> y) const {
  if (y.size() != dim_out_) throw ConfigError("projection dimension mismatch");
  if (identity_) return Point(y.begin(), y.end());
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                            Eigen::RowMajor>;
  Eigen::Map<const Mat> a(rows_.data(), Eigen::Index(dim_out_),
                          Eigen::Index(dim_in_));
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), Eigen::Index(dim_out_));
  Eigen::MatrixXd gram = a * a.transpose();
  Eigen::VectorXd x = a.transpose() * gram.llt().solve(yv);
  return Point(x.data(), x.data() + dim_in_);
}

}  // namespace hst
