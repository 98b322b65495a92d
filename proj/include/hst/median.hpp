#pragma once

#include <vector>

#include "hst/dataset.hpp"
#include "hst/privacy.hpp"
#include "hst/rng.hpp"

namespace hst {

// Weighted point list for the small solvers. Weights default to 1.
struct WeightedPoints {
  std::vector<Point> pts;
  std::vector<double> weights;  // empty = all ones

  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 : weights[i];
  }
  double total_weight() const;
};

struct OneMedianConfig {
  double epsilon = 1.0;        // infinite disables the perturbation
  double lambda = 1.0;         // output clamped to B(0, lambda)
  double lambda_smooth = 0.2;  // smoothing radius of the surrogate norm
  double gamma_grad = 0.0;     // 0 selects 0.01 * sqrt(d) / n
  int max_iters = 500;
  double grad_tol = 1e-8;
};

// Private 1-median by objective perturbation. Minimizes
//   F(x) = (1/W) sum_i w_i f(x - p_i) + <b, x>,
// where f(y) = |y| + 2L * ln((1 + exp(-|y|/L)) / 2) is the smoothed norm
// (gradient tanh(|y|/2L) * y/|y|), and b is a random linear term with
// direction uniform on the sphere and norm ~ Gamma(d, 2*gamma/(epsilon*W)).
// Solved by gradient descent with Armijo backtracking; iterates projected
// into B(0, lambda). Charges epsilon once.
Point dp_one_median(const WeightedPoints& input, const OneMedianConfig& cfg,
                    RngStream& rng, PrivacyBudget& budget);

// Private 1-mean: (sum + per-coordinate Lap(2 d lambda / (eps/2))) divided
// by (n + Lap(2/eps)), clamped to B(0, lambda). A noisy count below 1
// yields the origin and sets *degenerate; an exact count of 1 (a real
// single-point cluster in noise-disabled mode) keeps its well defined
// mean. Charges eps/2 + eps/2.
Point dp_one_mean(const WeightedPoints& input, double epsilon, double lambda,
                  RngStream& rng, PrivacyBudget& budget,
                  bool* degenerate = nullptr);

// Non-private geometric median by Weiszfeld fixed-point iteration. An
// iterate that lands on an input point is nudged off the singularity.
Point weiszfeld(const WeightedPoints& input, int max_iters = 500,
                double tol = 1e-9);

// Exact weighted mean (the non-private 1-mean).
Point weighted_mean(const WeightedPoints& input);

}  // namespace hst
