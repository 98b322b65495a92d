#include "hst/median.hpp"

#include <algorithm>
#include <cmath>

#include "hst/errors.hpp"

namespace hst {

double WeightedPoints::total_weight() const {
  if (weights.empty()) return static_cast<double>(pts.size());
  double w = 0.0;
  for (double v : weights) w += v;
  return w;
}

namespace {

// |y| + 2L ln((1 + e^{-|y|/L}) / 2), written with log1p so the tail does
// not underflow to -inf * 0 games for large |y|/L.
double smoothed_norm(double r, double smooth) {
  return r + 2.0 * smooth * (std::log1p(std::exp(-r / smooth)) - std::log(2.0));
}

// Gradient magnitude factor tanh(r / 2L) / r; finite limit 1/(2L) at r = 0.
double smoothed_grad_factor(double r, double smooth) {
  if (r < 1e-12 * smooth) return 0.5 / smooth;
  return std::tanh(r / (2.0 * smooth)) / r;
}

void project_to_ball(Point& x, double radius) {
  double n = l2_norm(x);
  if (n > radius) {
    double s = radius / n;
    for (double& c : x) c *= s;
  }
}

struct Eval {
  double value = 0.0;
  Point grad;
};

// F(x) = (1/W) sum_i w_i f(x - p_i) + <b, x> and its gradient.
Eval eval_objective(const WeightedPoints& in, const Point& x, double smooth,
                    const Point& linear, double inv_w) {
  std::size_t d = x.size();
  Eval ev;
  ev.grad.assign(d, 0.0);
  Point diff(d);
  for (std::size_t i = 0; i < in.pts.size(); ++i) {
    const Point& p = in.pts[i];
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      diff[j] = x[j] - p[j];
      r2 += diff[j] * diff[j];
    }
    double r = std::sqrt(r2);
    double w = in.weight(i);
    ev.value += w * smoothed_norm(r, smooth);
    double factor = w * smoothed_grad_factor(r, smooth);
    for (std::size_t j = 0; j < d; ++j) ev.grad[j] += factor * diff[j];
  }
  ev.value *= inv_w;
  for (std::size_t j = 0; j < d; ++j) {
    ev.grad[j] = ev.grad[j] * inv_w + linear[j];
    ev.value += linear[j] * x[j];
  }
  return ev;
}

}  // namespace

Point weighted_mean(const WeightedPoints& input) {
  if (input.pts.empty()) throw DataError("empty dataset");
  std::size_t d = input.pts[0].size();
  Point mean(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < input.pts.size(); ++i) {
    double w = input.weight(i);
    total += w;
    for (std::size_t j = 0; j < d; ++j) mean[j] += w * input.pts[i][j];
  }
  if (total <= 0.0) throw DataError("nonpositive total weight");
  for (double& c : mean) c /= total;
  return mean;
}

Point dp_one_median(const WeightedPoints& input, const OneMedianConfig& cfg,
                    RngStream& rng, PrivacyBudget& budget) {
  if (input.pts.empty()) throw DataError("empty dataset");
  if (!(cfg.lambda > 0.0) || !(cfg.lambda_smooth > 0.0)) {
    throw ConfigError("one-median radii must be positive");
  }
  std::size_t d = input.pts[0].size();
  double total = input.total_weight();
  if (total <= 0.0) throw DataError("nonpositive total weight");
  double inv_w = 1.0 / total;
  double smooth = cfg.lambda_smooth;

  double gamma = cfg.gamma_grad > 0.0
                     ? cfg.gamma_grad
                     : 0.01 * std::sqrt(static_cast<double>(d)) /
                           static_cast<double>(input.pts.size());

  // Linear perturbation: uniform direction, norm ~ Gamma(d, 2g/(eps W)).
  Point linear(d, 0.0);
  if (!std::isinf(cfg.epsilon)) {
    double dir_norm = 0.0;
    do {
      for (std::size_t j = 0; j < d; ++j) linear[j] = rng.gaussian();
      dir_norm = l2_norm(linear);
    } while (dir_norm == 0.0);
    double gamma_sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      gamma_sum += -std::log(rng.uniform01());
    }
    double magnitude = gamma_sum * 2.0 * gamma / (cfg.epsilon * total);
    for (std::size_t j = 0; j < d; ++j) {
      linear[j] = linear[j] / dir_norm * magnitude;
    }
  }
  budget.charge("one-median", cfg.epsilon);

  Point x = weighted_mean(input);
  project_to_ball(x, cfg.lambda);
  Eval cur = eval_objective(input, x, smooth, linear, inv_w);

  // The smoothed norm has curvature at most 1/(2L), so 2L is a safe unit
  // step; backtracking handles the linear term and the projection.
  double step = 2.0 * smooth;
  Point trial(d);
  for (int it = 0; it < cfg.max_iters; ++it) {
    double gnorm = l2_norm(cur.grad);
    if (gnorm < cfg.grad_tol) break;
    step = std::min(step * 2.0, 1e6 * smooth);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = x[j] - step * cur.grad[j];
      project_to_ball(trial, cfg.lambda);
      double move2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double m = trial[j] - x[j];
        move2 += m * m;
      }
      if (move2 == 0.0) break;
      Eval ev = eval_objective(input, trial, smooth, linear, inv_w);
      if (ev.value <= cur.value - 1e-4 / step * move2) {
        x = trial;
        cur = ev;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return x;
}

Point dp_one_mean(const WeightedPoints& input, double epsilon, double lambda,
                  RngStream& rng, PrivacyBudget& budget, bool* degenerate) {
  if (input.pts.empty()) throw DataError("empty dataset");
  std::size_t d = input.pts[0].size();
  bool noiseless = std::isinf(epsilon);
  double half = epsilon / 2.0;

  Point sum(d, 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < input.pts.size(); ++i) {
    double w = input.weight(i);
    count += w;
    for (std::size_t j = 0; j < d; ++j) sum[j] += w * input.pts[i][j];
  }
  double sum_scale =
      noiseless ? 0.0 : 2.0 * static_cast<double>(d) * lambda / half;
  for (std::size_t j = 0; j < d; ++j) sum[j] += laplace_sample(rng, sum_scale);
  count += laplace_sample(rng, noiseless ? 0.0 : 2.0 / epsilon);
  budget.charge("one-mean-sum", half);
  budget.charge("one-mean-count", half);

  if (degenerate) *degenerate = false;
  // Strict: an exact count of one (a real single-point cluster in
  // noise-disabled mode) still has a well defined mean.
  if (count < 1.0) {
    if (degenerate) *degenerate = true;
    return Point(d, 0.0);
  }
  Point out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = sum[j] / count;
  project_to_ball(out, lambda);
  return out;
}

Point weiszfeld(const WeightedPoints& input, int max_iters, double tol) {
  if (input.pts.empty()) throw DataError("empty dataset");
  std::size_t d = input.pts[0].size();
  Point x = weighted_mean(input);
  Point num(d);
  for (int it = 0; it < max_iters; ++it) {
    std::fill(num.begin(), num.end(), 0.0);
    double den = 0.0;
    double coincident = 0.0;  // weight sitting exactly on the iterate
    for (std::size_t i = 0; i < input.pts.size(); ++i) {
      const Point& p = input.pts[i];
      double r = l2_dist(x, p);
      double w = input.weight(i);
      if (r < 1e-15) {
        coincident += w;
        continue;
      }
      double f = w / r;
      den += f;
      for (std::size_t j = 0; j < d; ++j) num[j] += f * p[j];
    }
    if (den == 0.0) break;  // all mass on the iterate
    if (coincident > 0.0) {
      // Iterate sits on a data point. It is optimal when the pull of the
      // others does not exceed that point's weight; otherwise damp the
      // step by the ratio so the fixed point stays attracting.
      double pull2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double r = num[j] - den * x[j];
        pull2 += r * r;
      }
      double pull = std::sqrt(pull2);
      if (pull <= coincident) break;
      double keep = coincident / pull;
      double move2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double nx = (1.0 - keep) * (num[j] / den) + keep * x[j];
        double m = nx - x[j];
        move2 += m * m;
        x[j] = nx;
      }
      if (std::sqrt(move2) <= tol * (1.0 + l2_norm(x))) break;
      continue;
    }
    double move2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double nx = num[j] / den;
      double m = nx - x[j];
      move2 += m * m;
      x[j] = nx;
    }
    if (std::sqrt(move2) <= tol * (1.0 + l2_norm(x))) break;
  }
  return x;
}

}  // namespace hst
