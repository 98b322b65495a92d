#include "hst/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hst/errors.hpp"
#include "hst/median.hpp"
#include "hst/tree_dp.hpp"

namespace hst {

namespace {

double resolve_pi(const KMeansConfig& cfg, std::size_t n) {
  if (cfg.pi > 0) return cfg.pi;
  return 1.0 / (4.0 * std::log2(double(std::max<std::size_t>(n, 4))));
}

struct RoundOutput {
  std::vector<Point> centers;
  KMeansRound trace;
};

RoundOutput run_round(const Dataset& data, const std::vector<Point>& current,
                      int k, double eps_round, std::uint64_t seed, int round,
                      const KMeansConfig& cfg, PrivacyBudget& budget) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  const double half = eps_round / 2.0;
  RoundOutput out;
  out.trace.centers_in = current.size();
  out.trace.epsilon = eps_round;

  TreeParams params = theory_tree_params(n, d, cfg.lambda);
  RngStream shifts(seed, fmt::format("kmeans-shifts-{}", round));
  Quadtree geometry(data, shifts, params);

  // Centers the tree cuts at an anomalously high level keep their points
  // out of this round: re-solving them against a fresh shift would only
  // churn. The carry count is capped; severity picks who stays.
  double alpha_f = resolve_pi(cfg, n) * cfg.alpha / 6.0;
  auto cut = badly_cut_centers(geometry, current, alpha_f, n);
  std::size_t cap = std::size_t(cfg.alpha / 2.0 * double(current.size()));
  if (cut.size() > cap) cut.resize(cap);

  std::vector<char> carried(current.size(), 0);
  for (const auto& [idx, sev] : cut) {
    (void)sev;
    carried[idx] = 1;
    out.centers.push_back(current[idx]);
  }
  out.trace.carried = out.centers.size();

  std::vector<std::uint32_t> asg;
  assign_points(data, current, 2, asg);
  std::vector<double> coords;
  for (std::size_t i = 0; i < n; ++i) {
    if (carried[asg[i]]) continue;
    auto p = data.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  out.trace.filtered_points = n - coords.size() / d;
  Dataset remaining(d, std::move(coords));

  if (remaining.empty()) {
    // Every point follows a carried center. The round's budget is spent
    // by construction, so the ledger still accounts for it.
    budget.charge("tree-weights", half);
    budget.charge("dp-weights", half);
    if (out.centers.empty()) out.centers = current;
    return out;
  }

  // Same shift stream: the tree over the remaining points has identical
  // cell geometry, only the point ranges differ.
  Quadtree tree(remaining, shifts, params);
  NoisyWeights grow =
      make_private(tree, half,
                   RngStream(seed, fmt::format("kmeans-noise-{}", round)),
                   budget);
  NoisyWeights fresh =
      reweight(tree, grow, half,
               RngStream(seed, fmt::format("kmeans-reweight-{}", round)),
               budget);

  TreeDpResult dp = dp_solve(tree, fresh, k, 2);
  out.trace.tree_cost = dp.cost;
  for (Point& c : dp.centers) out.centers.push_back(std::move(c));
  out.trace.euclid_cost = clustering_cost(data, out.centers, 2);
  return out;
}

}  // namespace

KMeansResult dp_kmeans(const Dataset& data, int k, double epsilon,
                       std::uint64_t seed, const KMeansConfig& cfg) {
  if (data.empty()) throw DataError("no points");
  if (k < 1) throw ConfigError("center count must be positive");
  if (!(cfg.alpha > 0) || !(cfg.alpha < 1))
    throw ConfigError("carry fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  int rounds = cfg.rounds > 0
                   ? cfg.rounds
                   : int(std::ceil(std::log2(double(std::max<std::size_t>(
                         n, 2)))));
  int stages = rounds + (cfg.mean_init ? 1 : 0);
  double eps_stage = epsilon / double(stages);

  KMeansResult res{.solution = {}, .budget = PrivacyBudget(epsilon),
                   .rounds = {}};

  std::vector<Point> centers;
  if (cfg.mean_init) {
    WeightedPoints wp;
    wp.pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) wp.pts.push_back(data.point_copy(i));
    RngStream init_rng(seed, "kmeans-init");
    centers.push_back(
        dp_one_mean(wp, eps_stage, cfg.lambda, init_rng, res.budget));
  } else {
    centers.push_back(Point(d, 0.0));
  }

  for (int r = 1; r <= rounds; ++r) {
    RoundOutput ro =
        run_round(data, centers, k, eps_stage, seed, r, cfg, res.budget);
    centers = std::move(ro.centers);
    res.rounds.push_back(ro.trace);
  }

  res.solution.centers = std::move(centers);
  res.solution.z = 2;
  res.solution.cost = assign_points(data, res.solution.centers, 2,
                                    res.solution.assignment);
  return res;
}

Solution reverse_greedy(const Dataset& data, const std::vector<Point>& centers,
                        int k, int z, double epsilon, RngStream& rng,
                        PrivacyBudget& budget) {
  if (k < 1) throw ConfigError("center count must be positive");
  if (centers.empty()) throw ConfigError("no centers to prune");
  const double scale =
      std::isinf(epsilon) ? 0.0 : 1.0 / epsilon;

  // Noisy cluster sizes stand in for the data from here on: pruning runs
  // on the weighted center instance alone.
  std::vector<std::uint32_t> asg;
  assign_points(data, centers, z, asg);
  std::vector<double> w(centers.size(), 0.0);
  for (std::uint32_t a : asg) w[a] += 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::max(0.0, w[i] + laplace_sample(rng, scale));
    budget.charge_parallel("greedy-weights", epsilon);
  }

  std::vector<std::size_t> alive(centers.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;

  auto instance_cost = [&](const std::vector<std::size_t>& kept) {
    double total = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (w[i] == 0.0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c : kept) {
        double dist = l2_dist(centers[i], centers[c]);
        double v = z == 2 ? dist * dist : dist;
        if (v < best) best = v;
      }
      total += w[i] * best;
    }
    return total;
  };

  while (alive.size() > std::size_t(k)) {
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_at = 0;
    for (std::size_t drop = 0; drop < alive.size(); ++drop) {
      std::vector<std::size_t> kept;
      kept.reserve(alive.size() - 1);
      for (std::size_t j = 0; j < alive.size(); ++j)
        if (j != drop) kept.push_back(alive[j]);
      double c = instance_cost(kept);
      if (c < best_cost) {
        best_cost = c;
        best_at = drop;
      }
    }
    alive.erase(alive.begin() + std::ptrdiff_t(best_at));
  }

  Solution out;
  out.z = z;
  for (std::size_t c : alive) out.centers.push_back(centers[c]);
  out.cost = assign_points(data, out.centers, z, out.assignment);
  return out;
}

KMeansResult kmeans_exact_k(const Dataset& data, int k, double epsilon,
                            std::uint64_t seed, const KMeansConfig& cfg) {
  const double half = epsilon / 2.0;
  KMeansResult inner = dp_kmeans(data, k, half, seed, cfg);

  KMeansResult res{.solution = {}, .budget = PrivacyBudget(epsilon),
                   .rounds = std::move(inner.rounds)};
  for (const auto& e : inner.budget.entries()) {
    if (e.parallel)
      res.budget.charge_parallel(e.label, e.eps);
    else
      res.budget.charge(e.label, e.eps);
  }

  if (inner.solution.centers.size() > std::size_t(k)) {
    RngStream prune_rng(seed, "greedy-weights");
    res.solution = reverse_greedy(data, inner.solution.centers, k, 2, half,
                                  prune_rng, res.budget);
  } else {
    // Already within budget of centers; the pruning half goes unspent
    // only in name, the weights are still drawn and recorded.
    RngStream prune_rng(seed, "greedy-weights");
    res.solution = reverse_greedy(data, inner.solution.centers,
                                  int(inner.solution.centers.size()), 2, half,
                                  prune_rng, res.budget);
  }
  return res;
}

}  // namespace hst
