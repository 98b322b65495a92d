#include "hst/pipeline.hpp"

#include <cmath>
#include <string>

#include "hst/errors.hpp"
#include "hst/jl.hpp"
#include "hst/project_back.hpp"

namespace hst {

TreeParams tree_params_for(const TreeClusterConfig& cfg, std::size_t n,
                           std::size_t d) {
  return cfg.experimental
             ? experimental_tree_params(cfg.alpha_depth, d, cfg.lambda)
             : theory_tree_params(n, d, cfg.lambda);
}

MakePrivateOptions noise_opts_for(const TreeClusterConfig& cfg, std::size_t d,
                                  double epsilon) {
  MakePrivateOptions opt;
  if (cfg.experimental && !std::isinf(epsilon))
    opt.tau_override = 10.0 * cfg.beta * double(d) / epsilon;
  return opt;
}

TreePipelineResult dp_kmedian(const Dataset& data, int k, double epsilon,
                              std::uint64_t seed,
                              const TreeClusterConfig& cfg) {
  if (data.empty()) throw DataError("no points");
  const std::size_t d = data.dim();
  TreePipelineResult res{.solution = {},
                         .tree_cost = 0.0,
                         .budget = PrivacyBudget(epsilon),
                         .tree = nullptr,
                         .weights = {}};

  TreeParams params = tree_params_for(cfg, data.size(), d);
  res.tree = std::make_shared<Quadtree>(
      data, RngStream(seed, kShiftStream), params);
  res.weights =
      make_private(*res.tree, epsilon, RngStream(seed, kWeightStream),
                   res.budget, noise_opts_for(cfg, d, epsilon));

  TreeDpResult dp = dp_solve(*res.tree, res.weights, k, cfg.z);
  res.tree_cost = dp.cost;
  res.solution.centers = std::move(dp.centers);
  res.solution.z = cfg.z;
  res.solution.cost = assign_points(data, res.solution.centers, cfg.z,
                                    res.solution.assignment);
  return res;
}

HighDimResult kmedian_high_dim(const Dataset& data, int k, double epsilon,
                               std::uint64_t seed, const HighDimConfig& cfg) {
  if (data.empty()) throw DataError("no points");
  if (k < 1) throw ConfigError("center count must be positive");
  const std::size_t d = data.dim();
  const double half = epsilon / 2.0;

  HighDimResult res{.solution = {},
                    .tree_cost = 0.0,
                    .projected_dim = 0,
                    .budget = PrivacyBudget(epsilon)};

  // Projection and its normalization are data-independent in distribution
  // but the rescale is computed from projected points; that is fine, the
  // tree stage is what spends budget on them.
  JlMap map = d > jl_target_dim(std::size_t(k))
                  ? JlMap(d, jl_target_dim(std::size_t(k)),
                          RngStream(seed, "jl-map"))
                  : JlMap::identity(d);
  res.projected_dim = map.dim_out();

  NormalizedData proj;
  if (map.is_identity()) {
    proj.data = data;
    proj.transform.shift.assign(d, 0.0);
    proj.transform.scale = 1.0;
    proj.lambda = cfg.tree.lambda;
  } else {
    proj = normalize(map.apply_all(data), cfg.tree.lambda);
  }

  TreeClusterConfig tree_cfg = cfg.tree;
  tree_cfg.z = 1;
  TreePipelineResult low = dp_kmedian(proj.data, k, half, seed, tree_cfg);
  res.budget.charge("tree-weights", half);
  res.tree_cost = low.tree_cost;

  // Cluster memberships come from the low-dimensional solution; the
  // recovery below only sees each cluster's own points.
  std::vector<std::vector<std::uint32_t>> members(low.solution.centers.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    members[low.solution.assignment[i]].push_back(std::uint32_t(i));

  ProjectBackParams pb;
  pb.t_sample = cfg.t_sample;
  pb.d_close = cfg.d_close;
  pb.r_small = cfg.r_small;
  pb.lambda = cfg.tree.lambda;
  pb.lambda_smooth = cfg.lambda_smooth;
  pb.gamma_grad = cfg.gamma_grad;
  pb.alpha_apx = std::pow(double(map.dim_out()), 1.5) *
                 std::log2(double(data.size()) + 2.0);

  RngStream pb_rng(seed, "project-back");
  const double apx_to_raw =
      proj.transform.scale > 0 ? 1.0 / proj.transform.scale : 1.0;

  std::vector<Point> centers;
  centers.reserve(low.solution.centers.size());
  double max_recovery_eps = 0.0;
  for (std::size_t c = 0; c < low.solution.centers.size(); ++c) {
    // Anchor: the tree center mapped back to the original space.
    Point y = proj.transform.to_raw(low.solution.centers[c]);
    Point anchor = map.pull_back(y);

    if (members[c].empty()) {
      centers.push_back(std::move(anchor));
      continue;
    }

    std::vector<double> coords;
    coords.reserve(members[c].size() * d);
    double tree_cost_c = 0.0;
    for (std::uint32_t i : members[c]) {
      auto p = data.point(i);
      coords.insert(coords.end(), p.begin(), p.end());
      tree_cost_c +=
          low.tree->tree_distance(proj.data.point(i), low.solution.centers[c]);
    }
    Dataset cluster(d, std::move(coords));

    // The tree cost lives in the projected, renormalized space; undo the
    // rescale so the merge radius compares against raw distances.
    double apx_cost = tree_cost_c * apx_to_raw;

    PrivacyBudget local(half);
    Point center = project_back(cluster, anchor, apx_cost, pb, half,
                                pb_rng.keyed(c), local);
    max_recovery_eps = std::max(max_recovery_eps, local.charged());
    centers.push_back(std::move(center));
  }
  // One parallel group: clusters are disjoint, so the recovery stage costs
  // its per-cluster maximum.
  res.budget.charge_parallel("project-back", max_recovery_eps);

  res.solution.centers = std::move(centers);
  res.solution.z = 1;
  res.solution.cost = assign_points(data, res.solution.centers, 1,
                                    res.solution.assignment);
  return res;
}

}  // namespace hst
