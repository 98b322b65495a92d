#pragma once

#include <cstdint>
#include <memory>
#include <string_view>

#include "hst/cost.hpp"
#include "hst/privacy.hpp"
#include "hst/quadtree.hpp"
#include "hst/tree_dp.hpp"

namespace hst {

// Stream labels shared between the sequential pipelines and the
// distributed simulator. Both sides derive randomness as
// RngStream(seed, label), so a run is pinned by (data, seed, config).
inline constexpr std::string_view kShiftStream = "tree-shifts";
inline constexpr std::string_view kWeightStream = "tree-noise";

struct TreeClusterConfig {
  int z = 1;
  double lambda = 1.0;  // data must already live in B(0, lambda)
  // Experimental tree shape: fixed depth alpha_depth * d and threshold
  // 10 * beta * d / epsilon instead of the conservative defaults.
  bool experimental = false;
  int alpha_depth = 12;
  double beta = 8.0;
};

// Shared resolution of tree shape and noise threshold, used by both the
// sequential pipelines and the distributed simulator.
TreeParams tree_params_for(const TreeClusterConfig& cfg, std::size_t n,
                           std::size_t d);
MakePrivateOptions noise_opts_for(const TreeClusterConfig& cfg, std::size_t d,
                                  double epsilon);

struct TreePipelineResult {
  Solution solution;       // centers and Euclidean cost
  double tree_cost = 0.0;  // optimum of the tree relaxation
  PrivacyBudget budget;
  std::shared_ptr<Quadtree> tree;  // geometry of the run
  NoisyWeights weights;
};

// k-median over a noisy quadtree: embed, weight privately, solve the
// k-center placement exactly on the weighted tree, report both the tree
// optimum and the Euclidean cost of the chosen centers. Spends all of
// epsilon on the tree weights.
TreePipelineResult dp_kmedian(const Dataset& data, int k, double epsilon,
                              std::uint64_t seed,
                              const TreeClusterConfig& cfg = {});

struct HighDimConfig {
  TreeClusterConfig tree;
  // project-back knobs; 0 keeps the derived defaults
  std::size_t t_sample = 0;
  double d_close = 1.0;
  double r_small = 0.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;
};

struct HighDimResult {
  Solution solution;  // centers in the original space
  double tree_cost = 0.0;
  std::size_t projected_dim = 0;
  PrivacyBudget budget;
};

// Full k-median pipeline: random projection to O(log k) dimensions, tree
// k-median there on epsilon/2, then a per-cluster recovery step in the
// original space on the other half. The recoveries touch disjoint
// clusters, so they compose in parallel and the ledger totals epsilon.
HighDimResult kmedian_high_dim(const Dataset& data, int k, double epsilon,
                               std::uint64_t seed,
                               const HighDimConfig& cfg = {});

}  // namespace hst
