#pragma once

#include <cstdint>
#include <vector>

#include "hst/cost.hpp"
#include "hst/pipeline.hpp"
#include "hst/privacy.hpp"
#include "hst/quadtree.hpp"

namespace hst {

// Iterated private k-means. Each round rebuilds a tree over the points
// whose current centers are well cut, solves the k-center placement with
// squared-diameter charges, and carries the worst badly-cut centers along
// unchanged. Rounds split the budget evenly; within a round the weights
// spend half on expansion and half on a fresh estimate.
struct KMeansConfig {
  double lambda = 1.0;
  double alpha = 0.5;  // badly-cut carry fraction, in (0, 1)
  double pi = 0.0;     // cut probability bound; 0 selects 1/(4 log2 n)
  int rounds = 0;      // 0 selects ceil(log2 n)
  bool mean_init = false;  // seed round 1 from a private 1-mean
};

// A center is badly cut when the tree cell `offset` levels above the
// scale of its cluster's average cost fails to contain it comfortably.
// Severity orders how badly; callers cap how many they accept.
struct BadlyCutReport {
  std::vector<std::size_t> indices;  // into the center list, severity order
  std::vector<double> severity;
};

struct KMeansRound {
  std::size_t centers_in = 0;
  std::size_t carried = 0;         // badly-cut centers kept as-is
  std::size_t filtered_points = 0; // points removed with their centers
  double tree_cost = 0.0;
  double euclid_cost = 0.0;
  double epsilon = 0.0;
};

struct KMeansResult {
  Solution solution;  // z = 2; may hold more than k centers
  PrivacyBudget budget;
  std::vector<KMeansRound> rounds;
};

KMeansResult dp_kmeans(const Dataset& data, int k, double epsilon,
                       std::uint64_t seed, const KMeansConfig& cfg = {});

// Prunes an oversized center set down to exactly k by repeatedly removing
// the center whose removal raises the cost of the noisy-weighted center
// instance the least (ties to the lowest index). Output centers are a
// subset of the input set. Spends epsilon on the per-cluster weights,
// which touch disjoint points and so compose in parallel.
Solution reverse_greedy(const Dataset& data, const std::vector<Point>& centers,
                        int k, int z, double epsilon, RngStream& rng,
                        PrivacyBudget& budget);

// dp_kmeans on half the budget, then reverse_greedy on the other half
// whenever the round loop kept more than k centers.
KMeansResult kmeans_exact_k(const Dataset& data, int k, double epsilon,
                            std::uint64_t seed, const KMeansConfig& cfg = {});

}  // namespace hst
