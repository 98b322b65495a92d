#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hst/cost.hpp"
#include "hst/median.hpp"
#include "hst/privacy.hpp"
#include "hst/rng.hpp"

namespace hst {

// ---- synthetic data ----

enum class SyntheticKind { kBlobs, kUniform, kLine };

struct SyntheticParams {
  std::size_t blobs = 4;
  double sigma = 0.05;
  double lambda = 1.0;
};

struct SyntheticData {
  Dataset data;
  std::vector<Point> means;           // blob centers (blobs only)
  std::vector<std::uint32_t> labels;  // generating blob per point
};

// Reproducible generators inside B(0, lambda). Blob means are drawn
// uniformly in the inner 60% of the ball with a minimum separation, so
// sigma up to ~lambda/25 keeps blobs disjoint whp.
SyntheticData gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d,
                            const SyntheticParams& params, RngStream& rng);

// ---- baselines ----

// Non-private k-median++/k-means++: D^z seeding (probability proportional
// to distance for z=1, squared distance for z=2) followed by Lloyd
// iterations whose center step is the Weiszfeld median (z=1) or the mean
// (z=2). Throws ConfigError when k exceeds n.
Solution kmedianpp_baseline(const Dataset& data, int k, int lloyd_iters,
                            RngStream& rng, int z = 1);

// Private Lloyd baseline: centers start uniform in the ball, each of the
// `iters` rounds recomputes every cluster's center with the private
// 1-median on an equal share of the budget (clusters are disjoint, so one
// round costs epsilon/iters no matter k). Empty clusters resample.
struct PrivateLloydConfig {
  int iters = 7;
  double lambda = 1.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;  // 0 selects 0.01 sqrt(d) / n
};
Solution private_lloyd_baseline(const Dataset& data, int k, double epsilon,
                                const PrivateLloydConfig& cfg, RngStream& rng,
                                PrivacyBudget& budget);

// The evaluation protocol: a fixed-depth experimental tree and each of the
// `refine_iters` private refinement passes take an equal budget share,
// every cluster capped to a uniform subsample before its 1-median.
struct HstProtocolConfig {
  int z = 1;
  int alpha_depth = 12;
  double beta = 8.0;
  int refine_iters = 4;
  std::size_t cluster_cap = 20000;
  double lambda = 1.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;
};
struct HstRunResult {
  Solution solution;
  double tree_cost = 0.0;
};
HstRunResult hst_protocol(const Dataset& data, int k, double epsilon,
                          std::uint64_t seed, const HstProtocolConfig& cfg,
                          PrivacyBudget& budget);

// ---- experiment matrix ----

struct ExperimentSpec {
  std::string dataset = "synthetic";
  std::vector<std::string> algorithms;  // hst, hst-mpc, private-lloyd,
                                        // kmedianpp, kmeans-dp
  std::vector<int> ks;
  std::vector<double> epsilons;  // infinity = noise disabled
  std::vector<std::uint64_t> seeds;
  int repetitions = 1;
  int z = 1;
  int alpha_depth = 12;
  double beta = 8.0;
  double lambda = 1.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;
  int machines = 4;               // hst-mpc cells
  std::uint64_t memory_words = 0;
};

struct RunRow {
  std::string algorithm;
  int k = 0;
  int z = 1;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double cost = std::numeric_limits<double>::quiet_NaN();
  double tree_cost = std::numeric_limits<double>::quiet_NaN();
  double normalized = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  std::size_t centers = 0;
  double ledger_total = 0.0;
  std::vector<PrivacyBudget::Entry> ledger;
  std::string error;  // nonempty when the cell failed
};

struct AggregateRow {
  std::string algorithm;
  int k = 0;
  double epsilon = 0.0;
  double median_cost = 0.0;
  double mean_cost = 0.0;
  double median_normalized = 0.0;
  std::size_t runs = 0;
};

struct RunReport {
  std::string dataset;
  std::vector<RunRow> rows;
  std::vector<AggregateRow> aggregates;
};

// Runs every (algorithm, k, epsilon, seed, repetition) cell; failures are
// recorded in their row and the matrix keeps going. Costs are normalized
// per (k, z) by the best non-private cost, or by the best cost overall if
// that is smaller, so the best run always normalizes to at least 1.
RunReport run_matrix(const Dataset& data, const ExperimentSpec& spec);

std::string report_to_json(const RunReport& report);
// Plot series: one CSV row per aggregate (cost vs k, grouped by
// algorithm and epsilon).
std::string report_plot_csv(const RunReport& report);

}  // namespace hst
