#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hst/quadtree.hpp"
#include "hst/rng.hpp"

namespace hst {

// Laplace(0, scale) via inverse CDF: scale * sign(u) * ln(1 - 2|u|) with
// u uniform on (-1/2, 1/2). scale = 0 returns 0 (noise disabled).
double laplace_sample(RngStream& rng, double scale);
// Same draw keyed to a structural id: independent of draw order, so any
// process holding the stream reproduces it.
double keyed_laplace(const RngStream& stream, std::uint64_t key, double scale);

// Privacy accounting for one run. Mechanisms charge what they spend;
// charges grouped under one parallel label model disjoint-data parallel
// composition and contribute their maximum instead of their sum.
// Exceeding the configured total throws ConfigError. An infinite epsilon
// disables noise everywhere and never exhausts.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(double epsilon_total);

  double epsilon() const { return epsilon_; }
  bool noise_disabled() const;

  void charge(const std::string& label, double eps);
  void charge_parallel(const std::string& group, double eps);
  double charged() const;

  struct Entry {
    std::string label;
    double eps;
    bool parallel;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  void check() const;
  double epsilon_;
  std::vector<Entry> entries_;
};

// Noisy per-cell weights driving tree expansion. Cells are weighted in
// BFS order: a cell above the diameter stop gets w = count + Lap(scale),
// and its children enter the queue only while w exceeds tau (strictly).
// Weights never exist below the diameter stop. Noise is keyed per cell.
struct NoisyWeights {
  double tau = 0.0;
  double noise_scale = 0.0;
  std::vector<std::int32_t> popped;  // every cell the queue visited
  std::vector<char> in_queue;       // by cell id
  std::vector<char> has_w;          // by cell id
  std::vector<double> w;            // by cell id

  bool weighted(std::int32_t id) const {
    return id < std::int32_t(has_w.size()) && has_w[id];
  }
  double weight_or_zero(std::int32_t id) const {
    return weighted(id) ? w[id] : 0.0;
  }
};

struct MakePrivateOptions {
  // tau <= 0 selects the default 2 * noise_scale. The experimental pipeline
  // passes 10 * beta * d / epsilon instead.
  double tau_override = 0.0;
};

// Noise scale and expansion threshold for a tree over n points in d
// dimensions. Factored out so the distributed simulator resolves the
// identical parameters from shared configuration.
struct TreeNoiseParams {
  double scale = 0.0;
  double tau = 0.0;
};
TreeNoiseParams tree_noise_params(std::size_t n_points, std::size_t dim,
                                  double epsilon, double tau_override = 0.0);

// Expands the tree under noisy counts and returns the weights. Noise
// scale is d log2(n) / epsilon: levels compose sequentially under a
// per-level budget and cells within a level touch disjoint data, so the
// ledger charges epsilon once no matter the tree shape. The noise stream
// must be dedicated to this tree.
NoisyWeights make_private(Quadtree& tree, double epsilon,
                          const RngStream& noise, PrivacyBudget& budget,
                          const MakePrivateOptions& opt = {});

// Fresh weights for the cells an earlier expansion visited, drawn from a
// second stream at this epsilon's scale. The tree shape is kept; only w
// is replaced. Used when a stage re-estimates weights after expansion.
NoisyWeights reweight(const Quadtree& tree, const NoisyWeights& base,
                      double epsilon, const RngStream& noise,
                      PrivacyBudget& budget);

// Non-private debug check: removing one point changes exactly the counts
// of the cells on its root-to-leaf path, each by exactly 1. Counts for
// each leave-one-out dataset are recomputed from scratch by independent
// per-point walks.
struct SensitivityReport {
  std::int64_t max_count_delta = 0;
  bool deltas_match_paths = true;
  std::size_t checked_points = 0;
};
SensitivityReport sensitivity_audit(const Dataset& data,
                                    const RngStream& shifts,
                                    const TreeParams& params);

}  // namespace hst
