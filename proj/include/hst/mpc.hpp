#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hst/cost.hpp"
#include "hst/pipeline.hpp"
#include "hst/privacy.hpp"

namespace hst {

// Deterministic simulator of a round-synchronous cluster: m machines, s
// words of memory each, arbitrary point-to-point messages. Machines run
// sequentially in id order within a round; all shared randomness comes
// from (seed, label) streams, so the simulated run reproduces the
// sequential pipeline bit for bit.
struct MpcConfig {
  int machines = 1;
  std::uint64_t memory_words = 0;  // 0 = unbounded
  // Memory-shape exponents, validation only: s = Theta(n^delta d log n)
  // and m*s >= (n*d)^(1+gamma). Zero skips the check. The model asks for
  // delta - gamma to exceed a constant; that slack is its own knob here
  // because epsilon is taken by the privacy budget.
  double delta = 0.0;
  double gamma = 0.0;
  double exponent_slack = 0.05;
};

// One word holds a coordinate, a count, or a cost; a cell id takes two
// (path hash and depth). The fixed table the accounting uses:
//   point           d
//   count record    2 + 1
//   activation      2 + 2d + 1   (id, bounds, parent hash)
//   dp table        2 + (k + 1)
//   extract token   2 + 1 + 9    (id, center quota, branch bits)
//   center record   d + 1 + 9
struct RoundRecord {
  int round = 0;
  std::string phase;
  std::uint64_t messages = 0;
  std::uint64_t words = 0;
  std::uint64_t max_in = 0;        // largest per-machine receive
  std::uint64_t max_out = 0;       // largest per-machine send
  std::uint64_t max_resident = 0;  // largest per-machine footprint at the end
};

struct RoundTrace {
  std::vector<RoundRecord> rounds;
  std::uint64_t peak_resident = 0;
  int total_rounds() const { return int(rounds.size()); }
};

// Cell identity shared across machines: the keyed path hash plus the
// depth. Ordering is lexicographic, which fixes the responsibility map.
struct CellKey {
  std::uint64_t hash = 0;
  std::int32_t depth = 0;
  bool operator<(const CellKey& o) const {
    return hash != o.hash ? hash < o.hash : depth < o.depth;
  }
  bool operator==(const CellKey& o) const {
    return hash == o.hash && depth == o.depth;
  }
};

// Balanced deterministic cell-to-machine assignment: counted cells are
// sorted and dealt round-robin; anything outside that set (empty sibling
// cells) falls back to a hash. No machine owns more than ceil(N/m) + 1.
class ResponsibilityMap {
 public:
  ResponsibilityMap(std::vector<CellKey> counted, int m, std::uint64_t seed);
  int machine(const CellKey& key) const;
  std::size_t counted_cells() const { return sorted_.size(); }
  std::vector<std::size_t> loads() const;  // over counted cells

 private:
  std::vector<CellKey> sorted_;
  int m_;
  std::uint64_t seed_;
};

struct MpcCounts {
  // counts[machine] holds the exact per-cell counts that machine is
  // responsible for; every cell on some point's root-to-leaf path appears
  // exactly once across machines.
  std::vector<std::map<CellKey, std::int64_t>> counts;
  RoundTrace trace;
};

// Phases 1-3 of the simulation: local path walks, 3-round hash-partition
// aggregation, routing to the responsible machines.
MpcCounts mpc_count_cells(const Dataset& data, const TreeClusterConfig& cfg,
                          const MpcConfig& cluster, std::uint64_t seed);

struct MpcResult {
  Solution solution;
  double tree_cost = 0.0;
  PrivacyBudget budget;
  RoundTrace trace;
};

// The whole private k-median on the simulated cluster. Output (centers,
// tree cost) is bitwise identical to dp_kmedian with the same data, seed
// and config: geometry, noise, recurrence and tie-breaks all run through
// the same shared helpers. The Euclidean cost/assignment of the centers
// is evaluated by the same central code path the sequential pipeline
// uses; it is diagnostic output, not part of the simulated protocol.
MpcResult mpc_run_kmedian(const Dataset& data, int k, double epsilon,
                          const MpcConfig& cluster, std::uint64_t seed,
                          const TreeClusterConfig& cfg = {});

struct MpcSample {
  std::vector<std::vector<std::uint32_t>> per_cluster;  // global indices
  RoundTrace trace;
};

// Coordinator-driven uniform sampling of up to t points per cluster:
// machines report per-cluster counts, machine 0 draws global ranks
// without replacement, owners ship the selected points. Deterministic in
// the seed; clusters at or below t ship whole.
MpcSample mpc_sample_for_projection(const Dataset& data,
                                    const std::vector<std::uint32_t>& assignment,
                                    std::size_t n_clusters, std::size_t t,
                                    const MpcConfig& cluster,
                                    std::uint64_t seed);

}  // namespace hst
