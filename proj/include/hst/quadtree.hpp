#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hst/dataset.hpp"
#include "hst/rng.hpp"

namespace hst {

// Construction parameters of a randomly shifted quadtree over the universe
// [-lambda, lambda]^d. A cell splits while its diameter exceeds stop_diam
// and its depth is below max_depth.
struct TreeParams {
  double lambda = 1.0;
  double stop_diam = 0.0;
  int max_depth = 0;
};

// Default stop rule: cells stop at diameter lambda/n. max_depth is the
// worst-case depth needed to guarantee that (extents shrink by at least a
// factor 3/2 per round of d splits).
TreeParams theory_tree_params(std::size_t n, std::size_t d, double lambda);

// Fixed-depth variant: no diameter stop, depth capped at alpha_depth * d.
TreeParams experimental_tree_params(int alpha_depth, std::size_t d,
                                    double lambda);

// Geometry of one cell. Reproducible from (shift stream identity, path)
// alone: the split position of a cell is a keyed draw on its path hash, so
// any process holding the same shift stream derives identical geometry
// without coordination. All tree consumers (sequential builder, per-point
// walks, the distributed simulator) go through these helpers, which keeps
// their arithmetic bitwise identical.
struct CellGeom {
  std::vector<double> lo, hi;
  int depth = 0;
  std::uint64_t path_hash = 0;
  double diam2 = 0.0;

  double diam() const;
  Point center() const;
  bool contains(std::span<const double> p) const;
  // Distance from p (inside the cell) to the nearest face.
  double margin(std::span<const double> p) const;
};

CellGeom root_cell(std::size_t d, double lambda);
std::uint64_t child_path_hash(std::uint64_t parent_hash, int side);
double compute_diam2(const std::vector<double>& lo,
                     const std::vector<double>& hi);
// Split position: uniform over the middle third of the extent of
// coordinate (depth mod d), keyed by the cell's path hash.
double cell_split_value(const CellGeom& c, const RngStream& shifts);
// side 0 keeps coordinates <= split (points exactly on the plane go low).
CellGeom child_cell(const CellGeom& c, int side, const RngStream& shifts);
bool cell_can_split(const CellGeom& c, const TreeParams& p);

// Branch sequence from the root, packed one bit per depth. Lexicographic
// order on the bits equals the left-to-right order of leaves.
struct PathBits {
  static constexpr int kMaxDepth = 512;
  int len = 0;
  std::uint64_t word[kMaxDepth / 64] = {};

  void push(int bit);
  bool operator<(const PathBits& o) const;
  bool operator==(const PathBits& o) const;
};

// Randomly shifted quadtree with lazily materialized cells. build() only
// creates the root; expand() splits one cell (empty cells included) and
// partitions its point range, so each point is touched O(d log n) times
// over a full expansion. Metric queries are pure geometry walks and touch
// no cell storage.
class Quadtree {
 public:
  Quadtree(const Dataset& data, const RngStream& shifts, TreeParams params);

  struct Cell {
    CellGeom geom;
    std::int32_t parent = -1;
    std::int32_t child[2] = {-1, -1};
    std::uint32_t begin = 0, end = 0;  // range into the point permutation
    std::int64_t count() const { return std::int64_t(end) - begin; }
  };

  static constexpr std::int32_t kRoot = 0;
  const Cell& cell(std::int32_t id) const { return cells_[id]; }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t dim() const { return dim_; }
  const TreeParams& params() const { return params_; }
  const Dataset& data() const { return *data_; }
  const RngStream& shifts() const { return shifts_; }

  bool can_split(std::int32_t id) const;
  bool is_expanded(std::int32_t id) const { return cells_[id].child[0] >= 0; }
  // Materializes both children, partitioning the parent's point range
  // (low side first). Idempotent.
  std::pair<std::int32_t, std::int32_t> expand(std::int32_t id);
  // Expands every splittable nonempty cell. Small inputs only.
  void materialize_nonempty();

  // Distance induced by the tree: diameter of the smallest cell containing
  // both points. For p = q this is the diameter of p's leaf. Throws
  // DataError if a point lies outside the universe.
  double tree_distance(std::span<const double> p,
                       std::span<const double> q) const;

  // Levels count from the leaves: level(depth) = ceil((max_depth - depth)/d),
  // so leaves sit at level 0 and a cell's nominal side is level_unit()*2^i.
  int level_of_depth(int depth) const;
  int root_level() const;
  double level_unit() const;  // nominal side of a level-0 cell

  // Largest level whose cell on p's path fails to contain B(p, r) whole;
  // -1 when even p's leaf contains the ball. Margins only shrink along the
  // path, so this is the level of the shallowest failing cell.
  int ball_cut_level(std::span<const double> p, double r) const;

  // Per-depth margins along p's path, shallow to deep (used by the
  // badly-cut scan, which probes many radii against one path).
  std::vector<double> path_margins(std::span<const double> p) const;

  struct PathEntry {
    std::uint64_t path_hash;
    int depth;
  };
  std::vector<PathEntry> point_path(std::span<const double> p) const;

  PathBits path_bits(std::int32_t id) const;
  const std::vector<std::uint32_t>& perm() const { return perm_; }

 private:
  void check_in_universe(std::span<const double> p) const;

  const Dataset* data_;
  RngStream shifts_;
  TreeParams params_;
  std::size_t dim_;
  std::vector<Cell> cells_;
  std::vector<std::uint32_t> perm_;
  // Coordinates kept in perm order so a partition streams instead of
  // gathering through data_, which thrashes once coords outgrow the cache.
  std::vector<double> pcoords_;
};

// Centers around which the tree separates space at an anomalously high
// level. Center f is badly cut when for some radius index i the ball
// B(f, unit * 2^i) is cut at a level above i + log2(d * log2(n) / alpha_f).
// Returns (index into centers, severity = max level excess), most severe
// first; ties by index.
std::vector<std::pair<std::size_t, double>> badly_cut_centers(
    const Quadtree& t, const std::vector<Point>& centers, double alpha_f,
    std::size_t n);

}  // namespace hst
