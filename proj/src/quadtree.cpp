#include "hst/quadtree.hpp"

#include <algorithm>
#include <cmath>

#include "hst/errors.hpp"

namespace hst {

namespace {
constexpr std::uint64_t kRootSalt = 0x5115E10C4DULL;
constexpr std::uint64_t kLowSalt = 0x10F7ED1355AA00FFULL;
constexpr std::uint64_t kHighSalt = 0x517F7ED1E77E0155ULL;
constexpr std::uint64_t kSplitSalt = 0x5F117B17E5ULL;
}  // namespace

TreeParams theory_tree_params(std::size_t n, std::size_t d, double lambda) {
  if (n == 0 || d == 0) throw ConfigError("tree needs n > 0 and d > 0");
  // Worst-case splits leave 2/3 of the extent, so d * log_{3/2}(2 sqrt(d) n)
  // depths force every cell's diameter to or below lambda / n.
  double rounds = std::ceil(std::log(2.0 * std::sqrt(double(d)) * double(n)) /
                            std::log(1.5));
  TreeParams p;
  p.lambda = lambda;
  p.stop_diam = lambda / double(n);
  p.max_depth = int(d * rounds);
  return p;
}

TreeParams experimental_tree_params(int alpha_depth, std::size_t d,
                                    double lambda) {
  if (alpha_depth < 1) throw ConfigError("depth multiplier must be >= 1");
  TreeParams p;
  p.lambda = lambda;
  p.stop_diam = 0.0;
  p.max_depth = alpha_depth * int(d);
  return p;
}

double CellGeom::diam() const { return std::sqrt(diam2); }

Point CellGeom::center() const {
  Point c(lo.size());
  for (std::size_t j = 0; j < lo.size(); ++j) c[j] = 0.5 * (lo[j] + hi[j]);
  return c;
}

bool CellGeom::contains(std::span<const double> p) const {
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (p[j] < lo[j] || p[j] > hi[j]) return false;
  return true;
}

double CellGeom::margin(std::span<const double> p) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lo.size(); ++j)
    m = std::min(m, std::min(p[j] - lo[j], hi[j] - p[j]));
  return m;
}

double compute_diam2(const std::vector<double>& lo,
                     const std::vector<double>& hi) {
  double s = 0.0;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    double e = hi[j] - lo[j];
    s += e * e;
  }
  return s;
}

CellGeom root_cell(std::size_t d, double lambda) {
  CellGeom c;
  c.lo.assign(d, -lambda);
  c.hi.assign(d, lambda);
  c.depth = 0;
  c.path_hash = mix64(kRootSalt);
  c.diam2 = compute_diam2(c.lo, c.hi);
  return c;
}

std::uint64_t child_path_hash(std::uint64_t parent_hash, int side) {
  return mix64(parent_hash ^ (side ? kHighSalt : kLowSalt));
}

double cell_split_value(const CellGeom& c, const RngStream& shifts) {
  const std::size_t j = std::size_t(c.depth) % c.lo.size();
  RngStream k = shifts.keyed(c.path_hash ^ kSplitSalt);
  double e = c.hi[j] - c.lo[j];
  // Uniform over the middle third [lo + e/3, hi - e/3].
  return c.lo[j] + (e / 3.0) * (1.0 + k.uniform01());
}

CellGeom child_cell(const CellGeom& c, int side, const RngStream& shifts) {
  const std::size_t j = std::size_t(c.depth) % c.lo.size();
  double split = cell_split_value(c, shifts);
  CellGeom ch;
  ch.lo = c.lo;
  ch.hi = c.hi;
  if (side == 0)
    ch.hi[j] = split;
  else
    ch.lo[j] = split;
  ch.depth = c.depth + 1;
  ch.path_hash = child_path_hash(c.path_hash, side);
  ch.diam2 = compute_diam2(ch.lo, ch.hi);
  return ch;
}

bool cell_can_split(const CellGeom& c, const TreeParams& p) {
  return c.diam2 > p.stop_diam * p.stop_diam && c.depth < p.max_depth;
}

void PathBits::push(int bit) {
  if (len >= kMaxDepth) throw ConfigError("tree path exceeds supported depth");
  if (bit) word[len / 64] |= std::uint64_t(1) << (len % 64);
  ++len;
}

bool PathBits::operator<(const PathBits& o) const {
  for (int i = 0; i < kMaxDepth / 64; ++i) {
    std::uint64_t diff = word[i] ^ o.word[i];
    if (diff) {
      int bit = __builtin_ctzll(diff);
      // The branch at the smallest differing depth decides; low side first.
      return (word[i] >> bit & 1) == 0;
    }
  }
  return len < o.len;
}

bool PathBits::operator==(const PathBits& o) const {
  if (len != o.len) return false;
  for (int i = 0; i < kMaxDepth / 64; ++i)
    if (word[i] != o.word[i]) return false;
  return true;
}

Quadtree::Quadtree(const Dataset& data, const RngStream& shifts,
                   TreeParams params)
    : data_(&data), shifts_(shifts), params_(params), dim_(data.dim()) {
  if (params_.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (params_.max_depth > PathBits::kMaxDepth)
    throw ConfigError("max_depth exceeds supported tree depth");
  for (std::size_t i = 0; i < data.size(); ++i)
    check_in_universe(data.point(i));

  perm_.resize(data.size());
  for (std::size_t i = 0; i < perm_.size(); ++i)
    perm_[i] = std::uint32_t(i);
  pcoords_ = data.coords();

  Cell root;
  root.geom = root_cell(dim_, params_.lambda);
  root.begin = 0;
  root.end = std::uint32_t(data.size());
  cells_.push_back(std::move(root));
}

void Quadtree::check_in_universe(std::span<const double> p) const {
  for (double v : p)
    if (!(std::abs(v) <= params_.lambda))
      throw DataError("point outside the universe");
}

bool Quadtree::can_split(std::int32_t id) const {
  return cell_can_split(cells_[id].geom, params_);
}

std::pair<std::int32_t, std::int32_t> Quadtree::expand(std::int32_t id) {
  if (is_expanded(id)) return {cells_[id].child[0], cells_[id].child[1]};
  if (!can_split(id)) throw ConfigError("expand called on an unsplittable cell");

  CellGeom low = child_cell(cells_[id].geom, 0, shifts_);
  CellGeom high = child_cell(cells_[id].geom, 1, shifts_);

  // In-place lockstep partition of perm_ and pcoords_ (two cursors, swap
  // misplaced pairs). Both arrays stream, so the cost per point stays flat
  // past the cache sizes where a gather through data_ starts to thrash.
  const std::size_t j = std::size_t(cells_[id].geom.depth) % dim_;
  const double split = low.hi[j];
  const auto begin = cells_[id].begin, end = cells_[id].end;
  std::uint32_t lo = begin, hi = end;
  while (true) {
    while (lo < hi && pcoords_[std::size_t(lo) * dim_ + j] <= split) ++lo;
    while (lo < hi && pcoords_[std::size_t(hi - 1) * dim_ + j] > split) --hi;
    if (hi - lo < 2) break;
    --hi;
    std::swap(perm_[lo], perm_[hi]);
    double* a = pcoords_.data() + std::size_t(lo) * dim_;
    double* b = pcoords_.data() + std::size_t(hi) * dim_;
    for (std::size_t c = 0; c < dim_; ++c) std::swap(a[c], b[c]);
    ++lo;
  }
  const std::uint32_t mid = lo;

  Cell c0, c1;
  c0.geom = std::move(low);
  c0.parent = id;
  c0.begin = begin;
  c0.end = mid;
  c1.geom = std::move(high);
  c1.parent = id;
  c1.begin = mid;
  c1.end = end;

  std::int32_t id0 = std::int32_t(cells_.size());
  cells_.push_back(std::move(c0));
  std::int32_t id1 = std::int32_t(cells_.size());
  cells_.push_back(std::move(c1));
  cells_[id].child[0] = id0;
  cells_[id].child[1] = id1;
  return {id0, id1};
}

void Quadtree::materialize_nonempty() {
  std::vector<std::int32_t> stack{kRoot};
  while (!stack.empty()) {
    std::int32_t id = stack.back();
    stack.pop_back();
    if (cells_[id].count() == 0 || !can_split(id)) continue;
    auto [a, b] = expand(id);
    stack.push_back(a);
    stack.push_back(b);
  }
}

double Quadtree::tree_distance(std::span<const double> p,
                               std::span<const double> q) const {
  check_in_universe(p);
  check_in_universe(q);
  CellGeom cur = root_cell(dim_, params_.lambda);
  while (cell_can_split(cur, params_)) {
    const std::size_t j = std::size_t(cur.depth) % dim_;
    double split = cell_split_value(cur, shifts_);
    int side_p = p[j] <= split ? 0 : 1;
    int side_q = q[j] <= split ? 0 : 1;
    if (side_p != side_q) break;  // cur is the smallest common cell
    cur = child_cell(cur, side_p, shifts_);
  }
  return cur.diam();
}

int Quadtree::level_of_depth(int depth) const {
  return (params_.max_depth - depth + int(dim_) - 1) / int(dim_);
}

int Quadtree::root_level() const { return level_of_depth(0); }

double Quadtree::level_unit() const {
  return std::ldexp(2.0 * params_.lambda, -root_level());
}

std::vector<double> Quadtree::path_margins(std::span<const double> p) const {
  check_in_universe(p);
  std::vector<double> margins;
  CellGeom cur = root_cell(dim_, params_.lambda);
  for (;;) {
    margins.push_back(cur.margin(p));
    if (!cell_can_split(cur, params_)) break;
    const std::size_t j = std::size_t(cur.depth) % dim_;
    double split = cell_split_value(cur, shifts_);
    cur = child_cell(cur, p[j] <= split ? 0 : 1, shifts_);
  }
  return margins;
}

int Quadtree::ball_cut_level(std::span<const double> p, double r) const {
  auto margins = path_margins(p);
  for (std::size_t depth = 0; depth < margins.size(); ++depth)
    if (margins[depth] < r) return level_of_depth(int(depth));
  return -1;
}

std::vector<Quadtree::PathEntry> Quadtree::point_path(
    std::span<const double> p) const {
  check_in_universe(p);
  std::vector<PathEntry> path;
  CellGeom cur = root_cell(dim_, params_.lambda);
  for (;;) {
    path.push_back({cur.path_hash, cur.depth});
    if (!cell_can_split(cur, params_)) break;
    const std::size_t j = std::size_t(cur.depth) % dim_;
    double split = cell_split_value(cur, shifts_);
    cur = child_cell(cur, p[j] <= split ? 0 : 1, shifts_);
  }
  return path;
}

PathBits Quadtree::path_bits(std::int32_t id) const {
  std::vector<int> rev;
  for (std::int32_t cur = id; cells_[cur].parent >= 0;
       cur = cells_[cur].parent) {
    const Cell& par = cells_[cells_[cur].parent];
    rev.push_back(par.child[0] == cur ? 0 : 1);
  }
  PathBits bits;
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) bits.push(*it);
  return bits;
}

std::vector<std::pair<std::size_t, double>> badly_cut_centers(
    const Quadtree& t, const std::vector<Point>& centers, double alpha_f,
    std::size_t n) {
  if (!(alpha_f > 0)) throw ConfigError("alpha_f must be positive");
  const double d = double(t.dim());
  const double offset = std::log2(d * std::log2(double(n)) / alpha_f);
  const double unit = t.level_unit();

  std::vector<std::pair<std::size_t, double>> bad;
  for (std::size_t f = 0; f < centers.size(); ++f) {
    auto margins = t.path_margins(centers[f]);
    double worst = 0.0;
    for (int i = 0; i <= t.root_level(); ++i) {
      double r = std::ldexp(unit, i);
      int cut = -1;
      for (std::size_t depth = 0; depth < margins.size(); ++depth)
        if (margins[depth] < r) {
          cut = t.level_of_depth(int(depth));
          break;
        }
      if (cut < 0) continue;
      worst = std::max(worst, double(cut) - (double(i) + offset));
    }
    if (worst > 0) bad.emplace_back(f, worst);
  }
  std::sort(bad.begin(), bad.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return bad;
}

}  // namespace hst
