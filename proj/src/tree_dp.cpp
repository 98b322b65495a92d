#include "hst/tree_dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hst/errors.hpp"

namespace hst {

namespace {

double own_term(const Quadtree& tree, const NoisyWeights& noise,
                std::int32_t id, int z) {
  return dp_cell_charge(noise.weight_or_zero(id), tree.cell(id).geom.diam2, z);
}

bool visited(const NoisyWeights& noise, std::int32_t id) {
  return id >= 0 && std::size_t(id) < noise.in_queue.size() &&
         noise.in_queue[id];
}

// Children of a visited cell that were themselves visited, low side first.
// The visited set forms a tree under this relation.
int visited_children(const Quadtree& tree, const NoisyWeights& noise,
                     std::int32_t id, std::int32_t out[2]) {
  int n = 0;
  for (int side = 0; side < 2; ++side) {
    std::int32_t c = tree.cell(id).child[side];
    if (visited(noise, c)) out[n++] = c;
  }
  return n;
}

}  // namespace

void dp_combine(const std::vector<double>& low, const std::vector<double>& high,
                int k, std::vector<double>& v,
                std::vector<std::uint16_t>& pick) {
  pick.assign(std::size_t(k) + 1, 0);
  for (int j = 1; j <= k; ++j) {
    double best = low[0] + high[std::size_t(j)];
    std::uint16_t arg = 0;
    for (int k1 = 1; k1 <= j; ++k1) {
      double cand = low[std::size_t(k1)] + high[std::size_t(j - k1)];
      if (cand < best) {
        best = cand;
        arg = std::uint16_t(k1);
      }
    }
    v[std::size_t(j)] = best;
    pick[std::size_t(j)] = arg;
  }
}

TreeDpResult dp_solve(const Quadtree& tree, const NoisyWeights& noise, int k,
                      int z) {
  if (k < 1 || k > 65535) throw ConfigError("center count out of range");
  if (z != 1 && z != 2) throw ConfigError("cost exponent must be 1 or 2");
  if (noise.popped.empty()) throw ConfigError("tree has no visited cells");

  std::size_t n_cells = tree.num_cells();
  // Position of each cell in the visited (BFS) order, or -1.
  std::vector<std::int32_t> pos(n_cells, -1);
  for (std::size_t i = 0; i < noise.popped.size(); ++i) {
    pos[noise.popped[i]] = std::int32_t(i);
  }

  std::vector<std::vector<double>> value(noise.popped.size());
  std::vector<std::vector<std::uint16_t>> pick(noise.popped.size());

  // Children appear after parents in BFS order, so a reverse sweep sees
  // both child tables before the parent needs them.
  for (std::size_t idx = noise.popped.size(); idx-- > 0;) {
    std::int32_t id = noise.popped[idx];
    std::int32_t ch[2];
    int n_ch = visited_children(tree, noise, id, ch);
    std::vector<double>& v = value[idx];
    v.assign(std::size_t(k) + 1, 0.0);
    // With no center inside, the whole subtree is charged here and the
    // children never pay.
    v[0] = own_term(tree, noise, id, z);

    if (n_ch == 0) {
      // v[j >= 1] stays 0: a center in the cell clears its charge.
    } else if (n_ch == 1) {
      std::vector<double>& vc = value[pos[ch[0]]];
      for (int j = 1; j <= k; ++j) v[j] = vc[j];
      value[pos[ch[0]]].clear();
      value[pos[ch[0]]].shrink_to_fit();
    } else {
      dp_combine(value[pos[ch[0]]], value[pos[ch[1]]], k, v, pick[idx]);
      value[pos[ch[0]]].clear();
      value[pos[ch[0]]].shrink_to_fit();
      value[pos[ch[1]]].clear();
      value[pos[ch[1]]].shrink_to_fit();
    }
  }

  TreeDpResult res;
  res.value = value[0];
  res.cost = res.value[std::size_t(k)];

  // Walk the choices back down. Emits in left-to-right leaf order, which
  // matches the lexicographic order of the branch bits.
  struct Frame {
    std::int32_t id;
    int j;
  };
  std::vector<Frame> stack;
  stack.push_back({Quadtree::kRoot, k});
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.j == 0) continue;  // subtree stays center-free
    std::int32_t ch[2];
    int n_ch = visited_children(tree, noise, f.id, ch);
    if (n_ch == 0) {
      Point c = tree.cell(f.id).geom.center();
      for (int r = 0; r < f.j; ++r) res.centers.push_back(c);
    } else if (n_ch == 1) {
      stack.push_back({ch[0], f.j});
    } else {
      int k1 = pick[pos[f.id]][std::size_t(f.j)];
      // Right child pushed first so the left child pops first.
      stack.push_back({ch[1], f.j - k1});
      stack.push_back({ch[0], k1});
    }
  }
  return res;
}

namespace {

struct EvalCtx {
  const Quadtree* tree;
  const NoisyWeights* noise;
  const std::vector<Point>* centers;
  int z;
};

// Mirrors the table recursion: a center-free cell absorbs its subtree's
// whole charge; a cell holding a center passes the charge to its visited
// children.
double eval_cell(const EvalCtx& ctx, std::int32_t id) {
  bool has_center = false;
  const CellGeom& g = ctx.tree->cell(id).geom;
  for (const Point& c : *ctx.centers) {
    if (g.contains(c)) {
      has_center = true;
      break;
    }
  }
  if (!has_center) return own_term(*ctx.tree, *ctx.noise, id, ctx.z);
  std::int32_t ch[2];
  int n_ch = visited_children(*ctx.tree, *ctx.noise, id, ch);
  if (n_ch == 0) return 0.0;
  if (n_ch == 1) return eval_cell(ctx, ch[0]);
  return eval_cell(ctx, ch[0]) + eval_cell(ctx, ch[1]);
}

}  // namespace

double tree_placement_cost(const Quadtree& tree, const NoisyWeights& noise,
                           const std::vector<Point>& centers, int z) {
  if (z != 1 && z != 2) throw ConfigError("cost exponent must be 1 or 2");
  if (noise.popped.empty()) throw ConfigError("tree has no visited cells");
  EvalCtx ctx{&tree, &noise, &centers, z};
  return eval_cell(ctx, Quadtree::kRoot);
}

std::vector<Point> dp_leaf_centers(const Quadtree& tree,
                                   const NoisyWeights& noise) {
  std::vector<Point> out;
  std::vector<std::int32_t> stack{Quadtree::kRoot};
  while (!stack.empty()) {
    std::int32_t id = stack.back();
    stack.pop_back();
    std::int32_t ch[2];
    int n_ch = visited_children(tree, noise, id, ch);
    if (n_ch == 0) {
      out.push_back(tree.cell(id).geom.center());
    } else {
      for (int i = n_ch; i-- > 0;) stack.push_back(ch[i]);
    }
  }
  return out;
}

}  // namespace hst
