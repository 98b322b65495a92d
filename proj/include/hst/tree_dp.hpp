#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hst/privacy.hpp"
#include "hst/quadtree.hpp"

namespace hst {

// Optimal center placement on the noisy tree. Every maximal center-free
// visited cell pays max(w, 0) * diam^z for all the mass it covers; once a
// center lies inside a cell the charge moves down to its visited children.
// Centers live at the cell centers of the visited leaves, possibly with
// repeats when k exceeds the useful leaves.
//
// The table recursion and tree_placement_cost below share their exact
// operation order, so the optimum value and the evaluated cost of the
// extracted centers are equal to the last bit. The distributed simulator
// reproduces the same recursion bottom-up, one level per round.
//
// value[j] is non-increasing for j >= 1; the 0 -> 1 step can tick upward
// under noise (a parent's weight draw is independent of its children's),
// which is why value[0] is reported but never compared against.
struct TreeDpResult {
  std::vector<double> value;   // value[j] = optimum with exactly j centers
  std::vector<Point> centers;  // extraction for j = k, leaf order
  double cost = 0.0;           // value[k]
};

TreeDpResult dp_solve(const Quadtree& tree, const NoisyWeights& noise, int k,
                      int z);

// The two places the recursion touches numbers, shared verbatim with the
// distributed simulator so both runs produce identical bits.
//
// Charge a maximal center-free cell pays for the mass it covers.
inline double dp_cell_charge(double w, double diam2, int z) {
  if (w < 0.0) w = 0.0;
  return z == 2 ? w * diam2 : w * std::sqrt(diam2);
}
// Two-child combine: v[j] = min over k1 of low[k1] + high[j-k1] for
// j >= 1; scans k1 upward and keeps the first minimum. v and pick must
// hold k+1 slots; v[0] is left untouched.
void dp_combine(const std::vector<double>& low, const std::vector<double>& high,
                int k, std::vector<double>& v, std::vector<std::uint16_t>& pick);

// Objective value of an explicit center set under the same tree charge.
// Containment is geometric, so it accepts any points, but bitwise
// agreement with dp_solve is only promised for centers at visited-leaf
// cell centers.
double tree_placement_cost(const Quadtree& tree, const NoisyWeights& noise,
                           const std::vector<Point>& centers, int z);

// Cell centers of all visited leaves (cells whose children the queue never
// visited), in leaf order. Test helper: exhaustive search over subsets of
// these is the ground truth for dp_solve.
std::vector<Point> dp_leaf_centers(const Quadtree& tree,
                                   const NoisyWeights& noise);

}  // namespace hst
