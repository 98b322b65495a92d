#include "hst/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "hst/errors.hpp"

namespace hst {

namespace {
constexpr std::uint64_t kNoiseSalt = 0x7A9C0FFEE0ULL;
}

double laplace_sample(RngStream& rng, double scale) {
  if (scale < 0.0) throw ConfigError("laplace scale must be nonnegative");
  if (scale == 0.0) return 0.0;
  double u = rng.uniform01() - 0.5;  // in (-1/2, 1/2), endpoints excluded
  double s = u < 0 ? -1.0 : 1.0;
  return scale * s * std::log(1.0 - 2.0 * std::abs(u));
}

double keyed_laplace(const RngStream& stream, std::uint64_t key,
                     double scale) {
  RngStream sub = stream.keyed(key ^ kNoiseSalt);
  return laplace_sample(sub, scale);
}

PrivacyBudget::PrivacyBudget(double epsilon_total) : epsilon_(epsilon_total) {
  if (!(epsilon_ > 0))
    throw ConfigError("epsilon must be positive (or infinite to disable noise)");
}

bool PrivacyBudget::noise_disabled() const {
  return std::isinf(epsilon_);
}

void PrivacyBudget::charge(const std::string& label, double eps) {
  if (!(eps >= 0)) throw ConfigError("negative privacy charge");
  entries_.push_back({label, eps, false});
  try {
    check();
  } catch (...) {
    entries_.pop_back();  // a rejected charge must not stay in the ledger
    throw;
  }
}

void PrivacyBudget::charge_parallel(const std::string& group, double eps) {
  if (!(eps >= 0)) throw ConfigError("negative privacy charge");
  entries_.push_back({group, eps, true});
  try {
    check();
  } catch (...) {
    entries_.pop_back();
    throw;
  }
}

double PrivacyBudget::charged() const {
  double total = 0.0;
  std::map<std::string, double> group_max;
  for (const auto& e : entries_) {
    if (e.parallel)
      group_max[e.label] = std::max(group_max[e.label], e.eps);
    else
      total += e.eps;
  }
  for (const auto& [_, mx] : group_max) total += mx;
  return total;
}

void PrivacyBudget::check() const {
  if (noise_disabled()) return;
  if (charged() > epsilon_ * (1.0 + 1e-12) + 1e-15)
    throw ConfigError("privacy budget exhausted");
}

TreeNoiseParams tree_noise_params(std::size_t n_points, std::size_t dim,
                                  double epsilon, double tau_override) {
  if (!(epsilon > 0)) throw ConfigError("epsilon must be positive");
  // Per-level budget epsilon / (d log n): levels compose sequentially,
  // cells within a level touch disjoint data. The ledger records the whole
  // epsilon in one entry, independent of how deep the tree actually grew.
  const double n = double(std::max<std::size_t>(n_points, 2));
  TreeNoiseParams out;
  out.scale =
      std::isinf(epsilon) ? 0.0 : double(dim) * std::log2(n) / epsilon;
  out.tau = tau_override > 0 ? tau_override : 2.0 * out.scale;
  return out;
}

NoisyWeights make_private(Quadtree& tree, double epsilon,
                          const RngStream& noise, PrivacyBudget& budget,
                          const MakePrivateOptions& opt) {
  const TreeParams& p = tree.params();
  const double stop2 = p.stop_diam * p.stop_diam;
  const TreeNoiseParams np = tree_noise_params(
      tree.data().size(), tree.dim(), epsilon, opt.tau_override);
  const double scale = np.scale;

  NoisyWeights out;
  out.noise_scale = scale;
  out.tau = np.tau;

  std::deque<std::int32_t> queue{Quadtree::kRoot};
  auto mark = [&](std::vector<char>& v, std::int32_t id) {
    if (std::size_t(id) >= v.size()) v.resize(id + 1, 0);
    v[id] = 1;
  };
  mark(out.in_queue, Quadtree::kRoot);

  while (!queue.empty()) {
    std::int32_t id = queue.front();
    queue.pop_front();
    out.popped.push_back(id);

    const auto& cell = tree.cell(id);
    if (!(cell.geom.diam2 > stop2)) continue;  // below the stop: never weighted

    double w = double(cell.count()) +
               keyed_laplace(noise, cell.geom.path_hash, scale);
    if (std::size_t(id) >= out.w.size()) {
      out.w.resize(id + 1, 0.0);
      out.has_w.resize(id + 1, 0);
    }
    out.w[id] = w;
    out.has_w[id] = 1;

    if (w > out.tau && cell.geom.depth < p.max_depth) {
      auto [a, b] = tree.expand(id);
      mark(out.in_queue, a);
      mark(out.in_queue, b);
      queue.push_back(a);
      queue.push_back(b);
    }
  }

  const std::size_t n_cells = tree.num_cells();
  out.w.resize(n_cells, 0.0);
  out.has_w.resize(n_cells, 0);
  out.in_queue.resize(n_cells, 0);
  budget.charge("tree-weights", epsilon);
  return out;
}

NoisyWeights reweight(const Quadtree& tree, const NoisyWeights& base,
                      double epsilon, const RngStream& noise,
                      PrivacyBudget& budget) {
  const TreeNoiseParams np =
      tree_noise_params(tree.data().size(), tree.dim(), epsilon, 0.0);
  NoisyWeights out = base;
  out.noise_scale = np.scale;
  for (std::int32_t id : base.popped) {
    if (!base.weighted(id)) continue;
    const auto& cell = tree.cell(id);
    out.w[id] = double(cell.count()) +
                keyed_laplace(noise, cell.geom.path_hash, np.scale);
  }
  budget.charge("dp-weights", epsilon);
  return out;
}

SensitivityReport sensitivity_audit(const Dataset& data,
                                    const RngStream& shifts,
                                    const TreeParams& params) {
  using Key = std::pair<std::uint64_t, int>;
  auto walk_counts = [&](std::size_t skip, std::map<Key, std::int64_t>& out) {
    Quadtree t(data, shifts, params);  // geometry only; walks are pure
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i == skip) continue;
      for (const auto& e : t.point_path(data.point(i)))
        ++out[{e.path_hash, e.depth}];
    }
  };

  std::map<Key, std::int64_t> full;
  walk_counts(data.size(), full);

  Quadtree t(data, shifts, params);
  SensitivityReport rep;
  rep.checked_points = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::map<Key, std::int64_t> holdout;
    walk_counts(i, holdout);

    std::map<Key, std::int64_t> expect;
    for (const auto& e : t.point_path(data.point(i)))
      expect[{e.path_hash, e.depth}] = 1;

    for (const auto& [key, cnt] : full) {
      auto it = holdout.find(key);
      std::int64_t delta = cnt - (it == holdout.end() ? 0 : it->second);
      rep.max_count_delta = std::max(rep.max_count_delta, std::abs(delta));
      std::int64_t want = expect.count(key) ? 1 : 0;
      if (delta != want) rep.deltas_match_paths = false;
    }
  }
  return rep;
}

}  // namespace hst
