#include "hst/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "hst/errors.hpp"
#include "hst/quadtree.hpp"
#include "hst/tree_dp.hpp"

namespace hst {

namespace {

constexpr std::uint64_t kAggSalt = 0x5eedc0de1234ULL;
constexpr std::uint64_t kFallbackSalt = 0xfa11bacc5eedULL;

// Word charges per message/record kind (see the table in the header).
std::uint64_t count_words() { return 3; }
std::uint64_t activation_words(std::size_t d) { return 2 * d + 3; }
std::uint64_t table_words(int k) { return std::uint64_t(k) + 3; }
std::uint64_t token_words() { return 12; }
std::uint64_t center_words(std::size_t d) { return d + 10; }
std::uint64_t state_words(std::size_t d) { return 2 * d + 8; }

class Accounting {
 public:
  Accounting(int m, std::uint64_t s)
      : s_(s), resident_(std::size_t(m), 0), in_(std::size_t(m), 0),
        out_(std::size_t(m), 0) {}

  void alloc(int mach, std::uint64_t w) { resident_[std::size_t(mach)] += w; }
  void release(int mach, std::uint64_t w) {
    std::uint64_t& r = resident_[std::size_t(mach)];
    r -= std::min(w, r);
  }
  // Delivery from outside the cluster (initial input only).
  void recv_external(int mach, std::uint64_t w) {
    in_[std::size_t(mach)] += w;
    ++messages_;
    words_ += w;
  }
  void send(int from, int to, std::uint64_t w) {
    out_[std::size_t(from)] += w;
    in_[std::size_t(to)] += w;
    ++messages_;
    words_ += w;
  }

  void end_round(std::string phase, RoundTrace& trace) {
    RoundRecord rec;
    rec.round = ++round_;
    rec.phase = std::move(phase);
    rec.messages = messages_;
    rec.words = words_;
    for (std::size_t i = 0; i < resident_.size(); ++i) {
      rec.max_in = std::max(rec.max_in, in_[i]);
      rec.max_out = std::max(rec.max_out, out_[i]);
      rec.max_resident = std::max(rec.max_resident, resident_[i]);
      if (s_ > 0 && (in_[i] > s_ || out_[i] > s_ || resident_[i] > s_)) {
        throw MemoryOverflow(
            fmt::format("memory overflow at round {}, machine {}", round_, i),
            round_, int(i));
      }
    }
    trace.rounds.push_back(rec);
    trace.peak_resident = std::max(trace.peak_resident, rec.max_resident);
    std::fill(in_.begin(), in_.end(), 0);
    std::fill(out_.begin(), out_.end(), 0);
    messages_ = 0;
    words_ = 0;
  }

 private:
  std::uint64_t s_;
  int round_ = 0;
  std::uint64_t messages_ = 0, words_ = 0;
  std::vector<std::uint64_t> resident_, in_, out_;
};

void validate_cluster(std::size_t n, std::size_t d, int k,
                      const MpcConfig& cfg) {
  if (cfg.machines < 1) throw ConfigError("machine count must be positive");
  if (k < 1 || k > 65535) throw ConfigError("center count out of range");
  const std::uint64_t lg =
      std::uint64_t(std::ceil(std::log2(double(std::max<std::size_t>(n, 2)))));
  if (cfg.memory_words > 0 &&
      std::uint64_t(k) * 4 * d * lg > cfg.memory_words) {
    throw ConfigError(
        "center count needs more per-machine memory than configured");
  }
  if (cfg.delta > 0 && cfg.gamma > 0 &&
      !(cfg.delta - cfg.gamma >= cfg.exponent_slack)) {
    throw ConfigError(
        "memory exponents too close: delta - gamma must cover the slack");
  }
  if (cfg.gamma > 0 && cfg.memory_words > 0 &&
      double(cfg.machines) * double(cfg.memory_words) <
          std::pow(double(n) * double(d), 1.0 + cfg.gamma)) {
    throw ConfigError("total cluster memory below the configured exponent");
  }
}

struct CountCore {
  std::vector<std::vector<std::uint32_t>> local_pts;
  std::vector<std::map<CellKey, std::int64_t>> counts;  // at r(c)
  std::vector<CellKey> all_keys;  // sorted, distinct
};

int aggregator_of(const CellKey& key, int m) {
  return int(mix64(key.hash ^ mix64(std::uint64_t(std::uint32_t(key.depth))) ^
                   kAggSalt) %
             std::uint64_t(m));
}

// Phases 1-3: distribute, local path walks, and the 3-round exact count
// aggregation (partials to hash-picked aggregators, local sum, route to
// the responsible machine).
CountCore count_cells_core(const Dataset& data, const Quadtree& walker,
                           const MpcConfig& cfg, std::uint64_t seed,
                           Accounting& acct, RoundTrace& trace,
                           std::unique_ptr<ResponsibilityMap>& rmap_out) {
  const int m = cfg.machines;
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  CountCore core;
  core.local_pts.assign(std::size_t(m), {});
  for (std::size_t i = 0; i < n; ++i) {
    int mach = int(i % std::size_t(m));
    core.local_pts[std::size_t(mach)].push_back(std::uint32_t(i));
    acct.recv_external(mach, d);
    acct.alloc(mach, d);
  }
  acct.end_round("distribute", trace);

  std::vector<std::map<CellKey, std::int64_t>> partials{std::size_t(m)};
  for (int mach = 0; mach < m; ++mach) {
    for (std::uint32_t i : core.local_pts[std::size_t(mach)]) {
      for (const auto& e : walker.point_path(data.point(i))) {
        auto [it, fresh] = partials[std::size_t(mach)].try_emplace(
            CellKey{e.path_hash, e.depth}, 0);
        if (fresh) acct.alloc(mach, count_words());
        ++it->second;
      }
    }
  }
  acct.end_round("cell-compute", trace);

  std::vector<std::vector<std::pair<CellKey, std::int64_t>>> agg_in{
      std::size_t(m)};
  for (int mach = 0; mach < m; ++mach) {
    for (const auto& [key, cnt] : partials[std::size_t(mach)]) {
      int dest = aggregator_of(key, m);
      acct.send(mach, dest, count_words());
      acct.release(mach, count_words());
      acct.alloc(dest, count_words());
      agg_in[std::size_t(dest)].push_back({key, cnt});
    }
    partials[std::size_t(mach)].clear();
  }
  acct.end_round("count-aggregate", trace);

  std::vector<std::map<CellKey, std::int64_t>> summed{std::size_t(m)};
  for (int mach = 0; mach < m; ++mach) {
    for (const auto& [key, cnt] : agg_in[std::size_t(mach)]) {
      auto [it, fresh] = summed[std::size_t(mach)].try_emplace(key, 0);
      if (!fresh) acct.release(mach, count_words());
      it->second += cnt;
    }
    agg_in[std::size_t(mach)].clear();
  }
  acct.end_round("count-aggregate", trace);

  // The balanced assignment needs the global sorted cell list; the
  // simulator derives it as shared configuration, standing in for the
  // sorting subroutine the model would run.
  std::set<CellKey> keys;
  for (const auto& tbl : summed)
    for (const auto& [key, _] : tbl) keys.insert(key);
  core.all_keys.assign(keys.begin(), keys.end());
  rmap_out = std::make_unique<ResponsibilityMap>(core.all_keys, m, seed);

  core.counts.assign(std::size_t(m), {});
  for (int mach = 0; mach < m; ++mach) {
    for (const auto& [key, cnt] : summed[std::size_t(mach)]) {
      int dest = rmap_out->machine(key);
      if (dest != mach) {
        acct.send(mach, dest, count_words());
        acct.release(mach, count_words());
        acct.alloc(dest, count_words());
      }
      core.counts[std::size_t(dest)][key] = cnt;
    }
    summed[std::size_t(mach)].clear();
  }
  acct.end_round("count-aggregate", trace);
  return core;
}

}  // namespace

ResponsibilityMap::ResponsibilityMap(std::vector<CellKey> counted, int m,
                                     std::uint64_t seed)
    : sorted_(std::move(counted)), m_(m), seed_(seed) {
  if (m_ < 1) throw ConfigError("machine count must be positive");
  std::sort(sorted_.begin(), sorted_.end());
  sorted_.erase(std::unique(sorted_.begin(), sorted_.end()), sorted_.end());
}

int ResponsibilityMap::machine(const CellKey& key) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), key);
  if (it != sorted_.end() && *it == key)
    return int(std::size_t(it - sorted_.begin()) % std::size_t(m_));
  // Cells outside the counted set (empty siblings) hash instead; they
  // carry no counts, so balance there does not matter.
  return int(mix64(key.hash ^ mix64(std::uint64_t(std::uint32_t(key.depth))) ^
                   seed_ ^ kFallbackSalt) %
             std::uint64_t(m_));
}

std::vector<std::size_t> ResponsibilityMap::loads() const {
  std::vector<std::size_t> out(std::size_t(m_), std::size_t{0});
  for (std::size_t i = 0; i < sorted_.size(); ++i) ++out[i % std::size_t(m_)];
  return out;
}

MpcCounts mpc_count_cells(const Dataset& data, const TreeClusterConfig& cfg,
                          const MpcConfig& cluster, std::uint64_t seed) {
  if (data.empty()) throw DataError("no points");
  validate_cluster(data.size(), data.dim(), 1, cluster);
  TreeParams params = tree_params_for(cfg, data.size(), data.dim());
  Quadtree walker(data, RngStream(seed, kShiftStream), params);

  Accounting acct(cluster.machines, cluster.memory_words);
  MpcCounts out;
  std::unique_ptr<ResponsibilityMap> rmap;
  CountCore core = count_cells_core(data, walker, cluster, seed, acct,
                                    out.trace, rmap);
  out.counts = std::move(core.counts);
  return out;
}

namespace {

struct CellState {
  CellGeom geom;
  std::uint64_t parent_hash = 0;
  std::int64_t count = 0;
  double w = 0.0;
  bool weighted = false;
  bool expanded = false;
  std::vector<double> v;
  std::vector<std::uint16_t> pick;
  std::vector<double> child_v[2];
};

struct Token {
  CellKey key;
  int j = 0;
  PathBits path;
};

struct CenterRecord {
  PathBits path;
  Point center;
  int mult = 0;
};

}  // namespace

MpcResult mpc_run_kmedian(const Dataset& data, int k, double epsilon,
                          const MpcConfig& cluster, std::uint64_t seed,
                          const TreeClusterConfig& cfg) {
  if (data.empty()) throw DataError("no points");
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  validate_cluster(n, d, k, cluster);
  const int m = cluster.machines;

  TreeParams params = tree_params_for(cfg, n, d);
  Quadtree walker(data, RngStream(seed, kShiftStream), params);
  MakePrivateOptions nopt = noise_opts_for(cfg, d, epsilon);
  TreeNoiseParams np = tree_noise_params(n, d, epsilon, nopt.tau_override);
  RngStream wstream(seed, kWeightStream);
  const double stop2 = params.stop_diam * params.stop_diam;
  const int max_depth = params.max_depth;
  const int dd = int(d);
  const int n_blocks = max_depth / dd + 1;

  MpcResult res{.solution = {}, .tree_cost = 0.0,
                .budget = PrivacyBudget(epsilon), .trace = {}};
  Accounting acct(m, cluster.memory_words);

  std::unique_ptr<ResponsibilityMap> rmap;
  CountCore core = count_cells_core(data, walker, cluster, seed, acct,
                                    res.trace, rmap);

  // Wave down: cells learn their noisy weight in depth order; a weight
  // over the threshold activates both children on their machines. All
  // geometry flows through child_cell on the parent's bounds, the exact
  // arithmetic the sequential expansion runs.
  std::vector<std::map<CellKey, CellState>> states{std::size_t(m)};
  CellGeom root = root_cell(d, params.lambda);
  CellKey root_key{root.path_hash, 0};
  const int root_mach = rmap->machine(root_key);
  states[std::size_t(root_mach)].emplace(root_key, CellState{});
  states[std::size_t(root_mach)][root_key].geom = root;
  acct.alloc(root_mach, state_words(d));

  for (int b = 0; b < n_blocks; ++b) {
    const int lo = b * dd;
    const int hi = std::min(max_depth, (b + 1) * dd - 1);
    for (int depth = lo; depth <= hi; ++depth) {
      for (int mach = 0; mach < m; ++mach) {
        std::vector<CellKey> here;
        for (const auto& [key, st] : states[std::size_t(mach)])
          if (key.depth == depth) here.push_back(key);
        for (const CellKey& key : here) {
          CellState& st = states[std::size_t(mach)][key];
          auto cit = core.counts[std::size_t(mach)].find(key);
          st.count = cit == core.counts[std::size_t(mach)].end() ? 0
                                                                 : cit->second;
          if (!(st.geom.diam2 > stop2)) continue;
          st.w = double(st.count) +
                 keyed_laplace(wstream, key.hash, np.scale);
          st.weighted = true;
          if (st.w > np.tau && depth < max_depth) {
            st.expanded = true;
            for (int side = 0; side < 2; ++side) {
              CellGeom cg = child_cell(st.geom, side, walker.shifts());
              CellKey ck{cg.path_hash, depth + 1};
              int dest = rmap->machine(ck);
              acct.send(mach, dest, activation_words(d));
              acct.alloc(dest, state_words(d));
              CellState cs;
              cs.geom = std::move(cg);
              cs.parent_hash = key.hash;
              states[std::size_t(dest)].emplace(ck, std::move(cs));
            }
          }
        }
      }
    }
    acct.end_round(
        fmt::format("weight level {}", walker.level_of_depth(lo)), res.trace);
  }
  res.budget.charge("tree-weights", epsilon);

  // Bottom-up tables, one level block per round. Leaves base their table
  // on their own charge; parents fold both child tables with the shared
  // combine, then ship theirs one hop up.
  for (int b = n_blocks - 1; b >= 0; --b) {
    const int lo = b * dd;
    const int hi = std::min(max_depth, (b + 1) * dd - 1);
    for (int depth = hi; depth >= lo; --depth) {
      for (int mach = 0; mach < m; ++mach) {
        std::vector<CellKey> here;
        for (const auto& [key, st] : states[std::size_t(mach)])
          if (key.depth == depth) here.push_back(key);
        for (const CellKey& key : here) {
          CellState& st = states[std::size_t(mach)][key];
          st.v.assign(std::size_t(k) + 1, 0.0);
          st.v[0] =
              dp_cell_charge(st.weighted ? st.w : 0.0, st.geom.diam2, cfg.z);
          acct.alloc(mach, 2 * (std::uint64_t(k) + 1));
          if (st.expanded) {
            dp_combine(st.child_v[0], st.child_v[1], k, st.v, st.pick);
            st.child_v[0].clear();
            st.child_v[1].clear();
            acct.release(mach, 2 * table_words(k));
          }
          if (depth > 0) {
            CellKey pkey{st.parent_hash, depth - 1};
            int dest = rmap->machine(pkey);
            int side =
                child_path_hash(st.parent_hash, 0) == key.hash ? 0 : 1;
            acct.send(mach, dest, table_words(k));
            acct.alloc(dest, table_words(k));
            states[std::size_t(dest)][pkey].child_v[side] = st.v;
            st.v.clear();
            acct.release(mach, std::uint64_t(k) + 1);
          }
        }
      }
    }
    acct.end_round(
        fmt::format("dp-up level {}", walker.level_of_depth(lo)), res.trace);
  }
  res.tree_cost =
      states[std::size_t(root_mach)][root_key].v[std::size_t(k)];

  // Top-down extraction: each cell holds at most one token carrying its
  // center quota and branch bits; leaves turn tokens into center records
  // on machine 0.
  std::vector<std::vector<Token>> tokens{std::size_t(m)};
  tokens[std::size_t(root_mach)].push_back(Token{root_key, k, {}});
  acct.alloc(root_mach, token_words());
  std::vector<CenterRecord> records;

  for (int b = 0; b < n_blocks; ++b) {
    const int lo = b * dd;
    const int hi = std::min(max_depth, (b + 1) * dd - 1);
    for (int depth = lo; depth <= hi; ++depth) {
      for (int mach = 0; mach < m; ++mach) {
        std::vector<Token> here;
        auto& queue = tokens[std::size_t(mach)];
        for (std::size_t i = 0; i < queue.size();) {
          if (queue[i].key.depth == depth) {
            here.push_back(std::move(queue[i]));
            queue.erase(queue.begin() + std::ptrdiff_t(i));
          } else {
            ++i;
          }
        }
        std::sort(here.begin(), here.end(),
                  [](const Token& a, const Token& b_) {
                    return a.key < b_.key;
                  });
        for (Token& tok : here) {
          if (tok.j == 0) {
            acct.release(mach, token_words());
            continue;
          }
          CellState& st = states[std::size_t(mach)][tok.key];
          if (!st.expanded) {
            acct.send(mach, 0, center_words(d));
            acct.alloc(0, center_words(d));
            acct.release(mach, token_words());
            records.push_back(
                CenterRecord{tok.path, st.geom.center(), tok.j});
            continue;
          }
          int k1 = st.pick[std::size_t(tok.j)];
          for (int side = 0; side < 2; ++side) {
            CellKey ck{child_path_hash(tok.key.hash, side), depth + 1};
            int dest = rmap->machine(ck);
            Token child;
            child.key = ck;
            child.j = side == 0 ? k1 : tok.j - k1;
            child.path = tok.path;
            child.path.push(side);
            acct.send(mach, dest, token_words());
            acct.alloc(dest, token_words());
            tokens[std::size_t(dest)].push_back(std::move(child));
          }
          acct.release(mach, token_words());
        }
      }
    }
    acct.end_round(
        fmt::format("extract-down level {}", walker.level_of_depth(lo)),
        res.trace);
  }

  // Machine 0 orders records by branch bits; that equals the sequential
  // extraction's left-to-right emission order.
  std::sort(records.begin(), records.end(),
            [](const CenterRecord& a, const CenterRecord& b_) {
              return a.path < b_.path;
            });
  for (const CenterRecord& rec : records)
    for (int r = 0; r < rec.mult; ++r) res.solution.centers.push_back(rec.center);

  res.solution.z = cfg.z;
  res.solution.cost = assign_points(data, res.solution.centers, cfg.z,
                                    res.solution.assignment);
  return res;
}

MpcSample mpc_sample_for_projection(const Dataset& data,
                                    const std::vector<std::uint32_t>& assignment,
                                    std::size_t n_clusters, std::size_t t,
                                    const MpcConfig& cluster,
                                    std::uint64_t seed) {
  if (data.empty()) throw DataError("no points");
  if (assignment.size() != data.size())
    throw ConfigError("assignment size mismatch");
  if (n_clusters < 1) throw ConfigError("cluster count must be positive");
  validate_cluster(data.size(), data.dim(), 1, cluster);
  const int m = cluster.machines;
  const std::size_t d = data.dim();

  Accounting acct(m, cluster.memory_words);
  MpcSample out;
  out.per_cluster.assign(n_clusters, {});

  // Same round-robin placement as the main pipeline.
  std::vector<std::vector<std::uint32_t>> local{std::size_t(m)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    int mach = int(i % std::size_t(m));
    local[std::size_t(mach)].push_back(std::uint32_t(i));
    acct.recv_external(mach, d);
    acct.alloc(mach, d);
  }
  acct.end_round("distribute", out.trace);

  // members[mach][c]: this machine's points of cluster c, ascending.
  std::vector<std::vector<std::vector<std::uint32_t>>> members(
      std::size_t(m), std::vector<std::vector<std::uint32_t>>{n_clusters});
  for (int mach = 0; mach < m; ++mach) {
    for (std::uint32_t i : local[std::size_t(mach)]) {
      std::uint32_t c = assignment[i];
      if (c >= n_clusters) throw ConfigError("assignment out of range");
      members[std::size_t(mach)][c].push_back(i);
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
      if (members[std::size_t(mach)][c].empty()) continue;
      if (mach != 0) acct.send(mach, 0, 2);
      acct.alloc(0, 2);
    }
  }
  acct.end_round("sample-counts", out.trace);

  // Machine 0 draws global ranks per cluster without replacement, then
  // maps rank to (machine, local position) through the count prefixes.
  RngStream omega(seed, "mpc-omega");
  std::vector<std::vector<std::vector<std::uint32_t>>> wanted(
      std::size_t(m), std::vector<std::vector<std::uint32_t>>{n_clusters});
  for (std::size_t c = 0; c < n_clusters; ++c) {
    std::size_t n_c = 0;
    for (int mach = 0; mach < m; ++mach)
      n_c += members[std::size_t(mach)][c].size();
    if (n_c == 0) continue;
    std::size_t t_c = std::min(t, n_c);

    std::set<std::uint64_t> ranks;
    RngStream rc = omega.keyed(c);
    if (t_c == n_c) {
      for (std::uint64_t r = 0; r < n_c; ++r) ranks.insert(r);
    } else {
      for (std::uint64_t j = n_c - t_c; j < n_c; ++j) {
        std::uint64_t r = rc.next_u64() % (j + 1);
        if (!ranks.insert(r).second) ranks.insert(j);
      }
    }
    for (std::uint64_t r : ranks) {
      std::uint64_t left = r;
      for (int mach = 0; mach < m; ++mach) {
        std::size_t have = members[std::size_t(mach)][c].size();
        if (left < have) {
          wanted[std::size_t(mach)][c].push_back(std::uint32_t(left));
          if (mach != 0) acct.send(0, mach, 2);
          break;
        }
        left -= have;
      }
    }
  }
  acct.end_round("sample-request", out.trace);

  for (int mach = 0; mach < m; ++mach) {
    for (std::size_t c = 0; c < n_clusters; ++c) {
      for (std::uint32_t pos : wanted[std::size_t(mach)][c]) {
        std::uint32_t idx = members[std::size_t(mach)][c][pos];
        if (mach != 0) acct.send(mach, 0, d + 1);
        acct.alloc(0, d + 1);
        out.per_cluster[c].push_back(idx);
      }
    }
  }
  for (auto& v : out.per_cluster) std::sort(v.begin(), v.end());
  acct.end_round("sample-ship", out.trace);
  return out;
}

}  // namespace hst
