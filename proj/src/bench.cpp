#include "hst/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <utility>

#include <fmt/format.h>
#include "json.hpp"

#include "hst/errors.hpp"
#include "hst/kmeans.hpp"
#include "hst/mpc.hpp"
#include "hst/pipeline.hpp"

namespace hst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Point ball_point(std::size_t d, double radius, RngStream& rng) {
  Point p(d);
  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    p[j] = rng.gaussian();
    norm2 += p[j] * p[j];
  }
  const double norm = std::sqrt(norm2);
  const double r = radius * std::pow(rng.uniform01(), 1.0 / double(d));
  const double f = norm > 0.0 ? r / norm : 0.0;
  for (double& x : p) x *= f;
  return p;
}

void clamp_into_ball(Point& p, double lambda) {
  double norm2 = 0.0;
  for (double x : p) norm2 += x * x;
  const double limit = lambda * (1.0 - 1e-9);
  if (norm2 <= limit * limit) return;
  const double f = limit / std::sqrt(norm2);
  for (double& x : p) x *= f;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                    std::size_t t,
                                                    RngStream rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (t >= n) return idx;
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t j = i + std::size_t(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(t);
  return idx;
}

void replay_ledger(const PrivacyBudget& from, PrivacyBudget& into) {
  for (const auto& e : from.entries()) {
    if (e.parallel) {
      into.charge_parallel(e.label, e.eps);
    } else {
      into.charge(e.label, e.eps);
    }
  }
}

}  // namespace

SyntheticData gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d,
                            const SyntheticParams& params, RngStream& rng) {
  if (n == 0 || d == 0) throw ConfigError("gen_synthetic: empty shape");
  if (params.lambda <= 0.0) throw ConfigError("gen_synthetic: lambda <= 0");
  const double lambda = params.lambda;
  SyntheticData out{Dataset(d, {}), {}, {}};
  std::vector<double> coords;
  coords.reserve(n * d);
  switch (kind) {
    case SyntheticKind::kBlobs: {
      const std::size_t b = std::max<std::size_t>(params.blobs, 1);
      // Rejection-sample well separated means; the separation demand
      // relaxes geometrically so the loop always terminates.
      double min_sep = 0.5 * lambda;
      for (std::size_t i = 0; i < b; ++i) {
        Point mean;
        for (int attempt = 0;; ++attempt) {
          mean = ball_point(d, 0.6 * lambda, rng);
          bool ok = true;
          for (const Point& prev : out.means) {
            if (l2_dist(mean, prev) < min_sep) ok = false;
          }
          if (ok) break;
          if (attempt % 64 == 63) min_sep *= 0.5;
        }
        out.means.push_back(std::move(mean));
      }
      out.labels.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t lab = std::uint32_t(i % b);
        Point p = out.means[lab];
        for (std::size_t j = 0; j < d; ++j) p[j] += params.sigma * rng.gaussian();
        clamp_into_ball(p, lambda);
        coords.insert(coords.end(), p.begin(), p.end());
        out.labels.push_back(lab);
      }
      break;
    }
    case SyntheticKind::kUniform: {
      for (std::size_t i = 0; i < n; ++i) {
        Point p = ball_point(d, lambda * (1.0 - 1e-9), rng);
        coords.insert(coords.end(), p.begin(), p.end());
      }
      break;
    }
    case SyntheticKind::kLine: {
      const Point a = ball_point(d, 0.8 * lambda, rng);
      const Point b = ball_point(d, 0.8 * lambda, rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform01();
        Point p(d);
        for (std::size_t j = 0; j < d; ++j) {
          p[j] = a[j] + t * (b[j] - a[j]) + params.sigma * rng.gaussian();
        }
        clamp_into_ball(p, lambda);
        coords.insert(coords.end(), p.begin(), p.end());
      }
      out.means = {a, b};
      break;
    }
  }
  out.data = Dataset(d, std::move(coords));
  return out;
}

Solution kmedianpp_baseline(const Dataset& data, int k, int lloyd_iters,
                            RngStream& rng, int z) {
  if (data.empty()) throw DataError("kmedianpp: empty dataset");
  if (k < 1) throw ConfigError("kmedianpp: k < 1");
  if (std::size_t(k) > data.size()) throw ConfigError("kmedianpp: k > n");
  if (z != 1 && z != 2) throw ConfigError("kmedianpp: z must be 1 or 2");
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  std::vector<Point> centers;
  std::vector<char> chosen(n, 0);
  std::vector<double> dist(n, kInf);
  auto add_center = [&](std::size_t i) {
    chosen[i] = 1;
    centers.push_back(data.point_copy(i));
    for (std::size_t p = 0; p < n; ++p) {
      const double dd = l2_dist(data.point(p), data.point(i));
      if (dd < dist[p]) dist[p] = dd;
    }
  };
  add_center(std::size_t(rng.next_u64() % n));
  while (centers.size() < std::size_t(k)) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      total += z == 1 ? dist[p] : dist[p] * dist[p];
    }
    if (total <= 0.0) {
      // All mass already covered; spend the remaining slots on fresh
      // indices so k == n always reaches zero cost.
      for (std::size_t p = 0; p < n && centers.size() < std::size_t(k); ++p) {
        if (!chosen[p]) add_center(p);
      }
      break;
    }
    double target = rng.uniform01() * total;
    std::size_t pick = n - 1;
    for (std::size_t p = 0; p < n; ++p) {
      target -= z == 1 ? dist[p] : dist[p] * dist[p];
      if (target <= 0.0) {
        pick = p;
        break;
      }
    }
    add_center(pick);
  }

  std::vector<std::uint32_t> assignment;
  for (int it = 0; it < lloyd_iters; ++it) {
    assign_points(data, centers, z, assignment);
    std::vector<std::vector<Point>> members(centers.size());
    for (std::size_t p = 0; p < n; ++p) {
      members[assignment[p]].push_back(data.point_copy(p));
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (members[c].empty()) continue;
      WeightedPoints wp{std::move(members[c]), {}};
      centers[c] = z == 1 ? weiszfeld(wp, 500, 1e-9) : weighted_mean(wp);
    }
  }

  Solution sol;
  sol.centers = std::move(centers);
  sol.z = z;
  sol.cost = assign_points(data, sol.centers, z, sol.assignment);
  (void)d;
  return sol;
}

Solution private_lloyd_baseline(const Dataset& data, int k, double epsilon,
                                const PrivateLloydConfig& cfg, RngStream& rng,
                                PrivacyBudget& budget) {
  if (data.empty()) throw DataError("private_lloyd: empty dataset");
  if (k < 1) throw ConfigError("private_lloyd: k < 1");
  if (cfg.iters < 1) throw ConfigError("private_lloyd: iters < 1");
  if (!(epsilon > 0.0)) throw ConfigError("private_lloyd: epsilon <= 0");
  const std::size_t n = data.size();
  const double eps_iter = epsilon / double(cfg.iters);

  std::vector<Point> centers;
  centers.reserve(std::size_t(k));
  for (int c = 0; c < k; ++c) {
    centers.push_back(ball_point(data.dim(), cfg.lambda, rng));
  }

  std::vector<std::uint32_t> assignment;
  for (int it = 0; it < cfg.iters; ++it) {
    assign_points(data, centers, 1, assignment);
    std::vector<std::vector<Point>> members(centers.size());
    for (std::size_t p = 0; p < n; ++p) {
      members[assignment[p]].push_back(data.point_copy(p));
    }
    // Clusters partition the data, so every 1-median below sees disjoint
    // points and the iteration costs eps_iter once, not k times.
    const std::string label = fmt::format("lloyd-iter-{}", it + 1);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (members[c].empty()) {
        centers[c] = ball_point(data.dim(), cfg.lambda, rng);
        continue;
      }
      WeightedPoints wp{std::move(members[c]), {}};
      OneMedianConfig mcfg;
      mcfg.epsilon = eps_iter;
      mcfg.lambda = cfg.lambda;
      mcfg.lambda_smooth = cfg.lambda_smooth;
      mcfg.gamma_grad = cfg.gamma_grad;
      PrivacyBudget local(eps_iter);
      RngStream rc = rng.keyed(std::uint64_t(it) * 65536u + c);
      centers[c] = dp_one_median(wp, mcfg, rc, local);
      budget.charge_parallel(label, local.charged());
    }
  }

  Solution sol;
  sol.centers = std::move(centers);
  sol.z = 1;
  sol.cost = assign_points(data, sol.centers, 1, sol.assignment);
  return sol;
}

HstRunResult hst_protocol(const Dataset& data, int k, double epsilon,
                          std::uint64_t seed, const HstProtocolConfig& cfg,
                          PrivacyBudget& budget) {
  if (data.empty()) throw DataError("hst_protocol: empty dataset");
  if (cfg.refine_iters < 0) throw ConfigError("hst_protocol: refine_iters < 0");
  if (!(epsilon > 0.0)) throw ConfigError("hst_protocol: epsilon <= 0");
  const double eps_unit = epsilon / double(1 + cfg.refine_iters);

  TreeClusterConfig tcfg;
  tcfg.z = cfg.z;
  tcfg.lambda = cfg.lambda;
  tcfg.experimental = true;
  tcfg.alpha_depth = cfg.alpha_depth;
  tcfg.beta = cfg.beta;
  TreePipelineResult tree = dp_kmedian(data, k, eps_unit, seed, tcfg);
  replay_ledger(tree.budget, budget);
  std::vector<Point> centers = tree.solution.centers;

  const std::size_t n = data.size();
  std::vector<std::uint32_t> assignment;
  for (int it = 1; it <= cfg.refine_iters; ++it) {
    assign_points(data, centers, cfg.z, assignment);
    std::vector<std::vector<std::size_t>> members(centers.size());
    for (std::size_t p = 0; p < n; ++p) members[assignment[p]].push_back(p);
    const RngStream sample_rng(seed, fmt::format("refine-sample-{}", it));
    const RngStream median_rng(seed, fmt::format("refine-median-{}", it));
    const std::string label = fmt::format("refine-{}", it);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (members[c].empty()) {
        budget.charge_parallel(label, eps_unit);
        continue;
      }
      std::vector<std::size_t> take = members[c];
      if (cfg.cluster_cap > 0 && take.size() > cfg.cluster_cap) {
        const auto pick = sample_without_replacement(
            take.size(), cfg.cluster_cap, sample_rng.keyed(c));
        std::vector<std::size_t> sub;
        sub.reserve(pick.size());
        for (std::size_t i : pick) sub.push_back(take[i]);
        take = std::move(sub);
      }
      WeightedPoints wp;
      wp.pts.reserve(take.size());
      for (std::size_t p : take) wp.pts.push_back(data.point_copy(p));
      PrivacyBudget local(eps_unit);
      RngStream rc = median_rng.keyed(c);
      if (cfg.z == 2) {
        centers[c] = dp_one_mean(wp, eps_unit, cfg.lambda, rc, local);
      } else {
        OneMedianConfig mcfg;
        mcfg.epsilon = eps_unit;
        mcfg.lambda = cfg.lambda;
        mcfg.lambda_smooth = cfg.lambda_smooth;
        mcfg.gamma_grad = cfg.gamma_grad;
        centers[c] = dp_one_median(wp, mcfg, rc, local);
      }
      budget.charge_parallel(label, local.charged());
    }
  }

  HstRunResult out;
  out.tree_cost = tree.tree_cost;
  out.solution.centers = std::move(centers);
  out.solution.z = cfg.z;
  out.solution.cost =
      assign_points(data, out.solution.centers, cfg.z, out.solution.assignment);
  return out;
}

namespace {

bool known_algorithm(const std::string& a) {
  return a == "hst" || a == "hst-mpc" || a == "private-lloyd" ||
         a == "kmedianpp" || a == "kmeans-dp";
}

bool algorithm_private(const std::string& a) { return a != "kmedianpp"; }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunRow run_cell(const Dataset& data, const ExperimentSpec& spec,
                const std::string& alg, int k, double epsilon,
                std::uint64_t seed) {
  RunRow row;
  row.algorithm = alg;
  row.k = k;
  row.z = alg == "kmeans-dp" ? 2 : spec.z;
  row.epsilon = algorithm_private(alg) ? epsilon : kInf;
  row.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (alg == "hst") {
      HstProtocolConfig cfg;
      cfg.z = spec.z;
      cfg.alpha_depth = spec.alpha_depth;
      cfg.beta = spec.beta;
      cfg.lambda = spec.lambda;
      cfg.lambda_smooth = spec.lambda_smooth;
      cfg.gamma_grad = spec.gamma_grad;
      PrivacyBudget budget(epsilon);
      HstRunResult res = hst_protocol(data, k, epsilon, seed, cfg, budget);
      row.cost = res.solution.cost;
      row.tree_cost = res.tree_cost;
      row.centers = res.solution.centers.size();
      row.ledger = budget.entries();
      row.ledger_total = budget.charged();
    } else if (alg == "hst-mpc") {
      TreeClusterConfig cfg;
      cfg.z = spec.z;
      cfg.lambda = spec.lambda;
      cfg.experimental = true;
      cfg.alpha_depth = spec.alpha_depth;
      cfg.beta = spec.beta;
      MpcConfig mpc;
      mpc.machines = spec.machines;
      mpc.memory_words = spec.memory_words;
      MpcResult res = mpc_run_kmedian(data, k, epsilon, mpc, seed, cfg);
      row.cost = res.solution.cost;
      row.tree_cost = res.tree_cost;
      row.centers = res.solution.centers.size();
      row.ledger = res.budget.entries();
      row.ledger_total = res.budget.charged();
    } else if (alg == "private-lloyd") {
      PrivateLloydConfig cfg;
      cfg.lambda = spec.lambda;
      cfg.lambda_smooth = spec.lambda_smooth;
      cfg.gamma_grad = spec.gamma_grad;
      PrivacyBudget budget(epsilon);
      RngStream rng(seed, "private-lloyd");
      Solution sol = private_lloyd_baseline(data, k, epsilon, cfg, rng, budget);
      row.cost = sol.cost;
      row.centers = sol.centers.size();
      row.ledger = budget.entries();
      row.ledger_total = budget.charged();
    } else if (alg == "kmedianpp") {
      RngStream rng(seed, "kmedianpp");
      Solution sol = kmedianpp_baseline(data, k, 10, rng, spec.z);
      row.cost = sol.cost;
      row.centers = sol.centers.size();
    } else if (alg == "kmeans-dp") {
      KMeansConfig cfg;
      cfg.lambda = spec.lambda;
      KMeansResult res = kmeans_exact_k(data, k, epsilon, seed, cfg);
      row.cost = res.solution.cost;
      row.centers = res.solution.centers.size();
      row.ledger = res.budget.entries();
      row.ledger_total = res.budget.charged();
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  row.wall_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 -
                                                                            t0)
          .count();
  return row;
}

}  // namespace

RunReport run_matrix(const Dataset& data, const ExperimentSpec& spec) {
  if (spec.algorithms.empty() || spec.ks.empty() || spec.epsilons.empty() ||
      spec.seeds.empty()) {
    throw ConfigError("run_matrix: empty axis");
  }
  if (spec.repetitions < 1) throw ConfigError("run_matrix: repetitions < 1");
  for (const auto& a : spec.algorithms) {
    if (!known_algorithm(a)) {
      throw ConfigError(fmt::format("run_matrix: unknown algorithm '{}'", a));
    }
  }
  for (int k : spec.ks) {
    if (k < 1) throw ConfigError("run_matrix: k < 1");
  }
  for (double e : spec.epsilons) {
    if (!(e > 0.0)) throw ConfigError("run_matrix: epsilon <= 0");
  }

  RunReport report;
  report.dataset = spec.dataset;
  for (const auto& alg : spec.algorithms) {
    // The epsilon axis collapses for non-private algorithms: one run per
    // (k, seed, repetition), reported at infinite epsilon.
    const std::size_t eps_cells =
        algorithm_private(alg) ? spec.epsilons.size() : 1;
    for (int k : spec.ks) {
      for (std::size_t ei = 0; ei < eps_cells; ++ei) {
        for (std::uint64_t seed : spec.seeds) {
          for (int rep = 0; rep < spec.repetitions; ++rep) {
            const std::uint64_t eff =
                rep == 0 ? seed : mix64(seed + std::uint64_t(rep));
            report.rows.push_back(
                run_cell(data, spec, alg, k, spec.epsilons[ei], eff));
          }
        }
      }
    }
  }

  // Normalize per (k, z) against the best non-private cost; when a noisy
  // run happens to beat every baseline the best run anchors the scale so
  // normalized costs never drop below one.
  std::map<std::pair<int, int>, double> best_np;
  std::map<std::pair<int, int>, double> best_all;
  for (const RunRow& row : report.rows) {
    if (!row.error.empty() || !std::isfinite(row.cost)) continue;
    const auto key = std::make_pair(row.k, row.z);
    auto [it, fresh] = best_all.emplace(key, row.cost);
    if (!fresh && row.cost < it->second) it->second = row.cost;
    if (row.algorithm == "kmedianpp" || std::isinf(row.epsilon)) {
      auto [jt, fresh2] = best_np.emplace(key, row.cost);
      if (!fresh2 && row.cost < jt->second) jt->second = row.cost;
    }
  }
  for (RunRow& row : report.rows) {
    if (!row.error.empty() || !std::isfinite(row.cost)) continue;
    const auto key = std::make_pair(row.k, row.z);
    double denom = best_all.at(key);
    const auto np = best_np.find(key);
    if (np != best_np.end()) denom = std::min(np->second, best_all.at(key));
    if (denom > 0.0) {
      row.normalized = row.cost / denom;
    } else {
      row.normalized = row.cost <= 0.0 ? 1.0 : kInf;
    }
  }

  std::map<std::tuple<std::string, int, double>, std::vector<const RunRow*>>
      groups;
  for (const RunRow& row : report.rows) {
    if (!row.error.empty()) continue;
    groups[{row.algorithm, row.k, row.epsilon}].push_back(&row);
  }
  for (const auto& [key, rows] : groups) {
    AggregateRow agg;
    agg.algorithm = std::get<0>(key);
    agg.k = std::get<1>(key);
    agg.epsilon = std::get<2>(key);
    agg.runs = rows.size();
    std::vector<double> costs, norms;
    double sum = 0.0;
    for (const RunRow* r : rows) {
      costs.push_back(r->cost);
      norms.push_back(r->normalized);
      sum += r->cost;
    }
    agg.median_cost = median_of(costs);
    agg.mean_cost = sum / double(rows.size());
    agg.median_normalized = median_of(norms);
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

namespace {

nlohmann::json json_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string csv_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  j["rows"] = nlohmann::json::array();
  for (const RunRow& row : report.rows) {
    nlohmann::json r;
    r["algorithm"] = row.algorithm;
    r["k"] = row.k;
    r["z"] = row.z;
    r["epsilon"] = json_num(row.epsilon);
    r["seed"] = row.seed;
    r["cost"] = json_num(row.cost);
    r["tree_cost"] = json_num(row.tree_cost);
    r["normalized"] = json_num(row.normalized);
    r["wall_ms"] = row.wall_ms;
    r["centers"] = row.centers;
    r["ledger_total"] = json_num(row.ledger_total);
    r["ledger"] = nlohmann::json::array();
    for (const auto& e : row.ledger) {
      r["ledger"].push_back({{"label", e.label},
                             {"epsilon", json_num(e.eps)},
                             {"parallel", e.parallel}});
    }
    if (!row.error.empty()) r["error"] = row.error;
    j["rows"].push_back(std::move(r));
  }
  j["aggregates"] = nlohmann::json::array();
  for (const AggregateRow& a : report.aggregates) {
    j["aggregates"].push_back({{"algorithm", a.algorithm},
                               {"k", a.k},
                               {"epsilon", json_num(a.epsilon)},
                               {"median_cost", json_num(a.median_cost)},
                               {"mean_cost", json_num(a.mean_cost)},
                               {"median_normalized", json_num(a.median_normalized)},
                               {"runs", a.runs}});
  }
  return j.dump(2);
}

std::string report_plot_csv(const RunReport& report) {
  std::string out =
      "algorithm,epsilon,k,median_cost,mean_cost,median_normalized,runs\n";
  for (const AggregateRow& a : report.aggregates) {
    out += fmt::format("{},{},{},{},{},{},{}\n", a.algorithm,
                       csv_num(a.epsilon), a.k, csv_num(a.median_cost),
                       csv_num(a.mean_cost), csv_num(a.median_normalized),
                       a.runs);
  }
  return out;
}

}  // namespace hst
