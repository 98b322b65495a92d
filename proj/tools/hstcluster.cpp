// Command line front end: cluster a CSV, run the benchmark matrix, drive
// the MPC simulator, generate synthetic data, or ingest a raw CSV into
// normalized form. Exit codes: 0 ok, 2 bad configuration, 3 simulated
// memory overflow, 4 bad data.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include "CLI11.hpp"
#include "json.hpp"

#include "hst/bench.hpp"
#include "hst/csv.hpp"
#include "hst/errors.hpp"
#include "hst/kmeans.hpp"
#include "hst/mpc.hpp"
#include "hst/pipeline.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json json_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

nlohmann::json ledger_json(const hst::PrivacyBudget& budget) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : budget.entries()) {
    j.push_back({{"label", e.label},
                 {"epsilon", json_num(e.eps)},
                 {"parallel", e.parallel}});
  }
  return j;
}

nlohmann::json centers_json(const std::vector<hst::Point>& centers,
                            const hst::NormalizeTransform& tf) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : centers) j.push_back(tf.to_raw(c));
  return j;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw hst::DataError("cannot open output file: " + out_path);
  out << j.dump(2) << "\n";
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw hst::DataError("cannot open output file: " + path);
  out << text;
}

struct CommonOpts {
  std::string in_path;
  std::string out_path;
  int k = 2;
  double epsilon = 1.0;
  bool no_privacy = false;
  std::uint64_t seed = 1;
  int z = 1;
  int alpha_depth = 12;
  double beta = 8.0;
  double lambda_smooth = 0.2;
  double gamma_grad = 0.0;

  double effective_epsilon() const { return no_privacy ? kInf : epsilon; }
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_tree_knobs) {
  cmd->add_option("--in", o.in_path, "input CSV of points")->required();
  cmd->add_option("--out", o.out_path, "write the JSON result here");
  cmd->add_option("--k", o.k, "number of centers");
  cmd->add_option("--epsilon", o.epsilon, "privacy budget");
  cmd->add_flag("--no-privacy", o.no_privacy, "disable noise (epsilon = inf)");
  cmd->add_option("--seed", o.seed, "rng seed");
  cmd->add_option("--z", o.z, "cost exponent")->check(CLI::IsMember({1, 2}));
  if (with_tree_knobs) {
    cmd->add_option("--alpha-depth", o.alpha_depth,
                    "tree depth multiplier (experimental tree)");
    cmd->add_option("--beta", o.beta,
                    "pruning threshold multiplier (experimental tree)");
    cmd->add_option("--lambda-smooth", o.lambda_smooth,
                    "1-median smoothing radius");
    cmd->add_option("--gamma-grad", o.gamma_grad,
                    "1-median gradient noise floor (0 = auto)");
  }
}

hst::SyntheticKind parse_kind(const std::string& kind) {
  if (kind == "blobs") return hst::SyntheticKind::kBlobs;
  if (kind == "uniform") return hst::SyntheticKind::kUniform;
  if (kind == "line") return hst::SyntheticKind::kLine;
  throw hst::ConfigError("unknown dataset kind: " + kind);
}

// Debug view of the expanded tree: one record per materialized cell with
// its depth, bounds, exact count and (where drawn) the noisy weight.
// Bounds are in normalized coordinates.
nlohmann::json tree_dump_json(const hst::Quadtree& tree,
                              const hst::NoisyWeights& weights) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t id = 0; id < tree.num_cells(); ++id) {
    const auto& c = tree.cell(std::int32_t(id));
    nlohmann::json cj;
    cj["id"] = id;
    cj["depth"] = c.geom.depth;
    cj["lo"] = c.geom.lo;
    cj["hi"] = c.geom.hi;
    cj["count"] = c.count();
    cj["leaf"] = c.child[0] < 0;
    if (c.parent >= 0) cj["parent"] = c.parent;
    if (weights.weighted(std::int32_t(id)))
      cj["weight"] = weights.w[id];
    cells.push_back(std::move(cj));
  }
  nlohmann::json j;
  j["cells"] = std::move(cells);
  j["tau"] = weights.tau;
  j["noise_scale"] = weights.noise_scale;
  return j;
}

int run_cluster(const CommonOpts& o, const std::string& algorithm,
                bool experimental, const std::string& dump_tree_path) {
  if (!dump_tree_path.empty() && algorithm != "tree")
    throw hst::ConfigError("--dump-tree requires --algorithm tree");
  const hst::Dataset raw = hst::read_csv_file(o.in_path);
  const hst::NormalizedData nd = hst::normalize(raw, 1.0);
  const double eps = o.effective_epsilon();

  nlohmann::json j;
  j["algorithm"] = algorithm;
  j["k"] = o.k;
  j["z"] = o.z;
  j["epsilon"] = json_num(eps);
  j["seed"] = o.seed;
  j["n"] = nd.data.size();
  j["dim"] = nd.data.dim();

  const auto t0 = std::chrono::steady_clock::now();
  if (algorithm == "tree") {
    hst::TreeClusterConfig cfg;
    cfg.z = o.z;
    cfg.experimental = experimental;
    cfg.alpha_depth = o.alpha_depth;
    cfg.beta = o.beta;
    auto res = hst::dp_kmedian(nd.data, o.k, eps, o.seed, cfg);
    j["cost"] = json_num(res.solution.cost / std::pow(nd.transform.scale, o.z));
    j["tree_cost"] = json_num(res.tree_cost);
    j["centers"] = centers_json(res.solution.centers, nd.transform);
    j["ledger"] = ledger_json(res.budget);
    j["ledger_total"] = json_num(res.budget.charged());
    if (!dump_tree_path.empty())
      emit(tree_dump_json(*res.tree, res.weights), dump_tree_path);
  } else if (algorithm == "high-dim") {
    hst::HighDimConfig cfg;
    cfg.tree.z = 1;
    cfg.tree.experimental = experimental;
    cfg.tree.alpha_depth = o.alpha_depth;
    cfg.tree.beta = o.beta;
    cfg.lambda_smooth = o.lambda_smooth;
    cfg.gamma_grad = o.gamma_grad;
    auto res = hst::kmedian_high_dim(nd.data, o.k, eps, o.seed, cfg);
    j["cost"] = json_num(res.solution.cost / nd.transform.scale);
    j["tree_cost"] = json_num(res.tree_cost);
    j["projected_dim"] = res.projected_dim;
    j["centers"] = centers_json(res.solution.centers, nd.transform);
    j["ledger"] = ledger_json(res.budget);
    j["ledger_total"] = json_num(res.budget.charged());
  } else if (algorithm == "kmeans") {
    hst::KMeansConfig cfg;
    auto res = hst::kmeans_exact_k(nd.data, o.k, eps, o.seed, cfg);
    j["z"] = 2;
    j["cost"] = json_num(res.solution.cost / std::pow(nd.transform.scale, 2));
    j["centers"] = centers_json(res.solution.centers, nd.transform);
    j["ledger"] = ledger_json(res.budget);
    j["ledger_total"] = json_num(res.budget.charged());
  } else if (algorithm == "hst") {
    hst::HstProtocolConfig cfg;
    cfg.z = o.z;
    cfg.alpha_depth = o.alpha_depth;
    cfg.beta = o.beta;
    cfg.lambda_smooth = o.lambda_smooth;
    cfg.gamma_grad = o.gamma_grad;
    hst::PrivacyBudget budget(eps);
    auto res = hst::hst_protocol(nd.data, o.k, eps, o.seed, cfg, budget);
    j["cost"] = json_num(res.solution.cost / std::pow(nd.transform.scale, o.z));
    j["tree_cost"] = json_num(res.tree_cost);
    j["centers"] = centers_json(res.solution.centers, nd.transform);
    j["ledger"] = ledger_json(budget);
    j["ledger_total"] = json_num(budget.charged());
  } else {
    throw hst::ConfigError("unknown algorithm: " + algorithm);
  }
  const auto t1 = std::chrono::steady_clock::now();
  j["wall_ms"] =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 -
                                                                            t0)
          .count();
  emit(j, o.out_path);
  return 0;
}

int run_mpc(const CommonOpts& o, int machines, std::uint64_t memory_words,
            bool experimental) {
  const hst::Dataset raw = hst::read_csv_file(o.in_path);
  const hst::NormalizedData nd = hst::normalize(raw, 1.0);
  hst::TreeClusterConfig cfg;
  cfg.z = o.z;
  cfg.experimental = experimental;
  cfg.alpha_depth = o.alpha_depth;
  cfg.beta = o.beta;
  hst::MpcConfig mpc;
  mpc.machines = machines;
  mpc.memory_words = memory_words;
  auto res =
      hst::mpc_run_kmedian(nd.data, o.k, o.effective_epsilon(), mpc, o.seed, cfg);

  nlohmann::json j;
  j["algorithm"] = "hst-mpc";
  j["k"] = o.k;
  j["z"] = o.z;
  j["epsilon"] = json_num(o.effective_epsilon());
  j["seed"] = o.seed;
  j["machines"] = machines;
  j["memory_words"] = memory_words;
  j["cost"] = json_num(res.solution.cost / std::pow(nd.transform.scale, o.z));
  j["tree_cost"] = json_num(res.tree_cost);
  j["centers"] = centers_json(res.solution.centers, nd.transform);
  j["ledger"] = ledger_json(res.budget);
  j["ledger_total"] = json_num(res.budget.charged());
  j["rounds"] = res.trace.total_rounds();
  j["peak_resident_words"] = res.trace.peak_resident;
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : res.trace.rounds) {
    rounds.push_back({{"round", r.round},
                      {"phase", r.phase},
                      {"messages", r.messages},
                      {"words", r.words},
                      {"max_in", r.max_in},
                      {"max_out", r.max_out},
                      {"max_resident", r.max_resident}});
  }
  j["trace"] = std::move(rounds);
  emit(j, o.out_path);
  return 0;
}

int run_bench(const std::string& in_path, const std::string& kind,
              std::size_t n, std::size_t d, std::size_t blobs, double sigma,
              std::vector<std::string> algorithms, std::vector<int> ks,
              std::vector<double> epsilons, bool no_privacy,
              std::vector<std::uint64_t> seeds, int reps, int z,
              const CommonOpts& o, const std::string& csv_path) {
  hst::Dataset data;
  std::string dataset_name;
  if (!in_path.empty()) {
    data = hst::normalize(hst::read_csv_file(in_path), 1.0).data;
    dataset_name = in_path;
  } else {
    hst::RngStream rng(o.seed, "gen-data");
    hst::SyntheticParams params;
    params.blobs = blobs;
    params.sigma = sigma;
    data = hst::gen_synthetic(parse_kind(kind), n, d, params, rng).data;
    dataset_name = fmt::format("{}(n={},d={})", kind, n, d);
  }
  hst::ExperimentSpec spec;
  spec.dataset = dataset_name;
  spec.algorithms = std::move(algorithms);
  spec.ks = std::move(ks);
  spec.epsilons = no_privacy ? std::vector<double>{kInf} : std::move(epsilons);
  spec.seeds = std::move(seeds);
  spec.repetitions = reps;
  spec.z = z;
  spec.alpha_depth = o.alpha_depth;
  spec.beta = o.beta;
  spec.lambda_smooth = o.lambda_smooth;
  spec.gamma_grad = o.gamma_grad;

  const hst::RunReport report = hst::run_matrix(data, spec);
  const std::string json_text = hst::report_to_json(report);
  if (o.out_path.empty()) {
    std::cout << json_text << "\n";
  } else {
    write_text(json_text + "\n", o.out_path);
  }
  if (!csv_path.empty()) write_text(hst::report_plot_csv(report), csv_path);

  std::size_t failed = 0;
  for (const auto& row : report.rows) {
    if (!row.error.empty()) ++failed;
  }
  if (failed > 0) {
    std::cerr << fmt::format("{} of {} runs failed; see the report\n", failed,
                             report.rows.size());
  }
  return 0;
}

int run_gen(const std::string& kind, std::size_t n, std::size_t d,
            std::size_t blobs, double sigma, std::uint64_t seed,
            const std::string& out_path, const std::string& meta_path) {
  hst::RngStream rng(seed, "gen-data");
  hst::SyntheticParams params;
  params.blobs = blobs;
  params.sigma = sigma;
  hst::SyntheticData data = hst::gen_synthetic(parse_kind(kind), n, d, params, rng);
  hst::write_csv_file(out_path, data.data);
  if (!meta_path.empty()) {
    nlohmann::json meta;
    meta["kind"] = kind;
    meta["n"] = n;
    meta["dim"] = d;
    meta["sigma"] = sigma;
    meta["seed"] = seed;
    meta["means"] = data.means;
    meta["labels"] = data.labels;
    emit(meta, meta_path);
  }
  return 0;
}

// Raw CSV ingestion: split rows on commas or whitespace, drop an optional
// label column, parse the rest as doubles, then recenter and rescale into
// the unit ball. The transform is written next to the data so results can
// be mapped back to the original units.
int run_ingest(const std::string& in_path, const std::string& out_path,
               int label_col, double lambda, const std::string& meta_path) {
  std::ifstream in(in_path);
  if (!in) throw hst::DataError("cannot open input file: " + in_path);
  std::vector<double> coords;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream row(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (row >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (label_col >= 0) {
      const std::size_t drop =
          std::min(std::size_t(label_col), tokens.size() - 1);
      tokens.erase(tokens.begin() + std::ptrdiff_t(drop));
    }
    std::vector<double> vals;
    bool numeric = true;
    for (const std::string& t : tokens) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(t, &used));
        if (used != t.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (!numeric) {
      if (lineno == 1) continue;  // header row
      throw hst::DataError(
          fmt::format("non-numeric value at line {} of {}", lineno, in_path));
    }
    if (dim == 0) dim = vals.size();
    if (vals.size() != dim) {
      throw hst::DataError(
          fmt::format("ragged row at line {} of {}", lineno, in_path));
    }
    coords.insert(coords.end(), vals.begin(), vals.end());
  }
  if (coords.empty()) throw hst::DataError("no data rows in " + in_path);
  const hst::Dataset raw(dim, std::move(coords));
  const hst::NormalizedData nd = hst::normalize(raw, lambda);
  hst::write_csv_file(out_path, nd.data);
  if (!meta_path.empty()) {
    nlohmann::json meta;
    meta["source"] = in_path;
    meta["n"] = nd.data.size();
    meta["dim"] = nd.data.dim();
    meta["lambda"] = lambda;
    meta["shift"] = nd.transform.shift;
    meta["scale"] = nd.transform.scale;
    meta["label_col"] = label_col;
    emit(meta, meta_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private Euclidean clustering"};
  app.require_subcommand(1);

  CommonOpts cluster_opts;
  std::string cluster_alg = "tree";
  bool cluster_experimental = false;
  std::string cluster_dump_tree;
  CLI::App* cluster = app.add_subcommand("cluster", "cluster a CSV of points");
  add_common(cluster, cluster_opts, true);
  cluster->add_option("--algorithm", cluster_alg, "tree, high-dim, kmeans, hst")
      ->check(CLI::IsMember({"tree", "high-dim", "kmeans", "hst"}));
  cluster->add_flag("--experimental", cluster_experimental,
                    "fixed-depth tree with pruning threshold beta");
  cluster->add_option("--dump-tree", cluster_dump_tree,
                      "write the expanded tree cells as JSON (tree only)");

  CommonOpts mpc_opts;
  int machines = 4;
  std::uint64_t memory_words = 0;
  bool mpc_experimental = false;
  CLI::App* mpc = app.add_subcommand("mpc-sim", "simulate the distributed run");
  add_common(mpc, mpc_opts, true);
  mpc->add_option("--machines", machines, "machine count")->check(CLI::PositiveNumber);
  mpc->add_option("--memory-words", memory_words,
                  "per-machine memory in words (0 = unbounded)");
  mpc->add_flag("--experimental", mpc_experimental,
                "fixed-depth tree with pruning threshold beta");

  CommonOpts bench_opts;
  std::string bench_in;
  std::string bench_kind = "blobs";
  std::size_t bench_n = 10000, bench_d = 2, bench_blobs = 4;
  double bench_sigma = 0.05;
  std::vector<std::string> bench_algorithms = {"hst", "kmedianpp"};
  std::vector<int> bench_ks = {4};
  std::vector<double> bench_eps = {1.0};
  bool bench_no_privacy = false;
  std::vector<std::uint64_t> bench_seeds = {1};
  int bench_reps = 1;
  int bench_z = 1;
  std::string bench_csv;
  CLI::App* bench = app.add_subcommand("bench", "run the experiment matrix");
  bench->add_option("--in", bench_in, "input CSV (overrides --kind)");
  bench->add_option("--kind", bench_kind, "blobs, uniform, line")
      ->check(CLI::IsMember({"blobs", "uniform", "line"}));
  bench->add_option("--n", bench_n, "synthetic point count");
  bench->add_option("--d", bench_d, "synthetic dimension");
  bench->add_option("--blobs", bench_blobs, "blob count");
  bench->add_option("--sigma", bench_sigma, "blob spread");
  bench->add_option("--algorithms", bench_algorithms,
                    "hst, hst-mpc, private-lloyd, kmedianpp, kmeans-dp");
  bench->add_option("--k", bench_ks, "center counts");
  bench->add_option("--epsilon", bench_eps, "privacy budgets");
  bench->add_flag("--no-privacy", bench_no_privacy, "noise disabled");
  bench->add_option("--seeds", bench_seeds, "rng seeds");
  bench->add_option("--reps", bench_reps, "repetitions per seed");
  bench->add_option("--z", bench_z, "cost exponent")->check(CLI::IsMember({1, 2}));
  bench->add_option("--seed", bench_opts.seed, "seed for synthetic data");
  bench->add_option("--alpha-depth", bench_opts.alpha_depth, "tree depth multiplier");
  bench->add_option("--beta", bench_opts.beta, "pruning threshold multiplier");
  bench->add_option("--lambda-smooth", bench_opts.lambda_smooth,
                    "1-median smoothing radius");
  bench->add_option("--gamma-grad", bench_opts.gamma_grad,
                    "1-median gradient noise floor (0 = auto)");
  bench->add_option("--out", bench_opts.out_path, "report JSON path");
  bench->add_option("--csv", bench_csv, "plot series CSV path");

  std::string gen_kind = "blobs";
  std::size_t gen_n = 10000, gen_d = 2, gen_blobs = 4;
  double gen_sigma = 0.05;
  std::uint64_t gen_seed = 1;
  std::string gen_out, gen_meta;
  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  gen->add_option("--kind", gen_kind, "blobs, uniform, line")
      ->check(CLI::IsMember({"blobs", "uniform", "line"}));
  gen->add_option("--n", gen_n, "point count");
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--blobs", gen_blobs, "blob count");
  gen->add_option("--sigma", gen_sigma, "blob spread");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--meta", gen_meta, "ground truth JSON path");

  std::string ing_in, ing_out, ing_meta;
  int ing_label = -1;
  double ing_lambda = 1.0;
  CLI::App* ing = app.add_subcommand("ingest", "normalize a raw CSV");
  ing->add_option("--in", ing_in, "raw CSV path")->required();
  ing->add_option("--out", ing_out, "normalized CSV path")->required();
  ing->add_option("--label-col", ing_label,
                  "column index to drop (-1 keeps all columns)");
  ing->add_option("--lambda", ing_lambda, "target ball radius");
  ing->add_option("--meta", ing_meta, "transform JSON path");

  try {
    app.parse(argc, argv);
    if (cluster->parsed()) {
      return run_cluster(cluster_opts, cluster_alg, cluster_experimental,
                         cluster_dump_tree);
    }
    if (mpc->parsed()) {
      return run_mpc(mpc_opts, machines, memory_words, mpc_experimental);
    }
    if (bench->parsed()) {
      return run_bench(bench_in, bench_kind, bench_n, bench_d, bench_blobs,
                       bench_sigma, bench_algorithms, bench_ks, bench_eps,
                       bench_no_privacy, bench_seeds, bench_reps, bench_z,
                       bench_opts, bench_csv);
    }
    if (gen->parsed()) {
      return run_gen(gen_kind, gen_n, gen_d, gen_blobs, gen_sigma, gen_seed,
                     gen_out, gen_meta);
    }
    if (ing->parsed()) {
      return run_ingest(ing_in, ing_out, ing_label, ing_lambda, ing_meta);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const hst::MemoryOverflow& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const hst::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hst::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
