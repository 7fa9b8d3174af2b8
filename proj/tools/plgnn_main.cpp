#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "plgnn/data.hpp"
#include "plgnn/errors.hpp"
#include "plgnn/experiment.hpp"
#include "plgnn/plap.hpp"
#include "plgnn/spectral.hpp"
#include "plgnn/tape.hpp"
#include "plgnn/textio.hpp"

namespace {

using plgnn::ConfigError;
using plgnn::DataError;
using plgnn::NumericError;

struct CommonOpts {
  std::string config_path;
  // flag overrides; only applied when the user passed them
  CLI::App* app = nullptr;
  double p = 2.0, mu = 0.1, lr = 0.01, dropout = 0.5, rate = 0.0;
  std::size_t k = 6, hidden = 16, repeat = 20, jobs = 1;
  std::uint64_t seed = 1;
  std::string split = "sparse";
  std::string out = "out";
  bool detach = false;

  void attach(CLI::App* a) {
    app = a;
    a->add_option("--config", config_path, "experiment config JSON");
    a->add_option("--p", p, "p-Laplacian exponent");
    a->add_option("--mu", mu, "fit-term weight");
    a->add_option("--k", k, "message-passing steps");
    a->add_option("--lr", lr, "learning rate");
    a->add_option("--hidden", hidden, "hidden units");
    a->add_option("--dropout", dropout, "dropout rate");
    a->add_option("--split", split, "sparse|dense");
    a->add_option("--rate", rate, "noisy-edge rate r");
    a->add_option("--repeat", repeat, "number of seeded runs");
    a->add_option("--seed", seed, "base seed");
    a->add_option("--jobs", jobs, "parallel workers");
    a->add_flag("--detach-weights", detach, "freeze M/alpha/beta in backward");
    a->add_option("--out", out, "output directory");
  }

  plgnn::ExperimentConfig build() const {
    plgnn::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = plgnn::load_config(config_path);
    auto passed = [this](const char* name) { return app->count(name) > 0; };
    if (passed("--p")) cfg.p = p;
    if (passed("--mu")) cfg.mu = mu;
    if (passed("--k")) cfg.k = k;
    if (passed("--lr")) cfg.lr = lr;
    if (passed("--hidden")) cfg.hidden = hidden;
    if (passed("--dropout")) cfg.dropout = dropout;
    if (passed("--split")) cfg.split = plgnn::split_scheme_from_string(split);
    if (passed("--rate")) cfg.rate = rate;
    if (passed("--repeat")) cfg.repeat = repeat;
    if (passed("--seed")) cfg.seed = seed;
    if (passed("--jobs")) cfg.jobs = jobs;
    if (passed("--detach-weights")) cfg.detach_weights = detach;
    if (passed("--out")) cfg.out = out;
    return cfg;
  }
};

void add_data_options(CLI::App* a, std::string& edges, std::string& features,
                      std::string& labels) {
  a->add_option("--edges", edges, "edge list file");
  a->add_option("--features", features, "features CSV");
  a->add_option("--labels", labels, "labels file");
}

void report_runs(const std::vector<plgnn::RunResult>& runs) {
  for (const plgnn::RunResult& r : runs)
    std::cerr << plgnn::model_kind_name(r.model) << " seed " << r.seed
              << ": test_acc=" << plgnn::format_double(r.metrics.test_acc)
              << " wall_ms=" << plgnn::format_double(r.wall_ms) << '\n';
}

int cmd_train_or_bench(const plgnn::ExperimentConfig& cfg, bool bench) {
  const plgnn::Dataset ds = plgnn::prepare_dataset(cfg);
  std::filesystem::create_directories(cfg.out);

  std::vector<plgnn::RunResult> runs = plgnn::run_many(cfg, cfg.model, ds);
  if (bench && cfg.model != plgnn::ModelKind::mlp) {
    // benchmark protocol compares against the MLP baseline
    std::vector<plgnn::RunResult> mlp_runs =
        plgnn::run_many(cfg, plgnn::ModelKind::mlp, ds);
    runs.insert(runs.end(), mlp_runs.begin(), mlp_runs.end());
  }

  plgnn::write_runs_jsonl(cfg.out + "/runs.jsonl", runs);
  plgnn::write_summary_csv(cfg.out + "/summary.csv", runs);
  report_runs(runs);
  std::cout << cfg.out << "/runs.jsonl\n" << cfg.out << "/summary.csv\n";
  return 0;
}

int cmd_smooth(const plgnn::ExperimentConfig& cfg) {
  const plgnn::Dataset ds = plgnn::prepare_dataset(cfg);
  std::filesystem::create_directories(cfg.out);
  plgnn::PlapConfig pc;
  pc.p = cfg.p;
  pc.mu = cfg.mu;
  pc.steps = cfg.k;
  const plgnn::SmoothResult res = plgnn::run_smoother(ds.graph, ds.X, pc);
  plgnn::write_features_csv(res.F, cfg.out + "/smoothed.csv");
  std::ofstream trace(cfg.out + "/trace.csv");
  if (!trace) throw DataError("cannot write " + cfg.out + "/trace.csv");
  trace << "step,objective\n";
  for (std::size_t i = 0; i < res.trace.size(); ++i)
    trace << i << ',' << plgnn::format_double(res.trace[i]) << '\n';
  std::cout << cfg.out << "/smoothed.csv\n" << cfg.out << "/trace.csv\n";
  return 0;
}

int cmd_spectral_check(const std::string& graph_path, double p,
                       const std::string& pairs_path, const std::string& out_path,
                       const std::string& features_path, double mu,
                       const std::string& filter_csv) {
  const plgnn::SparseGraph g = plgnn::load_graph(graph_path);
  nlohmann::ordered_json report;
  report["p"] = p;
  report["n"] = g.num_nodes();
  const double bound = plgnn::eigenvalue_bound(g, p);
  report["eigenvalue_bound"] = bound;

  if (!features_path.empty()) {
    const plgnn::Matrix x = plgnn::read_features_csv(features_path);
    if (x.rows() != g.num_nodes())
      throw DataError("spectral-check: feature rows do not match the node count");
    const plgnn::FilterReport fr = plgnn::filter_response(g, x, p, mu);
    report["filter_n_k"] = fr.n_k;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const plgnn::FilterRow& row : fr.rows) {
      nlohmann::ordered_json one;
      one["node"] = row.node;
      one["grad_norm"] = row.grad_norm;
      one["g_value"] = row.g_value;
      one["threshold"] = row.threshold;
      one["regime"] = plgnn::regime_name(row.regime);
      rows.push_back(one);
    }
    report["filter"] = rows;
    if (!filter_csv.empty()) {
      std::ofstream csv(filter_csv);
      if (!csv) throw DataError("cannot write " + filter_csv);
      csv << "node,grad_norm,g_value,threshold,regime\n";
      for (const plgnn::FilterRow& row : fr.rows)
        csv << row.node << ',' << plgnn::format_double(row.grad_norm) << ','
            << plgnn::format_double(row.g_value) << ','
            << plgnn::format_double(row.threshold) << ','
            << plgnn::regime_name(row.regime) << '\n';
    }
  }

  if (p == 2.0) {
    const plgnn::EigenDecomposition eig = plgnn::eigh_p2(g);
    report["eigenvalues"] = eig.eigenvalues;
    report["offdiag_residual"] = eig.offdiag_residual;
    double max_residual = 0.0;
    std::size_t violations = 0;
    std::vector<plgnn::EigenPair> pairs(g.num_nodes());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      pairs[i].lambda = eig.eigenvalues[i];
      pairs[i].u.resize(g.num_nodes());
      for (std::size_t r = 0; r < g.num_nodes(); ++r)
        pairs[i].u[r] = eig.vectors(r, i);
      max_residual =
          std::max(max_residual, plgnn::verify_p_eigenpair(g, pairs[i], p));
      if (eig.eigenvalues[i] < -1e-10 || eig.eigenvalues[i] > bound + 1e-10)
        ++violations;
    }
    report["max_pair_residual"] = max_residual;
    report["bound_violations"] = violations;
    report["decomposition_residual"] = plgnn::decomposition_residual(g, pairs, p);
  } else if (!pairs_path.empty()) {
    std::ifstream in(pairs_path);
    if (!in) throw DataError("cannot open " + pairs_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw DataError(pairs_path + ": " + e.what());
    }
    if (!j.contains("pairs") || !j["pairs"].is_array())
      throw DataError(pairs_path + ": expected {\"pairs\": [...]}");
    nlohmann::ordered_json checked = nlohmann::ordered_json::array();
    for (const auto& item : j["pairs"]) {
      if (!item.contains("lambda") || !item.contains("vector"))
        throw DataError(pairs_path + ": each pair needs 'lambda' and 'vector'");
      plgnn::EigenPair pair;
      pair.lambda = item["lambda"].get<double>();
      pair.u = item["vector"].get<std::vector<double>>();
      const double res = plgnn::verify_p_eigenpair(g, pair, p);
      nlohmann::ordered_json one;
      one["lambda"] = pair.lambda;
      one["residual"] = res;
      one["within_bound"] = pair.lambda >= -1e-10 && pair.lambda <= bound + 1e-10;
      checked.push_back(one);
    }
    report["pairs"] = checked;
  } else {
    report["pairs"] = nlohmann::ordered_json::array();
    report["note"] = "no eigenpair file supplied; only the bound is reported";
  }

  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << text;
    std::cout << out_path << "\n";
  }
  return 0;
}

int cmd_csbm(std::size_t n, std::size_t f, double d, double eps, double phi,
             std::uint64_t seed, const std::string& out_dir) {
  const plgnn::CsbmParams params =
      plgnn::csbm_params_from_phi(n, f, d, eps, phi, seed);
  const plgnn::CsbmResult res = plgnn::generate_csbm(params);
  std::filesystem::create_directories(out_dir);
  plgnn::save_dataset(res.dataset, out_dir + "/edges.tsv",
                      out_dir + "/features.csv", out_dir + "/labels.txt");
  std::cerr << "lambda=" << plgnn::format_double(params.lambda)
            << " mu_feat=" << plgnn::format_double(params.mu_feat)
            << " repaired_nodes=" << res.repaired_nodes << '\n';
  std::cout << out_dir << "/edges.tsv\n"
            << out_dir << "/features.csv\n"
            << out_dir << "/labels.txt\n";
  return 0;
}

int cmd_perturb(const std::string& edges_path, double rate, std::uint64_t seed,
                const std::string& out_path) {
  const plgnn::SparseGraph g = plgnn::load_graph(edges_path);
  const plgnn::SparseGraph noisy = plgnn::perturb_edges(g, rate, seed);
  plgnn::save_edge_list(noisy, out_path);
  std::cout << out_path << "\n";
  return 0;
}

int cmd_entropy(const std::string& edges_path, const std::string& features_path,
                double p, double mu, std::size_t smooth_steps, std::size_t bins,
                const std::string& out_dir) {
  const plgnn::SparseGraph g = plgnn::load_graph(edges_path);
  plgnn::Matrix x = plgnn::read_features_csv(features_path);
  if (x.rows() != g.num_nodes())
    throw DataError("entropy: feature rows do not match the node count");
  if (smooth_steps > 0) {
    plgnn::PlapConfig pc;
    pc.p = p;
    pc.mu = mu;
    pc.steps = smooth_steps;
    x = plgnn::run_smoother(g, x, pc).F;
  }
  const std::vector<double> m = plgnn::compute_M(g, x, p);
  std::vector<double> alpha, beta;
  plgnn::compute_coeffs(g, m, mu, p, alpha, beta);
  const plgnn::EntropyResult res = plgnn::aggregation_entropy(g, m, alpha, bins);

  std::filesystem::create_directories(out_dir);
  std::ofstream per_node(out_dir + "/entropy.csv");
  if (!per_node) throw DataError("cannot write " + out_dir + "/entropy.csv");
  per_node << "node,entropy\n";
  for (std::size_t i = 0; i < res.entropy.size(); ++i)
    per_node << i << ',' << plgnn::format_double(res.entropy[i]) << '\n';
  std::ofstream hist(out_dir + "/entropy_hist.csv");
  if (!hist) throw DataError("cannot write " + out_dir + "/entropy_hist.csv");
  hist << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < res.histogram.size(); ++b)
    hist << plgnn::format_double(res.bin_width * static_cast<double>(b)) << ','
         << plgnn::format_double(res.bin_width * static_cast<double>(b + 1))
         << ',' << res.histogram[b] << '\n';
  std::cout << out_dir << "/entropy.csv\n" << out_dir << "/entropy_hist.csv\n";
  return 0;
}

int cmd_homophily(const std::string& edges_path, const std::string& labels_path) {
  const plgnn::SparseGraph g = plgnn::load_graph(edges_path);
  const std::vector<std::uint32_t> labels = plgnn::read_labels(labels_path);
  if (labels.size() != g.num_nodes())
    throw DataError("homophily: " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(g.num_nodes()) + " nodes");
  std::cout << plgnn::format_double(plgnn::homophily(g, labels)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-Laplacian graph learning toolkit"};
  app.require_subcommand(1);

  CommonOpts train_opts, bench_opts, smooth_opts;
  std::string t_edges, t_features, t_labels;
  std::string b_edges, b_features, b_labels;
  std::string s_edges, s_features, s_labels;

  CLI::App* train = app.add_subcommand("train", "multi-seed training runs");
  train_opts.attach(train);
  train->add_option("--model", "pgnn|mlp")->type_name("TEXT");
  add_data_options(train, t_edges, t_features, t_labels);

  CLI::App* bench = app.add_subcommand(
      "bench", "benchmark protocol: model plus MLP baseline");
  bench_opts.attach(bench);
  add_data_options(bench, b_edges, b_features, b_labels);

  CLI::App* smooth =
      app.add_subcommand("smooth", "standalone p-Laplacian smoothing");
  smooth_opts.attach(smooth);
  add_data_options(smooth, s_edges, s_features, s_labels);

  CLI::App* spectral = app.add_subcommand("spectral-check",
                                          "eigen verification report");
  std::string sp_graph, sp_pairs, sp_out, sp_features, sp_filter_csv;
  double sp_p = 2.0, sp_mu = 0.1;
  spectral->add_option("--graph", sp_graph, "edge list file")->required();
  spectral->add_option("--p", sp_p, "p value");
  spectral->add_option("--pairs", sp_pairs, "candidate eigenpair JSON");
  spectral->add_option("--features", sp_features,
                       "node signal for the filter-regime report");
  spectral->add_option("--mu", sp_mu, "fit-term weight for the filter report");
  spectral->add_option("--filter-csv", sp_filter_csv,
                       "also write the per-node filter report as CSV");
  spectral->add_option("--out", sp_out, "report path (stdout otherwise)");

  CLI::App* csbm = app.add_subcommand("csbm", "generate a cSBM dataset");
  std::size_t c_n = 800, c_f = 200;
  double c_d = 10.0, c_eps = 3.25, c_phi = 0.0;
  std::uint64_t c_seed = 1;
  std::string c_out = "csbm_out";
  csbm->add_option("--n", c_n, "nodes");
  csbm->add_option("--f", c_f, "features");
  csbm->add_option("--d", c_d, "mean degree");
  csbm->add_option("--epsilon", c_eps, "SNR budget epsilon");
  csbm->add_option("--phi", c_phi, "phi in [-1,1]");
  csbm->add_option("--seed", c_seed, "seed");
  csbm->add_option("--out", c_out, "output directory");

  CLI::App* perturb = app.add_subcommand("perturb", "noisy-edge rewiring");
  std::string p_edges, p_out = "perturbed_edges.tsv";
  double p_rate = 0.0;
  std::uint64_t p_seed = 1;
  perturb->add_option("--edges", p_edges, "edge list file")->required();
  perturb->add_option("--rate", p_rate, "random edge rate r")->required();
  perturb->add_option("--seed", p_seed, "seed");
  perturb->add_option("--out", p_out, "output edge list");

  CLI::App* entropy =
      app.add_subcommand("entropy", "aggregation-weight entropy analysis");
  std::string e_edges, e_features, e_out = "entropy_out";
  double e_p = 2.0, e_mu = 0.1;
  std::size_t e_k = 0, e_bins = 30;
  entropy->add_option("--edges", e_edges, "edge list file")->required();
  entropy->add_option("--features", e_features, "features CSV")->required();
  entropy->add_option("--p", e_p, "p value");
  entropy->add_option("--mu", e_mu, "fit-term weight");
  entropy->add_option("--k", e_k, "smoothing steps before the analysis");
  entropy->add_option("--bins", e_bins, "histogram bins");
  entropy->add_option("--out", e_out, "output directory");

  CLI::App* homophily = app.add_subcommand("homophily", "print H(G)");
  std::string h_edges, h_labels;
  homophily->add_option("--edges", h_edges, "edge list file")->required();
  homophily->add_option("--labels", h_labels, "labels file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    auto with_files = [](plgnn::ExperimentConfig cfg, const std::string& e,
                         const std::string& f, const std::string& l) {
      if (!e.empty() || !f.empty() || !l.empty()) {
        cfg.data = plgnn::DataSource{};
        cfg.data.edges = e;
        cfg.data.features = f;
        cfg.data.labels = l;
      }
      return cfg;
    };
    if (train->parsed()) {
      plgnn::ExperimentConfig cfg =
          with_files(train_opts.build(), t_edges, t_features, t_labels);
      if (train->count("--model") > 0)
        cfg.model = plgnn::model_kind_from_string(
            train->get_option("--model")->as<std::string>());
      cfg.validate();
      return cmd_train_or_bench(cfg, false);
    }
    if (bench->parsed()) {
      plgnn::ExperimentConfig cfg =
          with_files(bench_opts.build(), b_edges, b_features, b_labels);
      cfg.validate();
      return cmd_train_or_bench(cfg, true);
    }
    if (smooth->parsed()) {
      plgnn::ExperimentConfig cfg =
          with_files(smooth_opts.build(), s_edges, s_features, s_labels);
      return cmd_smooth(cfg);
    }
    if (spectral->parsed())
      return cmd_spectral_check(sp_graph, sp_p, sp_pairs, sp_out, sp_features,
                                sp_mu, sp_filter_csv);
    if (csbm->parsed())
      return cmd_csbm(c_n, c_f, c_d, c_eps, c_phi, c_seed, c_out);
    if (perturb->parsed()) return cmd_perturb(p_edges, p_rate, p_seed, p_out);
    if (entropy->parsed())
      return cmd_entropy(e_edges, e_features, e_p, e_mu, e_k, e_bins, e_out);
    if (homophily->parsed()) return cmd_homophily(h_edges, h_labels);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
