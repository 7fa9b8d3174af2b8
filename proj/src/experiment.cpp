#include "plgnn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "plgnn/errors.hpp"
#include "plgnn/plap.hpp"
#include "plgnn/tape.hpp"
#include "plgnn/textio.hpp"

namespace plgnn {

const char* model_kind_name(ModelKind kind) {
  return kind == ModelKind::pgnn ? "pgnn" : "mlp";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "pgnn") return ModelKind::pgnn;
  if (s == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model '" + s + "' (expected pgnn|mlp)");
}

TrainConfig ExperimentConfig::train_config(std::uint64_t run_seed) const {
  TrainConfig tc;
  tc.lr = lr;
  tc.weight_decay = weight_decay;
  tc.dropout = dropout;
  tc.max_epochs = max_epochs;
  tc.patience = patience;
  tc.hidden = hidden;
  tc.seed = run_seed;
  tc.dropout_second = dropout_second;
  tc.plap.p = p;
  tc.plap.mu = mu;
  tc.plap.steps = k;
  tc.plap.detach_weights = detach_weights;
  return tc;
}

void ExperimentConfig::validate() const {
  train_config(seed).validate();
  if (repeat == 0) throw ConfigError("repeat must be >= 1");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (rate < 0.0 || rate > 1.0) throw ConfigError("rate must lie in [0,1]");
  if (!data.use_csbm &&
      (data.edges.empty() || data.features.empty() || data.labels.empty()))
    throw ConfigError("data: either csbm parameters or all three file paths are required");
}

namespace {

void reject_unknown(const nlohmann::ordered_json& j,
                    const std::set<std::string>& known, const char* where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key))
      throw ConfigError(std::string("unknown config key '") + key + "' in " +
                        where);
  }
}

template <typename T>
void maybe(const nlohmann::ordered_json& j, const char* key, T& into) {
  if (j.contains(key)) {
    try {
      into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::ordered_json& j) {
  reject_unknown(j, {"model", "p", "mu", "k", "lr", "weight_decay", "dropout",
                     "hidden", "max_epochs", "patience", "detach_weights",
                     "dropout_second", "split", "rate", "repeat", "seed",
                     "jobs", "out", "data"},
                 "config");
  ExperimentConfig cfg;
  if (j.contains("model")) cfg.model = model_kind_from_string(j.at("model").get<std::string>());
  maybe(j, "p", cfg.p);
  maybe(j, "mu", cfg.mu);
  maybe(j, "k", cfg.k);
  maybe(j, "lr", cfg.lr);
  maybe(j, "weight_decay", cfg.weight_decay);
  maybe(j, "dropout", cfg.dropout);
  maybe(j, "hidden", cfg.hidden);
  maybe(j, "max_epochs", cfg.max_epochs);
  maybe(j, "patience", cfg.patience);
  maybe(j, "detach_weights", cfg.detach_weights);
  maybe(j, "dropout_second", cfg.dropout_second);
  if (j.contains("split"))
    cfg.split = split_scheme_from_string(j.at("split").get<std::string>());
  maybe(j, "rate", cfg.rate);
  maybe(j, "repeat", cfg.repeat);
  maybe(j, "seed", cfg.seed);
  maybe(j, "jobs", cfg.jobs);
  maybe(j, "out", cfg.out);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    reject_unknown(d, {"edges", "features", "labels", "csbm"}, "data");
    if (d.contains("csbm")) {
      if (d.contains("edges") || d.contains("features") || d.contains("labels"))
        throw ConfigError("data: csbm and file paths are mutually exclusive");
      const auto& c = d.at("csbm");
      reject_unknown(c, {"n", "f", "d", "epsilon", "phi", "seed"}, "data.csbm");
      cfg.data.use_csbm = true;
      maybe(c, "n", cfg.data.csbm_n);
      maybe(c, "f", cfg.data.csbm_f);
      maybe(c, "d", cfg.data.csbm_d);
      maybe(c, "epsilon", cfg.data.csbm_epsilon);
      maybe(c, "phi", cfg.data.csbm_phi);
      maybe(c, "seed", cfg.data.csbm_seed);
    } else {
      maybe(d, "edges", cfg.data.edges);
      maybe(d, "features", cfg.data.features);
      maybe(d, "labels", cfg.data.labels);
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = model_kind_name(cfg.model);
  j["p"] = cfg.p;
  j["mu"] = cfg.mu;
  j["k"] = cfg.k;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["dropout"] = cfg.dropout;
  j["hidden"] = cfg.hidden;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["detach_weights"] = cfg.detach_weights;
  j["dropout_second"] = cfg.dropout_second;
  j["split"] = split_scheme_name(cfg.split);
  j["rate"] = cfg.rate;
  j["repeat"] = cfg.repeat;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["out"] = cfg.out;
  nlohmann::ordered_json d;
  if (cfg.data.use_csbm) {
    nlohmann::ordered_json c;
    c["n"] = cfg.data.csbm_n;
    c["f"] = cfg.data.csbm_f;
    c["d"] = cfg.data.csbm_d;
    c["epsilon"] = cfg.data.csbm_epsilon;
    c["phi"] = cfg.data.csbm_phi;
    c["seed"] = cfg.data.csbm_seed;
    d["csbm"] = c;
  } else {
    d["edges"] = cfg.data.edges;
    d["features"] = cfg.data.features;
    d["labels"] = cfg.data.labels;
  }
  j["data"] = d;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j = config_to_json(cfg);
  j.erase("out");   // execution details, not part of the recipe
  j.erase("jobs");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

Dataset prepare_dataset(const ExperimentConfig& cfg) {
  if (cfg.data.use_csbm) {
    const CsbmParams params = csbm_params_from_phi(
        cfg.data.csbm_n, cfg.data.csbm_f, cfg.data.csbm_d,
        cfg.data.csbm_epsilon, cfg.data.csbm_phi, cfg.data.csbm_seed);
    return generate_csbm(params).dataset;
  }
  return load_dataset(cfg.data.edges, cfg.data.features, cfg.data.labels);
}

namespace {

RunResult run_single(const ExperimentConfig& cfg, ModelKind kind,
                     const Dataset& ds, std::size_t index,
                     const std::string& digest) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t run_seed = cfg.seed + index;

  const SplitMask split =
      make_split(ds.graph.num_nodes(), cfg.split, ds.labels, run_seed);

  const SparseGraph* graph = &ds.graph;
  SparseGraph perturbed;
  if (cfg.rate > 0.0) {
    perturbed = perturb_edges(ds.graph, cfg.rate, run_seed);
    graph = &perturbed;
  }

  const TrainConfig tc = cfg.train_config(run_seed);
  TrainOutcome outcome = train(*graph, ds.X, ds.labels, split, kind, tc);

  RunResult r;
  r.digest = digest;
  r.model = kind;
  r.seed = run_seed;
  r.metrics = std::move(outcome.metrics);
  r.homophily = homophily(*graph, ds.labels);

  if (kind == ModelKind::pgnn) {
    // shrinking monitor at the learned weights: propagate F0 = ReLU(X Th1)
    // and record the objective trace of the K steps
    Tape t;
    Var f0 = t.relu(t.matmul(t.leaf(ds.X), t.leaf(outcome.params.theta1)));
    const SmoothResult sm = run_smoother(*graph, t.value(f0), tc.plap);
    r.has_lp_trace = true;
    r.lp_first = sm.trace.front();
    r.lp_last = sm.trace.back();
  }

  const auto t1 = std::chrono::steady_clock::now();
  r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r;
}

}  // namespace

std::vector<RunResult> run_many(const ExperimentConfig& cfg, ModelKind kind,
                                const Dataset& ds) {
  cfg.validate();
  const std::string digest = config_digest(cfg);
  std::vector<RunResult> results(cfg.repeat);
  const std::size_t workers = std::min(cfg.jobs, cfg.repeat);

  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.repeat; ++i)
      results[i] = run_single(cfg, kind, ds, i, digest);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cfg.repeat) return;
        try {
          results[i] = run_single(cfg, kind, ds, i, digest);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

nlohmann::ordered_json run_result_json(const RunResult& r) {
  nlohmann::ordered_json j;
  j["digest"] = r.digest;
  j["model"] = model_kind_name(r.model);
  j["seed"] = r.seed;
  j["train_acc"] = r.metrics.train_acc;
  j["val_acc"] = r.metrics.val_acc;
  j["test_acc"] = r.metrics.test_acc;
  j["best_epoch"] = r.metrics.best_epoch;
  if (r.has_lp_trace) {
    j["lp_first"] = r.lp_first;
    j["lp_last"] = r.lp_last;
  } else {
    j["lp_first"] = nullptr;
    j["lp_last"] = nullptr;
  }
  j["homophily"] = r.homophily;
  return j;
}

void write_runs_jsonl(const std::string& path, const std::vector<RunResult>& runs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const RunResult& r : runs) out << run_result_json(r).dump() << '\n';
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  std::vector<SummaryRow> rows;
  for (ModelKind kind : {ModelKind::pgnn, ModelKind::mlp}) {
    std::vector<const RunResult*> group;
    for (const RunResult& r : runs)
      if (r.model == kind) group.push_back(&r);
    if (group.empty()) continue;

    auto stats = [&group](auto&& get) {
      double mean = 0.0;
      for (const RunResult* r : group) mean += get(*r);
      mean /= static_cast<double>(group.size());
      double var = 0.0;
      for (const RunResult* r : group) {
        const double d = get(*r) - mean;
        var += d * d;
      }
      const double sd = group.size() > 1
                            ? std::sqrt(var / static_cast<double>(group.size() - 1))
                            : 0.0;
      return std::pair<double, double>(mean, sd);
    };

    SummaryRow row;
    row.model = model_kind_name(kind);
    row.runs = group.size();
    std::tie(row.train_mean, row.train_std) =
        stats([](const RunResult& r) { return r.metrics.train_acc; });
    std::tie(row.val_mean, row.val_std) =
        stats([](const RunResult& r) { return r.metrics.val_acc; });
    std::tie(row.test_mean, row.test_std) =
        stats([](const RunResult& r) { return r.metrics.test_acc; });
    row.best_epoch_mean =
        stats([](const RunResult& r) {
          return static_cast<double>(r.metrics.best_epoch);
        }).first;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<RunResult>& runs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "model,runs,train_acc_mean,train_acc_std,val_acc_mean,val_acc_std,"
         "test_acc_mean,test_acc_std,best_epoch_mean\n";
  for (const SummaryRow& row : summarize(runs)) {
    out << row.model << ',' << row.runs << ',' << format_double(row.train_mean)
        << ',' << format_double(row.train_std) << ','
        << format_double(row.val_mean) << ',' << format_double(row.val_std)
        << ',' << format_double(row.test_mean) << ','
        << format_double(row.test_std) << ','
        << format_double(row.best_epoch_mean) << '\n';
  }
}

}  // namespace plgnn
