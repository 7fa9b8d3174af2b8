#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "plgnn/errors.hpp"
#include "plgnn/experiment.hpp"

using namespace plgnn;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("plgnn_exp_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

ExperimentConfig small_csbm_config() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::pgnn;
  cfg.p = 2.0;
  cfg.mu = 0.1;
  cfg.k = 4;
  cfg.lr = 0.05;
  cfg.dropout = 0.0;
  cfg.hidden = 8;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.split = SplitScheme::dense;
  cfg.repeat = 2;
  cfg.seed = 5;
  cfg.data.use_csbm = true;
  cfg.data.csbm_n = 120;
  cfg.data.csbm_f = 24;
  cfg.data.csbm_d = 8.0;
  cfg.data.csbm_epsilon = 3.25;
  cfg.data.csbm_phi = 0.75;
  cfg.data.csbm_seed = 9;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config round-trips through JSON") {
  const ExperimentConfig cfg = small_csbm_config();
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(back == cfg);

  ExperimentConfig files = cfg;
  files.data = DataSource{};
  files.data.edges = "a.tsv";
  files.data.features = "b.csv";
  files.data.labels = "c.txt";
  CHECK(config_from_json(config_to_json(files)) == files);
}

TEST_CASE("unknown config keys are rejected") {
  nlohmann::ordered_json j = config_to_json(small_csbm_config());
  j["mystery"] = 1;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("mystery"),
                       ConfigError);

  nlohmann::ordered_json j2 = config_to_json(small_csbm_config());
  j2["data"]["csbm"]["oops"] = 2;
  CHECK_THROWS_AS(config_from_json(j2), ConfigError);
}

TEST_CASE("invalid hyperparameters are rejected before any run") {
  nlohmann::ordered_json j = config_to_json(small_csbm_config());
  j["p"] = 0.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j["p"] = 2.0;
  j["rate"] = 1.5;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("digest is stable and config-sensitive") {
  const ExperimentConfig cfg = small_csbm_config();
  CHECK(config_digest(cfg) == config_digest(cfg));
  ExperimentConfig other = cfg;
  other.mu = 0.2;
  CHECK(config_digest(cfg) != config_digest(other));
  CHECK(config_digest(cfg).size() == 16);

  // execution details do not change the recipe identity
  ExperimentConfig moved = cfg;
  moved.out = "elsewhere";
  moved.jobs = 4;
  CHECK(config_digest(moved) == config_digest(cfg));
}

TEST_CASE("train protocol on a file-backed toy reaches full accuracy") {
  TempDir dir;
  // two 5-cliques joined by one edge, indicator features
  std::vector<Edge> edges;
  for (std::uint32_t a = 0; a < 5; ++a)
    for (std::uint32_t b = a + 1; b < 5; ++b) {
      edges.push_back({a, b, 1.0});
      edges.push_back({a + 5, b + 5, 1.0});
    }
  edges.push_back({4, 5, 1.0});
  Dataset toy{SparseGraph::from_edges(10, edges), Matrix(10, 2), {}, {}};
  for (std::uint32_t i = 0; i < 10; ++i) {
    toy.X(i, i < 5 ? 0 : 1) = 1.0;
    toy.labels.push_back(i < 5 ? 0 : 1);
  }
  save_dataset(toy, dir.file("e.tsv"), dir.file("x.csv"), dir.file("y.txt"));

  ExperimentConfig cfg;
  cfg.model = ModelKind::pgnn;
  cfg.p = 2.0;
  cfg.mu = 1.0;
  cfg.k = 4;
  cfg.lr = 0.05;
  cfg.dropout = 0.0;
  cfg.hidden = 8;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  cfg.split = SplitScheme::dense;
  cfg.repeat = 2;
  cfg.seed = 3;
  cfg.data.edges = dir.file("e.tsv");
  cfg.data.features = dir.file("x.csv");
  cfg.data.labels = dir.file("y.txt");

  const Dataset ds = prepare_dataset(cfg);
  const auto runs = run_many(cfg, cfg.model, ds);
  REQUIRE(runs.size() == 2);
  write_runs_jsonl(dir.file("runs.jsonl"), runs);
  std::ifstream in(dir.file("runs.jsonl"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
  const auto rows = summarize(runs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].test_mean == 1.0);
}

TEST_CASE("run_many is deterministic and jobs-invariant") {
  const ExperimentConfig cfg = small_csbm_config();
  const Dataset ds = prepare_dataset(cfg);

  const auto a = run_many(cfg, ModelKind::pgnn, ds);
  const auto b = run_many(cfg, ModelKind::pgnn, ds);
  ExperimentConfig par = cfg;
  par.jobs = 2;
  const auto c = run_many(par, ModelKind::pgnn, ds);

  REQUIRE(a.size() == cfg.repeat);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == cfg.seed + i);
    CHECK(a[i].metrics.test_acc == b[i].metrics.test_acc);
    CHECK(a[i].metrics.test_acc == c[i].metrics.test_acc);
    CHECK(a[i].metrics.best_epoch == c[i].metrics.best_epoch);
    CHECK(a[i].homophily == c[i].homophily);
    CHECK(a[i].has_lp_trace);
  }
}

TEST_CASE("jsonl lines are identical across invocations") {
  TempDir dir;
  const ExperimentConfig cfg = small_csbm_config();
  const Dataset ds = prepare_dataset(cfg);
  const auto runs1 = run_many(cfg, ModelKind::pgnn, ds);
  const auto runs2 = run_many(cfg, ModelKind::pgnn, ds);
  write_runs_jsonl(dir.file("a.jsonl"), runs1);
  write_runs_jsonl(dir.file("b.jsonl"), runs2);
  CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));
  CHECK(!slurp(dir.file("a.jsonl")).empty());
}

TEST_CASE("summary agrees with an independent recomputation from the jsonl") {
  TempDir dir;
  ExperimentConfig cfg = small_csbm_config();
  cfg.repeat = 3;
  const Dataset ds = prepare_dataset(cfg);
  auto runs = run_many(cfg, ModelKind::pgnn, ds);
  const auto mlp_runs = run_many(cfg, ModelKind::mlp, ds);
  runs.insert(runs.end(), mlp_runs.begin(), mlp_runs.end());
  write_runs_jsonl(dir.file("runs.jsonl"), runs);
  write_summary_csv(dir.file("summary.csv"), runs);

  // recompute from the serialized lines
  std::ifstream in(dir.file("runs.jsonl"));
  std::string line;
  std::map<std::string, std::vector<double>> test_accs;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    test_accs[j["model"]].push_back(j["test_acc"].get<double>());
    CHECK(j.contains("digest"));
    CHECK(j.contains("homophily"));
    if (j["model"] == "mlp") CHECK(j["lp_first"].is_null());
  }
  REQUIRE(test_accs["pgnn"].size() == 3);
  REQUIRE(test_accs["mlp"].size() == 3);

  std::ifstream csv(dir.file("summary.csv"));
  std::string header, row;
  std::getline(csv, header);
  CHECK(header ==
        "model,runs,train_acc_mean,train_acc_std,val_acc_mean,val_acc_std,"
        "test_acc_mean,test_acc_std,best_epoch_mean");
  while (std::getline(csv, row)) {
    std::stringstream ss(row);
    std::string model, cell;
    std::getline(ss, model, ',');
    std::getline(ss, cell, ',');  // runs
    CHECK(cell == "3");
    for (int skip = 0; skip < 4; ++skip) std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');  // test_acc_mean
    const double mean_csv = std::stod(cell);
    double mean = 0.0;
    for (double v : test_accs[model]) mean += v;
    mean /= static_cast<double>(test_accs[model].size());
    CHECK(mean_csv == doctest::Approx(mean).epsilon(1e-12));
    std::getline(ss, cell, ',');  // test_acc_std
    const double std_csv = std::stod(cell);
    double var = 0.0;
    for (double v : test_accs[model]) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(test_accs[model].size() - 1));
    CHECK(std_csv == doctest::Approx(sd).epsilon(1e-12));
  }
}

TEST_CASE("perturbation rate flows through the runs") {
  ExperimentConfig cfg = small_csbm_config();
  cfg.repeat = 1;
  cfg.rate = 1.0;
  const Dataset ds = prepare_dataset(cfg);
  const auto noisy = run_many(cfg, ModelKind::pgnn, ds);
  cfg.rate = 0.0;
  const auto clean = run_many(cfg, ModelKind::pgnn, ds);
  // destroying the informative topology moves homophily toward 1/2
  CHECK(clean[0].homophily > noisy[0].homophily);
}
