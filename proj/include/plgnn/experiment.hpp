#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plgnn/data.hpp"
#include "plgnn/model.hpp"

namespace plgnn {

struct DataSource {
  // either the three file paths or cSBM parameters
  std::string edges;
  std::string features;
  std::string labels;
  bool use_csbm = false;
  std::size_t csbm_n = 800;
  std::size_t csbm_f = 200;
  double csbm_d = 10.0;
  double csbm_epsilon = 3.25;
  double csbm_phi = 0.0;
  std::uint64_t csbm_seed = 1;

  bool operator==(const DataSource&) const = default;
};

// one experiment recipe; serializes to a strict JSON schema (unknown keys
// rejected) and round-trips exactly
struct ExperimentConfig {
  ModelKind model = ModelKind::pgnn;
  double p = 2.0;
  double mu = 0.1;
  std::size_t k = 6;
  double lr = 0.01;
  double weight_decay = 0.0005;
  double dropout = 0.5;
  std::size_t hidden = 16;
  std::size_t max_epochs = 1000;
  std::size_t patience = 200;
  bool detach_weights = false;
  bool dropout_second = true;
  SplitScheme split = SplitScheme::sparse;
  double rate = 0.0;  // noisy-edge rate r
  std::size_t repeat = 20;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out = "out";
  DataSource data;

  bool operator==(const ExperimentConfig&) const = default;

  TrainConfig train_config(std::uint64_t run_seed) const;
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical serialization
std::string config_digest(const ExperimentConfig& cfg);

struct RunResult {
  std::string digest;
  ModelKind model = ModelKind::pgnn;
  std::uint64_t seed = 0;
  Metrics metrics;
  double homophily = 0.0;          // of the (possibly perturbed) graph
  bool has_lp_trace = false;       // pgnn only
  double lp_first = 0.0;
  double lp_last = 0.0;
  double wall_ms = 0.0;            // reported on stderr, never serialized
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

Dataset prepare_dataset(const ExperimentConfig& cfg);

// `repeat` runs seeded base..base+repeat-1: split -> optional perturb ->
// train -> evaluate; executes on cfg.jobs workers, results ordered by seed
std::vector<RunResult> run_many(const ExperimentConfig& cfg, ModelKind kind,
                                const Dataset& ds);

nlohmann::ordered_json run_result_json(const RunResult& r);
void write_runs_jsonl(const std::string& path, const std::vector<RunResult>& runs);
void write_summary_csv(const std::string& path, const std::vector<RunResult>& runs);

struct SummaryRow {
  std::string model;
  std::size_t runs = 0;
  double train_mean = 0.0, train_std = 0.0;
  double val_mean = 0.0, val_std = 0.0;
  double test_mean = 0.0, test_std = 0.0;
  double best_epoch_mean = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);

}  // namespace plgnn
