#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plgnn/graph.hpp"
#include "plgnn/matrix.hpp"
#include "plgnn/model.hpp"

namespace plgnn {

struct Dataset {
  SparseGraph graph;
  NodeSignal X;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> names;  // optional node ids

  std::size_t num_classes() const;
};

enum class SplitScheme { sparse, dense };

SplitScheme split_scheme_from_string(const std::string& s);
const char* split_scheme_name(SplitScheme s);

// seeded uniform permutation sliced at 2.5/2.5/95 or 60/20/20 percent
// (floor for train and val, remainder to test)
SplitMask make_split(std::size_t n, SplitScheme scheme,
                     const std::vector<std::uint32_t>& labels,
                     std::uint64_t seed);

// adds ceil(r |E|) fresh undirected unit edges and removes the same number
// of original ones, resampling removals that would isolate a node
SparseGraph perturb_edges(const SparseGraph& g, double r, std::uint64_t seed);

struct CsbmParams {
  std::size_t n = 0;
  std::size_t f = 0;
  double d = 0.0;        // mean degree
  double epsilon = 0.0;
  double phi = 0.0;      // in [-1, 1]
  double lambda = 0.0;   // graph signal strength (sign = sign of phi)
  double mu_feat = 0.0;  // feature signal strength
  std::uint64_t seed = 1;
};

// lambda = sqrt(1+eps) sin(phi pi/2), mu = sqrt((1+eps) n/f) cos(phi pi/2);
// keeps the SNR budget lambda^2 + mu^2 f/n = 1 + eps
CsbmParams csbm_params_from_phi(std::size_t n, std::size_t f, double d,
                                double epsilon, double phi,
                                std::uint64_t seed = 1);

struct CsbmResult {
  Dataset dataset;
  std::size_t repaired_nodes = 0;  // isolated nodes patched with one edge
};

CsbmResult generate_csbm(const CsbmParams& params);

// ---- file formats ----
// edges:    src<TAB>dst[<TAB>weight], 0-based, one undirected pair per line,
//           '#' comments ignored
// features: headerless CSV, row i = node i
// labels:   one integer per line
// split:    JSON {"train": [...], "val": [...], "test": [...]}, sorted

std::vector<Edge> read_edge_list(const std::string& path, std::size_t& max_node);
SparseGraph load_graph(const std::string& path);
Dataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                     const std::string& label_path);
void save_dataset(const Dataset& ds, const std::string& edge_path,
                  const std::string& feature_path, const std::string& label_path);

Matrix read_features_csv(const std::string& path);
void write_features_csv(const Matrix& x, const std::string& path);
std::vector<std::uint32_t> read_labels(const std::string& path);

SplitMask load_split(const std::string& path);
void save_split(const SplitMask& split, const std::string& path);
void save_edge_list(const SparseGraph& g, const std::string& path);

}  // namespace plgnn
