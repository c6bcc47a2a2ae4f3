#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "nectar/classifier.hpp"
#include "nectar/dataset.hpp"
#include "nectar/graph.hpp"

namespace fixture {

// Builds a graph over nodes "1".."n" from 1-based edge pairs.
inline nectar::Graph graph(std::size_t n, std::initializer_list<std::pair<int, int>> edges) {
  std::vector<std::pair<nectar::NodeId, nectar::NodeId>> e;
  for (auto [u, v] : edges) e.emplace_back(u - 1, v - 1);
  return nectar::Graph::from_edges(n, std::move(e));
}

inline nectar::Graph clique(std::size_t n) {
  std::vector<std::pair<nectar::NodeId, nectar::NodeId>> e;
  for (nectar::NodeId u = 0; u < n; ++u)
    for (nectar::NodeId v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return nectar::Graph::from_edges(n, std::move(e));
}

// Two K4s on 1-4 and 5-8 joined by edge 4-5.
inline nectar::Graph two_k4() {
  return graph(8, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4},
                   {5, 6}, {5, 7}, {5, 8}, {6, 7}, {6, 8}, {7, 8}, {4, 5}});
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("nectar-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One tree: gcc <= 0.5 goes to a pure QE leaf, otherwise a pure WOCC leaf.
inline nectar::ModelEnsemble gcc_stump(nectar::MetricKind metric) {
  nectar::ModelEnsemble m;
  m.metric = metric;
  m.params.n_estimators = 1;
  nectar::DecisionTree t;
  t.nodes = {{0, 0.5, 1, 2, 0.0, 0.0}, {-1, 0.0, -1, -1, 1.0, 0.0}, {-1, 0.0, -1, -1, 0.0, 1.0}};
  m.trees.push_back(t);
  return m;
}

inline nectar::DatasetRow compare_row(std::string id, double gcc, double triangle_rate,
                                      nectar::ObjectiveKind label, double weight) {
  nectar::DatasetRow r;
  r.id = std::move(id);
  r.metric = nectar::MetricKind::kAverage;
  r.features.gcc = gcc;
  r.features.average_triangles_rate = triangle_rate;
  r.result.label = label;
  r.result.weight = weight;
  r.split = "train";
  r.num_nodes = 1000;
  r.tags = nectar::LfrTags{1000, 20, 100, 0.25, 3, 0.2, false};
  return r;
}

// Three networks in one cell: only the model is right on the first
// (+0.3), only the threshold rule on the second (-0.1), both on the third.
inline std::vector<nectar::DatasetRow> compare_fixture() {
  using nectar::ObjectiveKind;
  return {compare_row("a", 0.9, 1.0, ObjectiveKind::kWOCC, 0.3),
          compare_row("b", 0.1, 7.0, ObjectiveKind::kWOCC, 0.1),
          compare_row("c", 0.1, 1.0, ObjectiveKind::kQE, 0.4)};
}

}  // namespace fixture
