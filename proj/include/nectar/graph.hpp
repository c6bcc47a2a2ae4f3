#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nectar {

using NodeId = std::uint32_t;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable undirected simple graph in CSR form. Nodes are dense indices;
// the external labels seen in input files are kept in a bidirectional map.
// Every adjacency slot also carries the number of triangles through that
// edge, which the triangle-based objective and the feature extractor use.
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const { return labels_.size(); }
  std::size_t num_edges() const { return adjacency_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  // Triangle support of each edge in neighbors(v), aligned by position.
  std::span<const std::uint32_t> edge_support(NodeId v) const {
    return {support_.data() + offsets_[v], support_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(NodeId u, NodeId v) const;
  // Number of triangles through edge (u, v); 0 when the edge is absent.
  std::uint32_t support(NodeId u, NodeId v) const;

  // t(v, V): triangles incident to v.
  std::uint64_t triangles_at(NodeId v) const { return node_triangles_[v]; }
  // vt(v, V): neighbors of v that share at least one triangle with it.
  std::uint32_t triangle_partners(NodeId v) const { return node_partners_[v]; }

  const std::string& label(NodeId v) const { return labels_[v]; }
  std::optional<NodeId> find(std::string_view label) const;
  const std::vector<std::string>& labels() const { return labels_; }

  // Builds a graph over `labels` (index i gets labels[i]). Self-loops and
  // duplicate edges are dropped.
  static Graph from_edges(std::vector<std::string> labels,
                          std::vector<std::pair<NodeId, NodeId>> edges);

  // Builds a graph over nodes labelled "1".."n".
  static Graph from_edges(std::size_t n,
                          std::vector<std::pair<NodeId, NodeId>> edges);

 private:
  void count_triangles();

  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  std::vector<std::uint32_t> support_;
  std::vector<std::uint64_t> node_triangles_;
  std::vector<std::uint32_t> node_partners_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
};

// Incrementally assigns dense ids to external labels in order of first use.
class GraphBuilder {
 public:
  NodeId intern(std::string_view label);
  void add_edge(std::string_view a, std::string_view b);
  void add_node(std::string_view label) { intern(label); }
  Graph build() &&;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
};

// Reads a whitespace-separated edge list. Lines starting with '#' and
// blank lines are skipped; self-loops and repeated edges are dropped.
Graph load_edge_list(const std::filesystem::path& path);

// Writes "u v" lines (u < v by internal index) with external labels.
void write_edge_list(const std::filesystem::path& path, const Graph& g,
                     std::string_view header = {});

struct TriangleStats {
  std::vector<std::uint64_t> triangles_per_node;
  std::uint64_t total_triangles = 0;
  std::uint64_t triplet_count = 0;
  std::uint64_t nodes_in_triangles = 0;
};

TriangleStats triangle_stats(const Graph& g);

struct FeatureVector {
  static constexpr std::size_t kSize = 5;

  double gcc = 0.0;
  double acc = 0.0;
  double ratio_nodes_in_triangle = 0.0;
  double average_node_degree = 0.0;
  double average_triangles_rate = 0.0;

  std::array<double, kSize> as_array() const {
    return {gcc, acc, ratio_nodes_in_triangle, average_node_degree,
            average_triangles_rate};
  }
  static FeatureVector from_array(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::array<std::string_view, FeatureVector::kSize>
    kFeatureNames = {"gcc", "acc", "ratio_nodes_in_triangle", "avg_degree",
                     "avg_triangles_rate"};

FeatureVector extract_features(const Graph& g);

}  // namespace nectar
