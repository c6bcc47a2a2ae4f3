#include "nectar/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nectar {

namespace {

std::size_t slot_of(const std::vector<std::size_t>& offsets,
                    const std::vector<NodeId>& adjacency, NodeId u, NodeId v) {
  const auto first = adjacency.begin() + static_cast<std::ptrdiff_t>(offsets[u]);
  const auto last = adjacency.begin() + static_cast<std::ptrdiff_t>(offsets[u + 1]);
  const auto it = std::lower_bound(first, last, v);
  if (it == last || *it != v) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - adjacency.begin());
}

}  // namespace

Graph Graph::from_edges(std::vector<std::string> labels,
                        std::vector<std::pair<NodeId, NodeId>> edges) {
  Graph g;
  const std::size_t n = labels.size();
  g.labels_ = std::move(labels);
  g.index_.reserve(n);
  for (NodeId v = 0; v < n; ++v) g.index_.emplace(g.labels_[v], v);

  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw std::out_of_range("edge endpoint out of range");
    if (a == b) continue;
    directed.emplace_back(a, b);
    directed.emplace_back(b, a);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  g.offsets_.assign(n + 1, 0);
  for (auto [a, b] : directed) ++g.offsets_[a + 1];
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.adjacency_.reserve(directed.size());
  for (auto [a, b] : directed) g.adjacency_.push_back(b);

  g.count_triangles();
  return g;
}

Graph Graph::from_edges(std::size_t n,
                        std::vector<std::pair<NodeId, NodeId>> edges) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i + 1);
  return from_edges(std::move(labels), std::move(edges));
}

// Orients each edge from lower to higher (degree, id) rank and intersects
// forward lists, so every triangle is found exactly once.
void Graph::count_triangles() {
  const std::size_t n = num_nodes();
  support_.assign(adjacency_.size(), 0);
  node_triangles_.assign(n, 0);
  node_partners_.assign(n, 0);

  auto before = [this](NodeId a, NodeId b) {
    const auto da = degree(a), db = degree(b);
    return da < db || (da == db && a < b);
  };

  std::vector<std::vector<NodeId>> forward(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : neighbors(u)) {
      if (before(u, v)) forward[u].push_back(v);
    }
  }

  auto bump = [this](NodeId a, NodeId b) {
    ++support_[slot_of(offsets_, adjacency_, a, b)];
    ++support_[slot_of(offsets_, adjacency_, b, a)];
  };

  std::vector<NodeId> common;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : forward[u]) {
      common.clear();
      std::set_intersection(forward[u].begin(), forward[u].end(),
                            forward[v].begin(), forward[v].end(),
                            std::back_inserter(common));
      for (NodeId w : common) {
        bump(u, v);
        bump(u, w);
        bump(v, w);
        ++node_triangles_[u];
        ++node_triangles_[v];
        ++node_triangles_[w];
      }
    }
  }

  for (NodeId v = 0; v < n; ++v) {
    for (std::uint32_t s : edge_support(v)) {
      if (s > 0) ++node_partners_[v];
    }
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  return slot_of(offsets_, adjacency_, u, v) != static_cast<std::size_t>(-1);
}

std::uint32_t Graph::support(NodeId u, NodeId v) const {
  const std::size_t s = slot_of(offsets_, adjacency_, u, v);
  return s == static_cast<std::size_t>(-1) ? 0 : support_[s];
}

std::optional<NodeId> Graph::find(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId GraphBuilder::intern(std::string_view label) {
  const auto [it, inserted] =
      index_.try_emplace(std::string(label), static_cast<NodeId>(labels_.size()));
  if (inserted) labels_.emplace_back(label);
  return it->second;
}

void GraphBuilder::add_edge(std::string_view a, std::string_view b) {
  const NodeId u = intern(a);
  const NodeId v = intern(b);
  edges_.emplace_back(u, v);
}

Graph GraphBuilder::build() && {
  return Graph::from_edges(std::move(labels_), std::move(edges_));
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path.string());

  GraphBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '%') {
      continue;
    }
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a >> b)) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected two node tokens");
    }
    // A third column (e.g. a weight or timestamp) is tolerated and ignored.
    builder.add_edge(a, b);
  }
  if (in.bad()) throw IoError("read failure: " + path.string());
  return std::move(builder).build();
}

void write_edge_list(const std::filesystem::path& path, const Graph& g,
                     std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list: " + path.string());
  out << header;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) out << g.label(u) << ' ' << g.label(v) << '\n';
    }
  }
  if (!out) throw IoError("write failure: " + path.string());
}

TriangleStats triangle_stats(const Graph& g) {
  TriangleStats stats;
  const std::size_t n = g.num_nodes();
  stats.triangles_per_node.resize(n);
  std::uint64_t sum = 0;
  for (NodeId v = 0; v < n; ++v) {
    const std::uint64_t t = g.triangles_at(v);
    stats.triangles_per_node[v] = t;
    sum += t;
    if (t > 0) ++stats.nodes_in_triangles;
    const std::uint64_t d = g.degree(v);
    stats.triplet_count += d * (d - (d > 0 ? 1 : 0)) / 2;
  }
  stats.total_triangles = sum / 3;
  return stats;
}

FeatureVector extract_features(const Graph& g) {
  FeatureVector f;
  const std::size_t n = g.num_nodes();
  if (n == 0) return f;
  const TriangleStats stats = triangle_stats(g);
  const double nodes = static_cast<double>(n);

  if (stats.triplet_count > 0) {
    f.gcc = 3.0 * static_cast<double>(stats.total_triangles) /
            static_cast<double>(stats.triplet_count);
  }

  // Local coefficients are summed in sorted order so the mean does not
  // depend on node numbering.
  std::vector<double> local(n, 0.0);
  for (NodeId v = 0; v < n; ++v) {
    const double k = static_cast<double>(g.degree(v));
    if (g.degree(v) > 1) {
      local[v] = 2.0 * static_cast<double>(stats.triangles_per_node[v]) / (k * (k - 1.0));
    }
  }
  std::sort(local.begin(), local.end());
  double acc = 0.0;
  for (double c : local) acc += c;
  f.acc = acc / nodes;

  f.ratio_nodes_in_triangle = static_cast<double>(stats.nodes_in_triangles) / nodes;
  f.average_node_degree = 2.0 * static_cast<double>(g.num_edges()) / nodes;
  f.average_triangles_rate = static_cast<double>(stats.total_triangles) / nodes;
  return f;
}

}  // namespace nectar
