#include "nectar/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nectar/parallel.hpp"
#include "nectar/rng.hpp"

namespace nectar {

namespace {

constexpr int kGridK[] = {10, 20, 40, 60, 80};
constexpr int kGridMaxK[] = {50, 100, 120};
constexpr double kGridOn[] = {0.1, 0.25, 0.5, 0.75};
constexpr double kGridMut[] = {0.1, 0.2, 0.3, 0.4, 0.5};

constexpr std::string_view kDatasetColumns[] = {
    "id",    "gcc",    "acc",   "ratio_nodes_in_triangle", "avg_degree",
    "avg_triangles_rate", "metric", "label", "weight", "split",
    "n",     "k",      "maxK",  "On",  "Om",  "mut", "best_wocc", "best_qe", "status"};

template <class T, std::size_t N>
bool in_set(const T (&set)[N], T value) {
  for (T x : set) {
    if (std::fabs(static_cast<double>(x) - static_cast<double>(value)) < 1e-9) return true;
  }
  return false;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  return out;
}

bool is_data_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first != std::string::npos && line[first] != '#';
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
  T x{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument(where + ": malformed number '" + s + "'");
  }
  return x;
}

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Scores of one engine run, per metric.
std::array<double, 4> run_scores(const Graph& g, const Cover& truth, double beta,
                                 ObjectiveKind kind, const LabelOptions& options) {
  EngineConfig config = options.engine;
  config.beta = beta;
  config.mode = kind == ObjectiveKind::kQE ? ObjectiveMode::kForceQE
                                           : ObjectiveMode::kForceWOCC;
  const RunResult result = run_with_objective(g, config, kind);
  const ScoreReport s = score(result.cover, truth, options.use_best_match);
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < kAllMetrics.size(); ++i) out[i] = s.get(kAllMetrics[i]);
  return out;
}

// runs[2 * b] is the Q_E run at betas[b], runs[2 * b + 1] the WOCC run.
LabeledNetwork aggregate(const NetworkRecord& record, const Graph& g,
                         std::span<const std::array<double, 4>> runs) {
  LabeledNetwork out;
  out.record = record;
  out.features = extract_features(g);
  out.num_nodes = g.num_nodes();
  for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
    double best_qe = -INFINITY, best_wocc = -INFINITY;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      double& best = r % 2 == 0 ? best_qe : best_wocc;
      best = std::max(best, runs[r][m]);
    }
    out.per_metric[m] = make_label(best_wocc, best_qe);
  }
  return out;
}

struct LoadedRecord {
  Graph graph;
  Cover truth;
};

LoadedRecord load_record(const NetworkRecord& record) {
  if (record.tags) validate_tags(*record.tags);
  LoadedRecord out;
  out.graph = load_edge_list(record.graph_path);
  out.truth = read_cover(record.truth_path, out.graph);
  return out;
}

}  // namespace

void validate_tags(const LfrTags& t) {
  if (t.n <= 0) throw std::invalid_argument("LFR tag n must be positive");
  if (t.custom) return;
  if (!in_set(kGridK, t.k)) throw std::invalid_argument("LFR tag k outside the grid");
  if (!in_set(kGridMaxK, t.max_k)) {
    throw std::invalid_argument("LFR tag maxK outside the grid");
  }
  if (!in_set(kGridOn, t.on)) throw std::invalid_argument("LFR tag On outside the grid");
  if (t.om < 2 || t.om > 10) throw std::invalid_argument("LFR tag Om outside the grid");
  if (!in_set(kGridMut, t.mut)) throw std::invalid_argument("LFR tag mut outside the grid");
}

std::vector<NetworkRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<NetworkRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_data_line(line)) continue;
    if (header) {
      header = false;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto f = split_tabs(line);
    if (f.size() != 3 && f.size() != 9 && f.size() != 10) {
      throw std::invalid_argument(where + ": expected 3, 9 or 10 tab-separated fields");
    }
    NetworkRecord r;
    r.id = f[0];
    r.graph_path = f[1];
    r.truth_path = f[2];
    if (r.graph_path.is_relative()) r.graph_path = base / r.graph_path;
    if (r.truth_path.is_relative()) r.truth_path = base / r.truth_path;
    if (f.size() >= 9) {
      LfrTags t;
      t.n = parse_number<int>(f[3], where);
      t.k = parse_number<int>(f[4], where);
      t.max_k = parse_number<int>(f[5], where);
      t.on = parse_number<double>(f[6], where);
      t.om = parse_number<int>(f[7], where);
      t.mut = parse_number<double>(f[8], where);
      t.custom = f.size() == 10 && f[9] == "1";
      try {
        validate_tags(t);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(where + ": " + e.what());
      }
      r.tags = t;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const NetworkRecord> records, std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();
  out << header << "id\tgraph_path\ttruth_path\tn\tk\tmaxK\tOn\tOm\tmut\tcustom\n";
  auto rel = [&](const std::filesystem::path& p) {
    return p.parent_path() == base ? p.filename().string() : p.string();
  };
  for (const auto& r : records) {
    out << r.id << '\t' << rel(r.graph_path) << '\t' << rel(r.truth_path);
    if (r.tags) {
      const LfrTags& t = *r.tags;
      out << '\t' << t.n << '\t' << t.k << '\t' << t.max_k << '\t' << t.on << '\t' << t.om
          << '\t' << t.mut << '\t' << (t.custom ? 1 : 0);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure: " + path.string());
}

void validate_betas(std::span<const double> betas) {
  if (betas.empty()) throw std::invalid_argument("beta grid is empty");
  for (double b : betas) {
    if (!(b >= 1.0)) throw std::invalid_argument("beta values must be >= 1");
  }
}

MetricLabel make_label(double best_wocc, double best_qe) {
  MetricLabel out;
  out.best_wocc = best_wocc;
  out.best_qe = best_qe;
  out.label = best_wocc > best_qe ? ObjectiveKind::kWOCC : ObjectiveKind::kQE;
  const double w = std::max(best_wocc, 0.0);
  const double q = std::max(best_qe, 0.0);
  const double denom = std::max(w, q);
  out.weight = denom > 0.0 ? std::fabs(w - q) / denom : 0.0;
  return out;
}

LabeledNetwork label_network(const NetworkRecord& record, std::span<const double> betas,
                             const LabelOptions& options) {
  const LoadedRecord loaded = load_record(record);
  return label_network(record, loaded.graph, loaded.truth, betas, options);
}

LabeledNetwork label_network(const NetworkRecord& record, const Graph& g,
                             const Cover& truth, std::span<const double> betas,
                             const LabelOptions& options) {
  validate_betas(betas);
  std::vector<std::array<double, 4>> runs;
  for (double beta : betas) {
    runs.push_back(run_scores(g, truth, beta, ObjectiveKind::kQE, options));
    runs.push_back(run_scores(g, truth, beta, ObjectiveKind::kWOCC, options));
  }
  return aggregate(record, g, runs);
}

PlantedNetwork generate_test_network(std::size_t n, std::size_t communities,
                                     double overlap_fraction, double p_in, double p_out,
                                     std::uint64_t seed) {
  if (!(p_out >= 0.0 && p_out < p_in && p_in <= 1.0)) {
    throw std::invalid_argument("need 0 <= p_out < p_in <= 1");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw std::invalid_argument("overlap fraction must lie in [0, 1)");
  }
  if (communities == 0 || n < 3 * communities) {
    throw std::invalid_argument("need at least 3 nodes per community");
  }
  const auto overlapping = static_cast<std::size_t>(
      std::llround(overlap_fraction * static_cast<double>(n)));
  if (overlapping > 0 && communities < 2) {
    throw std::invalid_argument("overlap needs at least 2 communities");
  }

  Rng rng(seed);
  std::vector<std::vector<NodeId>> blocks(communities);
  std::vector<std::vector<std::uint32_t>> member_of(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t b = v * communities / n;
    blocks[b].push_back(static_cast<NodeId>(v));
    member_of[v].push_back(static_cast<std::uint32_t>(b));
  }
  std::vector<NodeId> order(n);
  for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<NodeId>(v);
  rng.shuffle(order);
  for (std::size_t i = 0; i < overlapping; ++i) {
    const NodeId v = order[i];
    auto extra = static_cast<std::uint32_t>(rng.uniform(communities - 1));
    if (extra >= member_of[v][0]) ++extra;
    member_of[v].push_back(extra);
    blocks[extra].push_back(v);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      bool shared = false;
      for (auto a : member_of[u]) {
        for (auto b : member_of[v]) shared = shared || a == b;
      }
      if (rng.uniform_real() < (shared ? p_in : p_out)) {
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
      }
    }
  }
  // Isolated nodes would vanish from an edge-list file; tie each to a
  // random member of its first block.
  std::vector<bool> touched(n, false);
  for (const auto& [u, v] : edges) touched[u] = touched[v] = true;
  for (std::size_t v = 0; v < n; ++v) {
    if (touched[v]) continue;
    const auto& block = blocks[member_of[v][0]];
    NodeId u = block[rng.uniform(block.size() - 1)];
    if (u == v) u = block.back();
    edges.emplace_back(std::min<NodeId>(u, v), std::max<NodeId>(u, v));
    touched[u] = touched[v] = true;
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  PlantedNetwork out;
  out.graph = Graph::from_edges(n, std::move(edges));
  out.truth = Cover(n, std::move(blocks));
  return out;
}

std::vector<DatasetRow> build_rows(std::span<const NetworkRecord> records,
                                   std::span<const double> betas,
                                   const BuildOptions& options) {
  validate_betas(betas);
  const std::size_t n_records = records.size();
  std::vector<std::optional<LoadedRecord>> loaded(n_records);
  std::vector<std::string> errors(n_records);
  parallel_for(n_records, options.workers, [&](std::size_t i) {
    try {
      loaded[i] = load_record(records[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  // Every (record, beta, objective) run is an independent job.
  const std::size_t per_record = 2 * betas.size();
  std::vector<std::array<double, 4>> runs(n_records * per_record);
  std::vector<std::string> run_errors(runs.size());
  parallel_for(runs.size(), options.workers, [&](std::size_t job) {
    const std::size_t i = job / per_record;
    if (!loaded[i]) return;
    const std::size_t r = job % per_record;
    const ObjectiveKind kind = r % 2 == 0 ? ObjectiveKind::kQE : ObjectiveKind::kWOCC;
    try {
      runs[job] = run_scores(loaded[i]->graph, loaded[i]->truth, betas[r / 2], kind,
                             options.label);
    } catch (const std::exception& e) {
      run_errors[job] = e.what();
    }
  });

  std::vector<DatasetRow> rows;
  for (std::size_t i = 0; i < n_records; ++i) {
    for (std::size_t r = 0; r < per_record && errors[i].empty(); ++r) {
      if (!run_errors[i * per_record + r].empty()) {
        errors[i] = "run beta=" + fixed6(betas[r / 2]) + ": " + run_errors[i * per_record + r];
      }
    }
    std::optional<LabeledNetwork> labeled;
    if (errors[i].empty()) {
      labeled = aggregate(records[i], loaded[i]->graph,
                          std::span(runs).subspan(i * per_record, per_record));
    }
    for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
      DatasetRow row;
      row.id = records[i].id;
      row.metric = kAllMetrics[m];
      row.tags = records[i].tags;
      if (labeled) {
        row.features = labeled->features;
        row.result = labeled->per_metric[m];
        row.num_nodes = labeled->num_nodes;
      } else {
        row.status = "failed: " + sanitize(errors[i]);
      }
      row.split = row.num_nodes <= options.split_threshold ? "train" : "test";
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_dataset(std::ostream& out, std::span<const DatasetRow> rows) {
  for (std::size_t c = 0; c < std::size(kDatasetColumns); ++c) {
    out << (c ? "\t" : "") << kDatasetColumns[c];
  }
  out << '\n';
  for (const auto& r : rows) {
    out << r.id;
    for (double x : r.features.as_array()) out << '\t' << fixed6(x);
    out << '\t' << to_string(r.metric) << '\t' << to_string(r.result.label) << '\t'
        << fixed6(r.result.weight) << '\t' << r.split << '\t' << r.num_nodes;
    if (r.tags) {
      out << '\t' << r.tags->k << '\t' << r.tags->max_k << '\t' << fixed6(r.tags->on)
          << '\t' << r.tags->om << '\t' << fixed6(r.tags->mut);
    } else {
      out << "\t-\t-\t-\t-\t-";
    }
    out << '\t' << fixed6(r.result.best_wocc) << '\t' << fixed6(r.result.best_qe) << '\t'
        << r.status << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, std::span<const DatasetRow> rows,
                   std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path.string());
  out << header;
  write_dataset(out, rows);
  if (!out) throw IoError("write failure: " + path.string());
}

std::vector<DatasetRow> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path.string());
  std::vector<DatasetRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_data_line(line)) continue;
    const auto f = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != std::size(kDatasetColumns)) {
      throw std::invalid_argument(where + ": expected " +
                                  std::to_string(std::size(kDatasetColumns)) + " fields");
    }
    if (header) {
      header = false;
      if (f[0] != "id") throw std::invalid_argument(where + ": missing header row");
      continue;
    }
    DatasetRow r;
    r.id = f[0];
    std::array<double, FeatureVector::kSize> x{};
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = parse_number<double>(f[1 + k], where);
    r.features = FeatureVector::from_array(x);
    const auto metric = parse_metric_kind(f[6]);
    const auto label = parse_objective_kind(f[7]);
    if (!metric || !label) throw std::invalid_argument(where + ": bad metric or label");
    r.metric = *metric;
    r.result.label = *label;
    r.result.weight = parse_number<double>(f[8], where);
    r.split = f[9];
    r.num_nodes = parse_number<std::size_t>(f[10], where);
    if (f[11] != "-") {
      LfrTags t;
      t.n = static_cast<int>(r.num_nodes);
      t.k = parse_number<int>(f[11], where);
      t.max_k = parse_number<int>(f[12], where);
      t.on = parse_number<double>(f[13], where);
      t.om = parse_number<int>(f[14], where);
      t.mut = parse_number<double>(f[15], where);
      t.custom = true;
      r.tags = t;
    }
    r.result.best_wocc = parse_number<double>(f[16], where);
    r.result.best_qe = parse_number<double>(f[17], where);
    r.status = f[18];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Sample> to_samples(std::span<const DatasetRow> rows, MetricKind metric,
                               std::optional<std::string_view> split) {
  std::vector<Sample> out;
  for (const auto& r : rows) {
    if (!r.ok() || r.metric != metric) continue;
    if (split && r.split != *split) continue;
    out.push_back({r.features, r.result.label, r.result.weight});
  }
  return out;
}

PruneResult prune(const Graph& g, const LabelledCommunities& truth,
                  std::optional<std::size_t> top) {
  const std::size_t keep =
      top ? std::min(*top, truth.communities.size()) : truth.communities.size();
  PruneResult out;
  std::vector<std::vector<NodeId>> communities;  // in original graph ids
  std::vector<bool> covered(g.num_nodes(), false);
  for (std::size_t c = 0; c < keep; ++c) {
    std::vector<NodeId> members;
    for (NodeId local : truth.communities[c]) {
      const auto v = g.find(truth.labels[local]);
      if (!v) {
        ++out.unknown_labels;
        continue;
      }
      members.push_back(*v);
      covered[*v] = true;
    }
    communities.push_back(std::move(members));
  }

  std::vector<NodeId> remap(g.num_nodes(), 0);
  std::vector<std::string> labels;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (!covered[v]) {
      ++out.dropped_nodes;
      continue;
    }
    remap[v] = static_cast<NodeId>(labels.size());
    labels.push_back(g.label(v));
  }
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (!covered[u]) continue;
    for (NodeId v : g.neighbors(u)) {
      if (u < v && covered[v]) edges.emplace_back(remap[u], remap[v]);
    }
  }
  for (auto& members : communities) {
    for (NodeId& v : members) v = remap[v];
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
  }
  const std::size_t n = labels.size();
  out.graph = Graph::from_edges(std::move(labels), std::move(edges));
  out.truth = Cover(n, std::move(communities));
  return out;
}

std::filesystem::path write_toy_corpus(const std::filesystem::path& dir, std::size_t count,
                                       std::uint64_t seed, std::string_view header) {
  std::filesystem::create_directories(dir);
  std::vector<NetworkRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    // Odd indices: few dense, overlapping blocks. Even indices alternate
    // between sparse blocks and disjoint medium-density blocks.
    std::size_t n = 0, communities = 0;
    double overlap = 0.0, p_in = 0.0, p_out = 0.0;
    if (i % 2 == 1) {
      n = 80 + 20 * static_cast<std::size_t>(rng.uniform(3));
      communities = 3;
      overlap = 0.2;
      p_in = 0.9;
      p_out = 0.01 + 0.02 * static_cast<double>(rng.uniform(3));
    } else if (i % 4 == 0) {
      n = 60 + 10 * static_cast<std::size_t>(rng.uniform(5));
      communities = 5 + static_cast<std::size_t>(rng.uniform(3));
      overlap = 0.1 * static_cast<double>(rng.uniform(2));
      p_in = 0.3;
      p_out = 0.02;
    } else {
      n = 80;
      communities = 4 + static_cast<std::size_t>(rng.uniform(2));
      overlap = 0.0;
      p_in = 0.5 + 0.05 * static_cast<double>(rng.uniform(3));
      p_out = 0.02;
    }
    const PlantedNetwork net =
        generate_test_network(n, communities, overlap, p_in, p_out, rng.next());

    char name[32];
    std::snprintf(name, sizeof name, "toy%03zu", i);
    NetworkRecord r;
    r.id = name;
    r.graph_path = dir / (r.id + ".edges");
    r.truth_path = dir / (r.id + ".cmty");
    write_edge_list(r.graph_path, net.graph, header);
    write_cover(r.truth_path, net.truth, net.graph, header);

    LfrTags t;
    t.n = static_cast<int>(n);
    t.k = static_cast<int>(std::lround(extract_features(net.graph).average_node_degree));
    t.max_k = 0;
    for (NodeId v = 0; v < net.graph.num_nodes(); ++v) {
      t.max_k = std::max(t.max_k, static_cast<int>(net.graph.degree(v)));
    }
    t.on = std::round(overlap * 100.0) / 100.0;
    t.om = overlap > 0.0 ? 2 : 1;
    t.mut = std::round(p_out * 100.0) / 100.0;
    t.custom = true;
    r.tags = t;
    records.push_back(std::move(r));
  }
  const auto manifest = dir / "manifest.tsv";
  write_manifest(manifest, records, header);
  return manifest;
}

}  // namespace nectar
