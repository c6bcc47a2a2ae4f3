#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nectar/classifier.hpp"
#include "nectar/cover.hpp"
#include "nectar/engine.hpp"
#include "nectar/graph.hpp"
#include "nectar/metrics.hpp"

namespace nectar {

// Generator parameters of a synthetic network.
struct LfrTags {
  int n = 0;
  int k = 0;
  int max_k = 0;
  double on = 0.0;
  int om = 0;
  double mut = 0.0;
  // Values outside the published generation grid are accepted only when
  // marked custom.
  bool custom = false;

  friend bool operator==(const LfrTags&, const LfrTags&) = default;
};

// Throws std::invalid_argument for non-custom tags outside the grid.
void validate_tags(const LfrTags& tags);

struct NetworkRecord {
  std::string id;
  std::filesystem::path graph_path;
  std::filesystem::path truth_path;
  std::optional<LfrTags> tags;
};

// Tab-separated: id, graph_path, truth_path, then optionally
// n, k, maxK, On, Om, mut and a custom flag (0/1). The first non-comment
// line is a header. Relative paths resolve against the manifest directory.
std::vector<NetworkRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    std::span<const NetworkRecord> records,
                    std::string_view header = {});

inline const std::vector<double> kDefaultBetas = {1.01, 1.05, 1.09, 1.1, 1.2,
                                                  1.3,  1.4,  1.6,  1.8, 2.0};

// Throws std::invalid_argument when empty or any value is below 1.
void validate_betas(std::span<const double> betas);

struct MetricLabel {
  double best_wocc = 0.0;
  double best_qe = 0.0;
  ObjectiveKind label = ObjectiveKind::kQE;
  double weight = 0.0;
};

// Label and weight from a pair of best scores. Ties go to Q_E. Scores below
// zero count as zero in the weight so it stays within [0, 1].
MetricLabel make_label(double best_wocc, double best_qe);

struct LabeledNetwork {
  NetworkRecord record;
  FeatureVector features;
  std::size_t num_nodes = 0;
  std::array<MetricLabel, 4> per_metric;  // indexed like kAllMetrics
};

struct LabelOptions {
  EngineConfig engine;  // beta and mode are overridden per run
  bool use_best_match = false;
};

LabeledNetwork label_network(const NetworkRecord& record, std::span<const double> betas,
                             const LabelOptions& options = {});

// Same, on an already loaded graph and ground truth.
LabeledNetwork label_network(const NetworkRecord& record, const Graph& g,
                             const Cover& truth, std::span<const double> betas,
                             const LabelOptions& options = {});

struct PlantedNetwork {
  Graph graph;
  Cover truth;
};

// Contiguous equal-size blocks; round(overlap_fraction * n) nodes chosen by
// seeded draw join one more block. Each pair is joined with p_in when the
// endpoints share a block, p_out otherwise. A node left without edges is
// joined to one member of its first block. Labels are "1".."n".
PlantedNetwork generate_test_network(std::size_t n, std::size_t communities,
                                     double overlap_fraction, double p_in, double p_out,
                                     std::uint64_t seed);

struct DatasetRow {
  std::string id;
  FeatureVector features;
  MetricKind metric = MetricKind::kAverage;
  MetricLabel result;
  std::string split;  // "train" or "test"
  std::size_t num_nodes = 0;
  std::optional<LfrTags> tags;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

struct BuildOptions {
  LabelOptions label;
  std::size_t workers = 1;
  std::size_t split_threshold = 52500;  // networks above this size go to test
};

// One row per (record, metric), in manifest order. A record that fails gets
// rows whose status carries the diagnostic.
std::vector<DatasetRow> build_rows(std::span<const NetworkRecord> records,
                                   std::span<const double> betas,
                                   const BuildOptions& options);

void write_dataset(std::ostream& out, std::span<const DatasetRow> rows);
void write_dataset(const std::filesystem::path& path, std::span<const DatasetRow> rows,
                   std::string_view header = {});
std::vector<DatasetRow> read_dataset(const std::filesystem::path& path);

// Rows that labeled successfully for `metric`, optionally restricted to a
// split, as learner samples.
std::vector<Sample> to_samples(std::span<const DatasetRow> rows, MetricKind metric,
                               std::optional<std::string_view> split = std::nullopt);

struct PruneResult {
  Graph graph;
  Cover truth;
  std::size_t dropped_nodes = 0;
  std::size_t unknown_labels = 0;
};

// Keeps the first `top` communities (all when unset), drops graph nodes in
// none of them and ignores community labels missing from the graph.
PruneResult prune(const Graph& g, const LabelledCommunities& truth,
                  std::optional<std::size_t> top = std::nullopt);

// Writes `count` planted networks in three regimes plus a manifest into
// `dir`; returns the manifest path.
std::filesystem::path write_toy_corpus(const std::filesystem::path& dir,
                                       std::size_t count, std::uint64_t seed,
                                       std::string_view header = {});

}  // namespace nectar
