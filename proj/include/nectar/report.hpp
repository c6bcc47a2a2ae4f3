#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "nectar/classifier.hpp"
#include "nectar/dataset.hpp"

namespace nectar {

inline constexpr std::string_view kToolVersion = "1.0.0";

// (k, On, Om, mut); nullopt is the catch-all key for untagged rows.
using ConfigKey = std::optional<std::tuple<int, double, int, double>>;

ConfigKey config_key(const std::optional<LfrTags>& tags);

struct ComparisonCell {
  ConfigKey key;
  double value = 0.0;
  std::size_t network_count = 0;
};

struct ComparisonRow {
  std::string id;
  ConfigKey key;
  ObjectiveKind truth = ObjectiveKind::kQE;
  ObjectiveKind threshold_pick = ObjectiveKind::kQE;
  ObjectiveKind model_pick = ObjectiveKind::kQE;
  double weight = 0.0;
  double signed_weight = 0.0;
};

struct Comparison {
  std::vector<ComparisonCell> cells;  // ascending key, catch-all last
  std::vector<ComparisonRow> rows;    // input order
};

// +weight when only the model picks the label, -weight when only the
// threshold rule does, 0 otherwise.
double signed_weight(ObjectiveKind truth, ObjectiveKind threshold_pick,
                     ObjectiveKind model_pick, double weight);

// Uses the rows labeled for the model's metric.
Comparison compare_selectors(std::span<const DatasetRow> rows, const ModelEnsemble& model,
                             double tr_rate);

void write_cells(std::ostream& out, std::span<const ComparisonCell> cells);
void write_comparison_rows(std::ostream& out, std::span<const ComparisonRow> rows);

// Provenance echoed as '#' lines at the top of every output file.
struct RunManifest {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> flags;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;

  std::string header() const;
};

std::string format_score(double x);

}  // namespace nectar
