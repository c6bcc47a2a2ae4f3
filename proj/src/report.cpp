#include "nectar/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace nectar {

namespace {

// Catch-all sorts after every tagged key.
struct KeyLess {
  bool operator()(const ConfigKey& a, const ConfigKey& b) const {
    if (!a || !b) return a.has_value() && !b.has_value();
    return *a < *b;
  }
};

void write_key(std::ostream& out, const ConfigKey& key) {
  if (!key) {
    out << "*\t*\t*\t*";
    return;
  }
  const auto& [k, on, om, mut] = *key;
  out << k << '\t' << format_score(on) << '\t' << om << '\t' << format_score(mut);
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

}  // namespace

std::string format_score(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

ConfigKey config_key(const std::optional<LfrTags>& tags) {
  if (!tags) return std::nullopt;
  return std::tuple{tags->k, round6(tags->on), tags->om, round6(tags->mut)};
}

double signed_weight(ObjectiveKind truth, ObjectiveKind threshold_pick,
                     ObjectiveKind model_pick, double weight) {
  const bool model_right = model_pick == truth;
  const bool threshold_right = threshold_pick == truth;
  if (model_right && !threshold_right) return weight;
  if (threshold_right && !model_right) return -weight;
  return 0.0;
}

Comparison compare_selectors(std::span<const DatasetRow> rows, const ModelEnsemble& model,
                             double tr_rate) {
  Comparison out;
  std::map<ConfigKey, std::pair<double, std::size_t>, KeyLess> cells;
  for (const auto& r : rows) {
    if (!r.ok() || r.metric != model.metric) continue;
    ComparisonRow row;
    row.id = r.id;
    row.key = config_key(r.tags);
    row.truth = r.result.label;
    row.threshold_pick = r.features.average_triangles_rate >= tr_rate ? ObjectiveKind::kWOCC
                                                                      : ObjectiveKind::kQE;
    row.model_pick = predict(model, r.features).kind;
    row.weight = r.result.weight;
    row.signed_weight = signed_weight(row.truth, row.threshold_pick, row.model_pick, row.weight);
    auto& cell = cells[row.key];
    cell.first += row.signed_weight;
    cell.second += 1;
    out.rows.push_back(std::move(row));
  }
  for (const auto& [key, acc] : cells) {
    out.cells.push_back({key, acc.first / static_cast<double>(acc.second), acc.second});
  }
  return out;
}

void write_cells(std::ostream& out, std::span<const ComparisonCell> cells) {
  out << "k\tOn\tOm\tmut\tvalue\tnetworks\n";
  for (const auto& c : cells) {
    write_key(out, c.key);
    out << '\t' << format_score(c.value) << '\t' << c.network_count << '\n';
  }
}

void write_comparison_rows(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "id\tk\tOn\tOm\tmut\tlabel\tthreshold_pick\tmodel_pick\tweight\tsigned_weight\n";
  for (const auto& r : rows) {
    out << r.id << '\t';
    write_key(out, r.key);
    out << '\t' << to_string(r.truth) << '\t' << to_string(r.threshold_pick) << '\t'
        << to_string(r.model_pick) << '\t' << format_score(r.weight) << '\t'
        << format_score(r.signed_weight) << '\n';
  }
}

std::string RunManifest::header() const {
  std::string out = "# nectar-ml " + std::string(kToolVersion) + "\n";
  out += "# command: " + subcommand + "\n";
  out += "# seed: " + std::to_string(seed) + "\n";
  for (const auto& [name, value] : flags) out += "# flag: --" + name + " " + value + "\n";
  for (const auto& input : inputs) out += "# input: " + input + "\n";
  return out;
}

}  // namespace nectar
