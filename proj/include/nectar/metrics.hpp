#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

#include "nectar/cover.hpp"

namespace nectar {

enum class MetricKind { kONMI, kOmega, kAvgF1, kAverage };

inline constexpr std::array<MetricKind, 4> kAllMetrics = {
    MetricKind::kONMI, MetricKind::kOmega, MetricKind::kAvgF1, MetricKind::kAverage};

std::string_view to_string(MetricKind kind);
std::optional<MetricKind> parse_metric_kind(std::string_view name);

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kOnmiVariant = "LFK";

struct ScoreReport {
  double onmi = 0.0;
  double omega = 0.0;
  double avg_f1 = 0.0;
  double metrics_average = 0.0;
  std::string_view onmi_variant = kOnmiVariant;

  double get(MetricKind kind) const;
};

// Both covers are over the same node universe [0, num_nodes()).

// Lancichinetti–Fortunato–Kertész overlapping NMI:
//   1 - (H(X|Y)_norm + H(Y|X)_norm) / 2.
// A community's conditional entropy given another only counts when
// h(P11) + h(P00) > h(P01) + h(P10); otherwise it falls back to H(X_k).
// Communities with H(X_k) = 0 (empty or spanning the universe) contribute
// a normalized term of 0. Throws MetricError on an empty cover.
double onmi(const Cover& a, const Cover& b);

// Omega index over all unordered pairs of the universe. Throws MetricError
// when the universe has fewer than 2 nodes, or when the chance term is 1
// while the covers disagree.
double omega_index(const Cover& a, const Cover& b);

// F1 between node sets.
double f1_score(std::span<const NodeId> x, std::span<const NodeId> y);

// Symmetric best-match average F1. Throws MetricError on an empty cover.
double average_f1(const Cover& a, const Cover& b);

// For each ground-truth community, the detected community with the highest
// F1 (lowest slot id on ties), deduplicated and kept in detected order.
Cover best_match_subset(const Cover& ground_truth, const Cover& detected);

ScoreReport score(const Cover& detected, const Cover& truth, bool use_best_match);

}  // namespace nectar
