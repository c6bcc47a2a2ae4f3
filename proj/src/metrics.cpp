#include "nectar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace nectar {

namespace {

double h(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

void check_universe(const Cover& a, const Cover& b) {
  if (a.num_nodes() != b.num_nodes()) {
    throw MetricError("covers are defined over different node universes");
  }
}

// Intersection sizes |A_k ∩ B_l| for every overlapping pair, keyed by
// (k, l) slot ids.
std::unordered_map<std::uint64_t, std::uint32_t> overlaps(const Cover& a, const Cover& b) {
  std::unordered_map<std::uint64_t, std::uint32_t> out;
  for (NodeId v = 0; v < a.num_nodes(); ++v) {
    for (CommunityId k : a.memberships(v)) {
      for (CommunityId l : b.memberships(v)) {
        ++out[(static_cast<std::uint64_t>(k) << 32) | l];
      }
    }
  }
  return out;
}

std::vector<CommunityId> live_ids(const Cover& c) {
  std::vector<CommunityId> ids;
  for (CommunityId k = 0; k < c.num_slots(); ++k) {
    if (!c.empty(k)) ids.push_back(k);
  }
  return ids;
}

// H(X|Y)_norm in the LFK formulation.
double conditional_entropy(const Cover& x, const Cover& y,
                           const std::unordered_map<std::uint64_t, std::uint32_t>& inter,
                           bool x_is_first) {
  const double n = static_cast<double>(x.num_nodes());
  const auto xs = live_ids(x);
  const auto ys = live_ids(y);
  double total = 0.0;
  for (CommunityId k : xs) {
    const double px = static_cast<double>(x.size(k)) / n;
    const double hx = h(px) + h(1.0 - px);
    if (hx <= 0.0) continue;
    double best = hx;
    for (CommunityId l : ys) {
      const std::uint64_t key = x_is_first ? (static_cast<std::uint64_t>(k) << 32) | l
                                           : (static_cast<std::uint64_t>(l) << 32) | k;
      const auto it = inter.find(key);
      const double c = it == inter.end() ? 0.0 : static_cast<double>(it->second);
      const double sx = static_cast<double>(x.size(k));
      const double sy = static_cast<double>(y.size(l));
      const double p11 = c / n;
      const double p10 = (sx - c) / n;
      const double p01 = (sy - c) / n;
      const double p00 = (n - sx - sy + c) / n;
      if (!(h(p11) + h(p00) > h(p01) + h(p10))) continue;
      const double py = sy / n;
      const double hy = h(py) + h(1.0 - py);
      const double joint = h(p11) + h(p10) + h(p01) + h(p00);
      best = std::min(best, joint - hy);
    }
    total += best / hx;
  }
  return total / static_cast<double>(xs.size());
}

double omega_from_counts(std::uint64_t agree, std::uint64_t chance, std::uint64_t total) {
  const double t = static_cast<double>(total);
  const double wu = static_cast<double>(agree) / t;
  const double we = static_cast<double>(chance) / (t * t);
  if (we == 1.0) {
    if (wu == 1.0) return 1.0;
    throw MetricError("omega index: degenerate null model");
  }
  return (wu - we) / (1.0 - we);
}

}  // namespace

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kONMI: return "onmi";
    case MetricKind::kOmega: return "omega";
    case MetricKind::kAvgF1: return "avgf1";
    case MetricKind::kAverage: return "average";
  }
  return "?";
}

std::optional<MetricKind> parse_metric_kind(std::string_view name) {
  for (MetricKind k : kAllMetrics) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

double ScoreReport::get(MetricKind kind) const {
  switch (kind) {
    case MetricKind::kONMI: return onmi;
    case MetricKind::kOmega: return omega;
    case MetricKind::kAvgF1: return avg_f1;
    case MetricKind::kAverage: return metrics_average;
  }
  return 0.0;
}

double onmi(const Cover& a, const Cover& b) {
  check_universe(a, b);
  if (a.num_communities() == 0 || b.num_communities() == 0) {
    throw MetricError("ONMI is undefined for an empty cover");
  }
  const auto inter = overlaps(a, b);
  const double hab = conditional_entropy(a, b, inter, true);
  const double hba = conditional_entropy(b, a, inter, false);
  return 1.0 - 0.5 * (hab + hba);
}

double omega_index(const Cover& a, const Cover& b) {
  check_universe(a, b);
  const std::uint64_t n = a.num_nodes();
  if (n < 2) throw MetricError("omega index needs at least two nodes");
  const std::uint64_t total = n * (n - 1) / 2;

  // Co-membership multiplicities for every pair that shares a community in
  // either cover; all other pairs sit at j = 0 in both.
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> pairs;
  auto tally = [&](const Cover& c, bool first) {
    for (CommunityId k = 0; k < c.num_slots(); ++k) {
      const auto m = c.members(k);
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
          auto& e = pairs[(static_cast<std::uint64_t>(m[i]) << 32) | m[j]];
          (first ? e.first : e.second) += 1;
        }
      }
    }
  };
  tally(a, true);
  tally(b, false);

  std::vector<std::uint64_t> ta(1, 0), tb(1, 0);
  std::uint64_t agree = 0;
  for (const auto& [key, e] : pairs) {
    if (ta.size() <= e.first) ta.resize(e.first + 1, 0);
    if (tb.size() <= e.second) tb.resize(e.second + 1, 0);
    ++ta[e.first];
    ++tb[e.second];
    if (e.first == e.second) ++agree;
  }
  const std::uint64_t untouched = total - pairs.size();
  ta[0] += untouched;
  tb[0] += untouched;
  agree += untouched;

  // j runs to the smaller of the two maximal co-membership counts; larger
  // j cannot contribute to either sum.
  const std::size_t j_max = std::min(ta.size(), tb.size());
  std::uint64_t chance = 0;
  for (std::size_t j = 0; j < j_max; ++j) chance += ta[j] * tb[j];

  return omega_from_counts(agree, chance, total);
}

double f1_score(std::span<const NodeId> x, std::span<const NodeId> y) {
  if (x.empty() || y.empty()) return 0.0;
  std::size_t common = 0;
  auto a = x.begin();
  auto b = y.begin();
  while (a != x.end() && b != y.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++common;
      ++a;
      ++b;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(x.size());
  const double recall = static_cast<double>(common) / static_cast<double>(y.size());
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

// For each live community of `from`, its best F1 against `to` and the slot
// achieving it (lowest id on ties).
std::vector<std::pair<CommunityId, double>> best_matches(const Cover& from,
                                                         const Cover& to) {
  const auto to_ids = live_ids(to);
  std::vector<std::pair<CommunityId, double>> out;
  std::vector<CommunityId> candidates;
  for (CommunityId k : live_ids(from)) {
    candidates.clear();
    for (NodeId v : from.members(k)) {
      const auto m = to.memberships(v);
      candidates.insert(candidates.end(), m.begin(), m.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    CommunityId best_id = to_ids.empty() ? 0 : to_ids.front();
    double best = 0.0;
    for (CommunityId l : candidates) {
      const double f = f1_score(from.members(k), to.members(l));
      if (f > best) {
        best = f;
        best_id = l;
      }
    }
    out.emplace_back(best_id, best);
  }
  return out;
}

double mean_best_f1(const Cover& from, const Cover& to) {
  double sum = 0.0;
  const auto matches = best_matches(from, to);
  for (const auto& [id, f] : matches) sum += f;
  return sum / (2.0 * static_cast<double>(matches.size()));
}

}  // namespace

double average_f1(const Cover& a, const Cover& b) {
  check_universe(a, b);
  if (a.num_communities() == 0 || b.num_communities() == 0) {
    throw MetricError("average F1 is undefined for an empty cover");
  }
  return mean_best_f1(a, b) + mean_best_f1(b, a);
}

Cover best_match_subset(const Cover& ground_truth, const Cover& detected) {
  check_universe(ground_truth, detected);
  if (detected.num_communities() == 0) {
    throw MetricError("best-match subset needs a non-empty detected cover");
  }
  std::vector<CommunityId> picked;
  for (const auto& [id, f] : best_matches(ground_truth, detected)) picked.push_back(id);
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  std::vector<std::vector<NodeId>> chosen;
  for (CommunityId c : picked) {
    chosen.emplace_back(detected.members(c).begin(), detected.members(c).end());
  }
  return Cover(detected.num_nodes(), std::move(chosen));
}

ScoreReport score(const Cover& detected, const Cover& truth, bool use_best_match) {
  const Cover subset = use_best_match ? best_match_subset(truth, detected) : Cover();
  const Cover& evaluated = use_best_match ? subset : detected;
  ScoreReport r;
  r.onmi = onmi(evaluated, truth);
  r.omega = omega_index(evaluated, truth);
  r.avg_f1 = average_f1(evaluated, truth);
  r.metrics_average = (r.onmi + r.omega + r.avg_f1) / 3.0;
  return r;
}

}  // namespace nectar
