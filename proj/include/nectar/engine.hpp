#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "nectar/cover.hpp"
#include "nectar/graph.hpp"
#include "nectar/objectives.hpp"

namespace nectar {

struct ModelEnsemble;

enum class ObjectiveMode { kForceQE, kForceWOCC, kThreshold, kModel };

struct EngineConfig {
  double beta = 1.1;
  double alpha = 0.8;
  int max_iter = 20;
  ObjectiveMode mode = ObjectiveMode::kThreshold;
  double tr_rate = 5.0;
  std::uint64_t rng_seed = 0;

  // Throws std::invalid_argument on beta < 1, alpha outside (0, 1] or
  // max_iter < 1.
  void validate() const;
};

struct RunResult {
  Cover cover;
  int iterations_used = 0;
  bool converged = false;
  ObjectiveKind objective_chosen = ObjectiveKind::kQE;
  double objective_value = 0.0;
};

// THRESHOLD picks WOCC iff triangles/|V| >= tr_rate; MODEL asks the
// classifier; FORCE_* returns the forced kind. MODEL without a model throws.
ObjectiveKind select_objective(const Graph& g, const EngineConfig& config,
                               const ModelEnsemble* model);

// Partition into closed-neighborhood balls: nodes are visited by
// descending t(v) / (k(v) - 1)^1.1 (nodes of degree < 2 last), then
// descending degree, then id, and each node not yet placed claims itself
// and its unplaced neighbors. merge(alpha) is applied once.
Cover initialize_cover(const Graph& g, double alpha = 0.8);

// Merges pairs with |A ∩ B| / min(|A|, |B|) >= alpha until none remain.
// Pairs are scanned with the smaller community first, ordered by
// (size, id), partners by ascending id; the scan restarts after each merge.
// The union takes the lower slot id. Returns the compacted cover and whether
// the community count decreased.
std::pair<Cover, bool> merge_cover(Cover cover, double alpha);

// C'_v: all communities whose gain times beta reaches the maximum gain.
// Empty when the table is empty or the maximum gain is not positive.
std::vector<CommunityId> select_candidates(const GainTable& gains, double beta);

RunResult run(const Graph& g, const EngineConfig& config,
              const ModelEnsemble* model = nullptr);

// Runs with a fixed objective; used by the labeling pipeline.
RunResult run_with_objective(const Graph& g, const EngineConfig& config,
                             ObjectiveKind kind);

}  // namespace nectar
