#include "nectar/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nectar/classifier.hpp"
#include "nectar/rng.hpp"

namespace nectar {

void EngineConfig::validate() const {
  if (!(beta >= 1.0)) throw std::invalid_argument("beta must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

ObjectiveKind select_objective(const Graph& g, const EngineConfig& config,
                               const ModelEnsemble* model) {
  switch (config.mode) {
    case ObjectiveMode::kForceQE:
      return ObjectiveKind::kQE;
    case ObjectiveMode::kForceWOCC:
      return ObjectiveKind::kWOCC;
    case ObjectiveMode::kThreshold:
      return extract_features(g).average_triangles_rate >= config.tr_rate
                 ? ObjectiveKind::kWOCC
                 : ObjectiveKind::kQE;
    case ObjectiveMode::kModel:
      if (model == nullptr) throw std::invalid_argument("model mode requires a loaded model");
      return predict(*model, extract_features(g)).kind;
  }
  return ObjectiveKind::kQE;
}

Cover initialize_cover(const Graph& g, double alpha) {
  const std::size_t n = g.num_nodes();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Seeds go in order of t(v) / (k(v) - 1)^1.1, nodes of degree below 2 last.
  auto score = [&](NodeId v) {
    const double k = static_cast<double>(g.degree(v));
    return k < 2 ? -1.0 : static_cast<double>(g.triangles_at(v)) / std::pow(k - 1.0, 1.1);
  };
  std::vector<double> key(n);
  for (NodeId v = 0; v < n; ++v) key[v] = score(v);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return g.degree(a) > g.degree(b);
  });
  // Each unassigned node claims itself and its unassigned neighbors.
  std::vector<bool> assigned(n, false);
  std::vector<std::vector<NodeId>> seeds;
  for (NodeId v : order) {
    if (assigned[v]) continue;
    std::vector<NodeId> ball{v};
    assigned[v] = true;
    for (NodeId u : g.neighbors(v)) {
      if (!assigned[u]) {
        assigned[u] = true;
        ball.push_back(u);
      }
    }
    std::sort(ball.begin(), ball.end());
    seeds.push_back(std::move(ball));
  }
  return merge_cover(Cover(n, std::move(seeds)), alpha).first;
}

std::pair<Cover, bool> merge_cover(Cover cover, double alpha) {
  cover.compact();
  const std::size_t before = cover.num_communities();
  std::vector<std::vector<NodeId>> comms = cover.communities();
  std::vector<bool> alive(comms.size(), true);

  std::vector<std::vector<CommunityId>> member_of(cover.num_nodes());
  for (CommunityId c = 0; c < comms.size(); ++c) {
    for (NodeId v : comms[c]) member_of[v].push_back(c);
  }

  std::vector<CommunityId> order;
  std::vector<std::size_t> rank(comms.size());
  std::vector<std::uint32_t> shared(comms.size(), 0);
  std::vector<CommunityId> touched;

  bool merged_any = true;
  while (merged_any) {
    merged_any = false;
    order.clear();
    for (CommunityId c = 0; c < comms.size(); ++c) {
      if (alive[c]) order.push_back(c);
    }
    std::sort(order.begin(), order.end(), [&](CommunityId a, CommunityId b) {
      return comms[a].size() < comms[b].size() ||
             (comms[a].size() == comms[b].size() && a < b);
    });
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

    for (CommunityId a : order) {
      touched.clear();
      for (NodeId v : comms[a]) {
        for (CommunityId b : member_of[v]) {
          if (b == a || rank[b] < rank[a]) continue;
          if (shared[b]++ == 0) touched.push_back(b);
        }
      }
      std::optional<CommunityId> partner;
      const double smaller = static_cast<double>(comms[a].size());
      for (CommunityId b : touched) {
        if (static_cast<double>(shared[b]) / smaller >= alpha &&
            (!partner || b < *partner)) {
          partner = b;
        }
        shared[b] = 0;
      }
      if (!partner) continue;

      const CommunityId keep = std::min(a, *partner);
      const CommunityId drop = std::max(a, *partner);
      std::vector<NodeId> joined;
      std::set_union(comms[keep].begin(), comms[keep].end(), comms[drop].begin(),
                     comms[drop].end(), std::back_inserter(joined));
      for (NodeId v : comms[drop]) {
        auto& list = member_of[v];
        list.erase(std::find(list.begin(), list.end(), drop));
        if (std::find(list.begin(), list.end(), keep) == list.end()) list.push_back(keep);
      }
      comms[keep] = std::move(joined);
      comms[drop].clear();
      alive[drop] = false;
      merged_any = true;
      break;
    }
  }

  std::vector<std::vector<NodeId>> survivors;
  for (CommunityId c = 0; c < comms.size(); ++c) {
    if (alive[c]) survivors.push_back(std::move(comms[c]));
  }
  Cover out(cover.num_nodes(), std::move(survivors));
  const bool reduced = out.num_communities() < before;
  return {std::move(out), reduced};
}

std::vector<CommunityId> select_candidates(const GainTable& gains, double beta) {
  std::vector<CommunityId> chosen;
  if (gains.empty()) return chosen;
  double best = gains.front().second;
  for (const auto& [c, gain] : gains) best = std::max(best, gain);
  if (!(best > 0.0)) return chosen;
  for (const auto& [c, gain] : gains) {
    if (gain * beta >= best) chosen.push_back(c);
  }
  return chosen;
}

RunResult run_with_objective(const Graph& g, const EngineConfig& config,
                             ObjectiveKind kind) {
  config.validate();
  RunResult result;
  result.objective_chosen = kind;

  const std::size_t n = g.num_nodes();
  GainTracker tracker(g, kind, initialize_cover(g, config.alpha));
  Rng rng(config.rng_seed);
  std::vector<NodeId> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0);

  std::size_t stable = 0;
  int iteration = 0;
  do {
    stable = 0;
    rng.shuffle(nodes);
    for (NodeId v : nodes) {
      const std::vector<CommunityId> previous = tracker.detach(v);
      std::vector<CommunityId> chosen = select_candidates(tracker.gains(v), config.beta);
      if (chosen.empty()) {
        // No positive gain: v stays alone, in a slot it just vacated if any.
        std::optional<CommunityId> reuse;
        for (CommunityId c : previous) {
          if (tracker.cover().empty(c)) {
            reuse = c;
            break;
          }
        }
        chosen.push_back(tracker.attach_singleton(v, reuse));
      } else {
        for (CommunityId c : chosen) tracker.attach(v, c);
      }
      std::sort(chosen.begin(), chosen.end());
      if (chosen == previous) ++stable;
    }

    auto [merged, reduced] = merge_cover(std::move(tracker).release(), config.alpha);
    tracker.reset(std::move(merged));
    if (reduced) stable = 0;
    ++iteration;
  } while (stable != n && iteration < config.max_iter);

  result.iterations_used = iteration;
  result.converged = stable == n;
  result.cover = std::move(tracker).release();
  result.objective_value = objective_global(g, result.cover, kind);
  return result;
}

RunResult run(const Graph& g, const EngineConfig& config, const ModelEnsemble* model) {
  config.validate();
  return run_with_objective(g, config, select_objective(g, config, model));
}

}  // namespace nectar
