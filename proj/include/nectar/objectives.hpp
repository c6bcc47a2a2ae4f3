#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "nectar/cover.hpp"
#include "nectar/graph.hpp"

namespace nectar {

enum class ObjectiveKind { kQE, kWOCC };

std::string_view to_string(ObjectiveKind kind);
std::optional<ObjectiveKind> parse_objective_kind(std::string_view name);

// Extended modularity
//   QE = 1/(2m) sum_C sum_{i,j in C} [A_ij - k_i k_j / 2m] / (O_i O_j)
// over ordered pairs including i = j. Nodes in no community are scored as
// singletons. Returns 0 on edgeless graphs.
double qe_global(const Graph& g, const Cover& cover);

// WCC(x, C) for x in C:
//   t(x,C)/t(x,V) * vt(x,V) / (|C \ {x}| + vt(x, V \ C)),   0 if t(x,V) = 0.
double wcc(const Graph& g, const Cover& cover, NodeId x, CommunityId c);

// WOCC = 1/|V| sum_x 1/O_x sum_{C contains x} WCC(x, C); nodes in no
// community contribute 0. Returns 0 on edgeless graphs.
double wocc_global(const Graph& g, const Cover& cover);

double objective_global(const Graph& g, const Cover& cover, ObjectiveKind kind);

// Non-empty communities containing at least one neighbor of v, ascending.
std::vector<CommunityId> neighboring_communities(const Graph& g, const Cover& cover,
                                                 NodeId v);

// objective(cover + v in c) - objective(cover), for a node v that belongs
// to no community. Computed locally from v, c's members and their
// neighborhoods. Throws std::invalid_argument when c is not a live
// community, v is already in c, or v still has memberships.
double delta_gain(const Graph& g, const Cover& cover, NodeId v, CommunityId c,
                  ObjectiveKind kind);

using GainTable = std::vector<std::pair<CommunityId, double>>;

// Owns a cover and keeps the per-(node, community) triangle counts needed to
// evaluate WOCC gains in O(|C| + deg^2) instead of recounting triangles.
// All mutation of the cover must go through the tracker.
class GainTracker {
 public:
  GainTracker(const Graph& g, ObjectiveKind kind, Cover cover);

  const Cover& cover() const { return cover_; }
  Cover release() && { return std::move(cover_); }
  ObjectiveKind kind() const { return kind_; }

  // Removes v from every community; returns the ids it belonged to.
  std::vector<CommunityId> detach(NodeId v);
  // Gains for every community in S_v, ascending by id. v must be detached.
  GainTable gains(NodeId v) const;
  void attach(NodeId v, CommunityId c);
  // Puts v alone in a community: reuses `reuse` if it is an empty slot,
  // otherwise opens a new one.
  CommunityId attach_singleton(NodeId v, std::optional<CommunityId> reuse);

  // Replaces the cover (after compaction or merging) and rebuilds caches.
  void reset(Cover cover);

 private:
  struct TriangleCache {
    CommunityId community;
    std::uint32_t internal_triangles;  // t(x, C)
    std::uint32_t internal_partners;   // vt(x, C)
  };

  TriangleCache* cache_of(NodeId x, CommunityId c);
  const TriangleCache* cache_of(NodeId x, CommunityId c) const;
  void rebuild();

  const Graph* graph_;
  ObjectiveKind kind_;
  Cover cover_;
  std::vector<std::vector<TriangleCache>> caches_;
};

}  // namespace nectar
