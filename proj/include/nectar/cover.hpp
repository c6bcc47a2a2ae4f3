#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "nectar/graph.hpp"

namespace nectar {

using CommunityId = std::uint32_t;

// A set of possibly overlapping communities over nodes [0, num_nodes).
//
// Communities are addressed by slot ids. Removing the last member of a
// community leaves an empty slot until compact() is called; the engine
// relies on this to keep ids stable within a sweep. Member lists and
// per-node membership lists are kept sorted.
class Cover {
 public:
  Cover() = default;
  explicit Cover(std::size_t num_nodes) : memberships_(num_nodes) {}
  // Members of each community are deduplicated; node ids must be < num_nodes.
  Cover(std::size_t num_nodes, std::vector<std::vector<NodeId>> communities);

  std::size_t num_nodes() const { return memberships_.size(); }
  // Number of slots, including empty ones.
  std::size_t num_slots() const { return members_.size(); }
  // Number of non-empty communities.
  std::size_t num_communities() const;

  std::span<const NodeId> members(CommunityId c) const { return members_[c]; }
  std::size_t size(CommunityId c) const { return members_[c].size(); }
  bool empty(CommunityId c) const { return members_[c].empty(); }

  std::span<const CommunityId> memberships(NodeId v) const { return memberships_[v]; }
  // O_v: number of communities containing v.
  std::size_t membership_count(NodeId v) const { return memberships_[v].size(); }
  bool contains(CommunityId c, NodeId v) const;

  CommunityId add_community(std::vector<NodeId> nodes);
  void add(NodeId v, CommunityId c);
  void remove(NodeId v, CommunityId c);

  // Drops empty slots; surviving communities keep their relative order.
  void compact();

  // Non-empty communities in slot order.
  std::vector<std::vector<NodeId>> communities() const;

 private:
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::vector<CommunityId>> memberships_;
};

// Reads one community per line (whitespace-separated external labels).
// '#' lines and blank lines are skipped. Labels must exist in `g`.
Cover read_cover(const std::filesystem::path& path, const Graph& g);

// Same format without a graph: labels are interned in order of appearance.
struct LabelledCommunities {
  std::vector<std::string> labels;
  std::vector<std::vector<NodeId>> communities;
};
LabelledCommunities read_communities(const std::filesystem::path& path);

// One community per line, labels sorted (numerically when both labels are
// integers, lexicographically otherwise).
void write_cover(const std::filesystem::path& path, const Cover& cover,
                 const Graph& g, std::string_view header = {});

bool label_less(std::string_view a, std::string_view b);

}  // namespace nectar
