#include "nectar/cover.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace nectar {

namespace {

template <class T>
void insert_sorted(std::vector<T>& items, T value) {
  const auto it = std::lower_bound(items.begin(), items.end(), value);
  if (it == items.end() || *it != value) items.insert(it, value);
}

template <class T>
void erase_sorted(std::vector<T>& items, T value) {
  const auto it = std::lower_bound(items.begin(), items.end(), value);
  if (it != items.end() && *it == value) items.erase(it);
}

bool is_data_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first != std::string::npos && line[first] != '#';
}

}  // namespace

Cover::Cover(std::size_t num_nodes, std::vector<std::vector<NodeId>> communities)
    : memberships_(num_nodes) {
  for (auto& nodes : communities) {
    if (!nodes.empty()) add_community(std::move(nodes));
  }
}

std::size_t Cover::num_communities() const {
  return static_cast<std::size_t>(std::count_if(
      members_.begin(), members_.end(), [](const auto& m) { return !m.empty(); }));
}

bool Cover::contains(CommunityId c, NodeId v) const {
  return std::binary_search(memberships_[v].begin(), memberships_[v].end(), c);
}

CommunityId Cover::add_community(std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const auto id = static_cast<CommunityId>(members_.size());
  for (NodeId v : nodes) {
    if (v >= memberships_.size()) throw std::out_of_range("community node out of range");
    // Slots are appended with increasing ids, so push_back keeps order.
    memberships_[v].push_back(id);
  }
  members_.push_back(std::move(nodes));
  return id;
}

void Cover::add(NodeId v, CommunityId c) {
  insert_sorted(members_[c], v);
  insert_sorted(memberships_[v], c);
}

void Cover::remove(NodeId v, CommunityId c) {
  erase_sorted(members_[c], v);
  erase_sorted(memberships_[v], c);
}

void Cover::compact() {
  std::vector<CommunityId> remap(members_.size(), 0);
  std::vector<std::vector<NodeId>> kept;
  kept.reserve(members_.size());
  for (CommunityId c = 0; c < members_.size(); ++c) {
    if (members_[c].empty()) continue;
    remap[c] = static_cast<CommunityId>(kept.size());
    kept.push_back(std::move(members_[c]));
  }
  members_ = std::move(kept);
  // Remapping is monotone, so membership lists stay sorted.
  for (auto& list : memberships_) {
    for (auto& c : list) c = remap[c];
  }
}

std::vector<std::vector<NodeId>> Cover::communities() const {
  std::vector<std::vector<NodeId>> out;
  for (const auto& m : members_) {
    if (!m.empty()) out.push_back(m);
  }
  return out;
}

bool label_less(std::string_view a, std::string_view b) {
  long long x = 0, y = 0;
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
  const bool na = ra.ec == std::errc{} && ra.ptr == a.data() + a.size();
  const bool nb = rb.ec == std::errc{} && rb.ptr == b.data() + b.size();
  if (na && nb && x != y) return x < y;
  if (na != nb) return na;
  return a < b;
}

LabelledCommunities read_communities(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open community file: " + path.string());
  LabelledCommunities out;
  std::unordered_map<std::string, NodeId> index;
  std::string line, token;
  while (std::getline(in, line)) {
    if (!is_data_line(line)) continue;
    std::istringstream fields(line);
    std::vector<NodeId> community;
    while (fields >> token) {
      const auto [it, inserted] =
          index.try_emplace(token, static_cast<NodeId>(out.labels.size()));
      if (inserted) out.labels.push_back(token);
      community.push_back(it->second);
    }
    out.communities.push_back(std::move(community));
  }
  return out;
}

Cover read_cover(const std::filesystem::path& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open community file: " + path.string());
  std::vector<std::vector<NodeId>> communities;
  std::string line, token;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_data_line(line)) continue;
    std::istringstream fields(line);
    std::vector<NodeId> community;
    while (fields >> token) {
      const auto v = g.find(token);
      if (!v) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": node '" + token + "' is not in the graph");
      }
      community.push_back(*v);
    }
    communities.push_back(std::move(community));
  }
  return Cover(g.num_nodes(), std::move(communities));
}

void write_cover(const std::filesystem::path& path, const Cover& cover,
                 const Graph& g, std::string_view header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write community file: " + path.string());
  out << header;
  std::vector<std::string_view> row;
  for (const auto& community : cover.communities()) {
    row.clear();
    for (NodeId v : community) row.push_back(g.label(v));
    std::sort(row.begin(), row.end(), label_less);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failure: " + path.string());
}

}  // namespace nectar
