#include "nectar/objectives.hpp"

#include <algorithm>
#include <stdexcept>

namespace nectar {

namespace {

// Sums in ascending order so totals do not depend on node or community
// numbering.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

// WCC from its counts: internal triangles t_in of T total, internal triangle
// partners vt_in of P total, and |C \ {x}| = others.
double wcc_from_counts(std::uint64_t t_in, std::uint64_t t_total, std::uint64_t vt_in,
                       std::uint64_t vt_total, std::uint64_t others) {
  if (t_total == 0 || t_in == 0) return 0.0;
  const double denom = static_cast<double>(others + (vt_total - vt_in));
  return (static_cast<double>(t_in) / static_cast<double>(t_total)) *
         (static_cast<double>(vt_total) / denom);
}

// Triangles x closes with two members of c, and members of c that share a
// triangle with x. x itself is never counted.
std::pair<std::uint64_t, std::uint64_t> internal_counts(const Graph& g,
                                                        const Cover& cover, NodeId x,
                                                        CommunityId c) {
  std::uint64_t t = 0, vt = 0;
  const auto nx = g.neighbors(x);
  const auto sx = g.edge_support(x);
  for (std::size_t i = 0; i < nx.size(); ++i) {
    const NodeId y = nx[i];
    if (!cover.contains(c, y)) continue;
    if (sx[i] > 0) ++vt;
    if (sx[i] == 0) continue;
    // Count z in N(x) ∩ N(y) ∩ C with z > y.
    const auto ny = g.neighbors(y);
    auto a = std::upper_bound(nx.begin(), nx.end(), y);
    auto b = std::upper_bound(ny.begin(), ny.end(), y);
    while (a != nx.end() && b != ny.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        if (cover.contains(c, *a)) ++t;
        ++a;
        ++b;
      }
    }
  }
  return {t, vt};
}

// |N(x) ∩ N(v) ∩ C| for a community c (v itself is excluded by simplicity).
std::uint64_t common_in(const Graph& g, const Cover& cover, NodeId x, NodeId v,
                        CommunityId c) {
  const auto nx = g.neighbors(x);
  const auto nv = g.neighbors(v);
  std::uint64_t count = 0;
  auto a = nx.begin();
  auto b = nv.begin();
  while (a != nx.end() && b != nv.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      if (cover.contains(c, *a)) ++count;
      ++a;
      ++b;
    }
  }
  return count;
}

void check_live(const Cover& cover, CommunityId c) {
  if (c >= cover.num_slots() || cover.empty(c)) {
    throw std::invalid_argument("community " + std::to_string(c) + " does not exist");
  }
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::kQE ? "qe" : "wocc";
}

std::optional<ObjectiveKind> parse_objective_kind(std::string_view name) {
  if (name == "qe" || name == "QE" || name == "Q_E") return ObjectiveKind::kQE;
  if (name == "wocc" || name == "WOCC") return ObjectiveKind::kWOCC;
  return std::nullopt;
}

double qe_global(const Graph& g, const Cover& cover) {
  const double two_m = 2.0 * static_cast<double>(g.num_edges());
  if (two_m == 0.0) return 0.0;

  std::vector<double> totals;
  std::vector<double> pair_terms, null_terms, inner;
  for (CommunityId c = 0; c < cover.num_slots(); ++c) {
    if (cover.empty(c)) continue;
    pair_terms.clear();
    null_terms.clear();
    for (NodeId i : cover.members(c)) {
      const double oi = static_cast<double>(cover.membership_count(i));
      inner.clear();
      for (NodeId j : g.neighbors(i)) {
        if (cover.contains(c, j)) {
          inner.push_back(1.0 / static_cast<double>(cover.membership_count(j)));
        }
      }
      pair_terms.push_back(ordered_sum(inner) / oi);
      null_terms.push_back(static_cast<double>(g.degree(i)) / oi);
    }
    const double null_sum = ordered_sum(null_terms);
    totals.push_back(ordered_sum(pair_terms) - null_sum * null_sum / two_m);
  }
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (cover.membership_count(v) == 0) {
      const double k = static_cast<double>(g.degree(v));
      totals.push_back(-k * k / two_m);
    }
  }
  return ordered_sum(totals) / two_m;
}

double wcc(const Graph& g, const Cover& cover, NodeId x, CommunityId c) {
  const auto [t_in, vt_in] = internal_counts(g, cover, x, c);
  return wcc_from_counts(t_in, g.triangles_at(x), vt_in, g.triangle_partners(x),
                         cover.size(c) - 1);
}

double wocc_global(const Graph& g, const Cover& cover) {
  const std::size_t n = g.num_nodes();
  if (n == 0 || g.num_edges() == 0) return 0.0;
  std::vector<double> per_node, per_community;
  per_node.reserve(n);
  for (NodeId x = 0; x < n; ++x) {
    const auto comms = cover.memberships(x);
    if (comms.empty() || g.triangles_at(x) == 0) continue;
    per_community.clear();
    for (CommunityId c : comms) per_community.push_back(wcc(g, cover, x, c));
    per_node.push_back(ordered_sum(per_community) / static_cast<double>(comms.size()));
  }
  return ordered_sum(per_node) / static_cast<double>(n);
}

double objective_global(const Graph& g, const Cover& cover, ObjectiveKind kind) {
  return kind == ObjectiveKind::kQE ? qe_global(g, cover) : wocc_global(g, cover);
}

std::vector<CommunityId> neighboring_communities(const Graph& g, const Cover& cover,
                                                 NodeId v) {
  std::vector<CommunityId> out;
  for (NodeId u : g.neighbors(v)) {
    const auto comms = cover.memberships(u);
    out.insert(out.end(), comms.begin(), comms.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double delta_gain(const Graph& g, const Cover& cover, NodeId v, CommunityId c,
                  ObjectiveKind kind) {
  check_live(cover, c);
  if (cover.contains(c, v)) {
    throw std::invalid_argument("node already belongs to community " + std::to_string(c));
  }
  if (cover.membership_count(v) != 0) {
    throw std::invalid_argument("node must be detached from all communities");
  }
  const double m = static_cast<double>(g.num_edges());
  if (m == 0.0) return 0.0;

  if (kind == ObjectiveKind::kQE) {
    // Only pairs (v, j) and (j, v) with j in C are new; v's self term is
    // the same as its singleton term before the move.
    const double kv = static_cast<double>(g.degree(v));
    double sum = 0.0;
    for (NodeId j : cover.members(c)) {
      const double a = g.has_edge(v, j) ? 1.0 : 0.0;
      sum += (a - kv * static_cast<double>(g.degree(j)) / (2.0 * m)) /
             static_cast<double>(cover.membership_count(j));
    }
    return sum / m;
  }

  // WOCC: v's own term appears; each member x of C sees |C \ {x}| grow by
  // one and, if adjacent to v, gains triangles and possibly a partner.
  const std::uint64_t size = cover.size(c);
  std::uint64_t v_triangles2 = 0, v_partners = 0;
  double members_delta = 0.0;
  for (NodeId x : cover.members(c)) {
    const auto [t_old, vt_old] = internal_counts(g, cover, x, c);
    std::uint64_t t_new = t_old, vt_new = vt_old;
    const std::uint32_t s = g.support(x, v);
    if (s > 0) {
      const std::uint64_t cx = common_in(g, cover, x, v, c);
      t_new += cx;
      v_triangles2 += cx;
      ++vt_new;
      ++v_partners;
    }
    const std::uint64_t tx = g.triangles_at(x), px = g.triangle_partners(x);
    const double before = wcc_from_counts(t_old, tx, vt_old, px, size - 1);
    const double after = wcc_from_counts(t_new, tx, vt_new, px, size);
    members_delta +=
        (after - before) / static_cast<double>(cover.membership_count(x));
  }
  const double own = wcc_from_counts(v_triangles2 / 2, g.triangles_at(v), v_partners,
                                     g.triangle_partners(v), size);
  return (own + members_delta) / static_cast<double>(g.num_nodes());
}

GainTracker::GainTracker(const Graph& g, ObjectiveKind kind, Cover cover)
    : graph_(&g), kind_(kind), cover_(std::move(cover)) {
  rebuild();
}

void GainTracker::reset(Cover cover) {
  cover_ = std::move(cover);
  rebuild();
}

void GainTracker::rebuild() {
  caches_.assign(cover_.num_nodes(), {});
  if (kind_ != ObjectiveKind::kWOCC) return;
  for (NodeId x = 0; x < cover_.num_nodes(); ++x) {
    for (CommunityId c : cover_.memberships(x)) {
      const auto [t, vt] = internal_counts(*graph_, cover_, x, c);
      caches_[x].push_back({c, static_cast<std::uint32_t>(t),
                            static_cast<std::uint32_t>(vt)});
    }
  }
}

GainTracker::TriangleCache* GainTracker::cache_of(NodeId x, CommunityId c) {
  auto& list = caches_[x];
  auto it = std::lower_bound(list.begin(), list.end(), c,
                             [](const TriangleCache& e, CommunityId id) {
                               return e.community < id;
                             });
  return (it != list.end() && it->community == c) ? &*it : nullptr;
}

const GainTracker::TriangleCache* GainTracker::cache_of(NodeId x, CommunityId c) const {
  return const_cast<GainTracker*>(this)->cache_of(x, c);
}

std::vector<CommunityId> GainTracker::detach(NodeId v) {
  const auto span = cover_.memberships(v);
  std::vector<CommunityId> old(span.begin(), span.end());
  for (CommunityId c : old) {
    cover_.remove(v, c);
    if (kind_ != ObjectiveKind::kWOCC) continue;
    const auto nv = graph_->neighbors(v);
    const auto sv = graph_->edge_support(v);
    for (std::size_t i = 0; i < nv.size(); ++i) {
      if (sv[i] == 0) continue;
      TriangleCache* e = cache_of(nv[i], c);
      if (e == nullptr) continue;
      e->internal_triangles -=
          static_cast<std::uint32_t>(common_in(*graph_, cover_, nv[i], v, c));
      --e->internal_partners;
    }
  }
  caches_[v].clear();
  return old;
}

void GainTracker::attach(NodeId v, CommunityId c) {
  if (kind_ == ObjectiveKind::kWOCC) {
    std::uint64_t twice_t = 0, vt = 0;
    const auto nv = graph_->neighbors(v);
    const auto sv = graph_->edge_support(v);
    for (std::size_t i = 0; i < nv.size(); ++i) {
      if (sv[i] == 0) continue;
      TriangleCache* e = cache_of(nv[i], c);
      if (e == nullptr) continue;
      const auto cx = common_in(*graph_, cover_, nv[i], v, c);
      e->internal_triangles += static_cast<std::uint32_t>(cx);
      ++e->internal_partners;
      twice_t += cx;
      ++vt;
    }
    auto& list = caches_[v];
    const TriangleCache entry{c, static_cast<std::uint32_t>(twice_t / 2),
                              static_cast<std::uint32_t>(vt)};
    list.insert(std::lower_bound(list.begin(), list.end(), c,
                                 [](const TriangleCache& x, CommunityId id) {
                                   return x.community < id;
                                 }),
                entry);
  }
  cover_.add(v, c);
}

CommunityId GainTracker::attach_singleton(NodeId v, std::optional<CommunityId> reuse) {
  if (reuse && *reuse < cover_.num_slots() && cover_.empty(*reuse)) {
    attach(v, *reuse);
    return *reuse;
  }
  const CommunityId c = cover_.add_community({v});
  if (kind_ == ObjectiveKind::kWOCC) caches_[v].insert(caches_[v].end(), {c, 0, 0});
  return c;
}

GainTable GainTracker::gains(NodeId v) const {
  const Graph& g = *graph_;
  const double m = static_cast<double>(g.num_edges());
  const auto nv = g.neighbors(v);

  // Per neighboring community: adjacency accumulator (QE) or the list of
  // adjacent members with their common-neighbor counts (WOCC).
  struct Adjacent {
    CommunityId c;
    NodeId x;
    std::uint64_t common;
    bool partner;
  };
  std::vector<Adjacent> adjacent;
  const auto sv = g.edge_support(v);
  for (std::size_t i = 0; i < nv.size(); ++i) {
    const NodeId x = nv[i];
    for (CommunityId c : cover_.memberships(x)) {
      const std::uint64_t cx =
          (kind_ == ObjectiveKind::kWOCC && sv[i] > 0) ? common_in(g, cover_, x, v, c) : 0;
      adjacent.push_back({c, x, cx, sv[i] > 0});
    }
  }
  std::sort(adjacent.begin(), adjacent.end(), [](const Adjacent& a, const Adjacent& b) {
    return a.c < b.c || (a.c == b.c && a.x < b.x);
  });

  GainTable table;
  std::size_t i = 0;
  while (i < adjacent.size()) {
    const CommunityId c = adjacent[i].c;
    std::size_t j = i;
    while (j < adjacent.size() && adjacent[j].c == c) ++j;

    double gain = 0.0;
    if (m > 0.0 && kind_ == ObjectiveKind::kQE) {
      const double kv = static_cast<double>(g.degree(v));
      double links = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        links += 1.0 / static_cast<double>(cover_.membership_count(adjacent[k].x));
      }
      double null = 0.0;
      for (NodeId x : cover_.members(c)) {
        null += static_cast<double>(g.degree(x)) /
                static_cast<double>(cover_.membership_count(x));
      }
      gain = (links - kv * null / (2.0 * m)) / m;
    } else if (m > 0.0) {
      const std::uint64_t size = cover_.size(c);
      std::uint64_t twice_t = 0, vt = 0;
      double members_delta = 0.0;
      std::size_t k = i;
      for (NodeId x : cover_.members(c)) {
        const TriangleCache* e = cache_of(x, c);
        std::uint64_t t_new = e->internal_triangles, vt_new = e->internal_partners;
        while (k < j && adjacent[k].x < x) ++k;
        if (k < j && adjacent[k].x == x && adjacent[k].partner) {
          t_new += adjacent[k].common;
          ++vt_new;
          twice_t += adjacent[k].common;
          ++vt;
        }
        const std::uint64_t tx = g.triangles_at(x), px = g.triangle_partners(x);
        const double before =
            wcc_from_counts(e->internal_triangles, tx, e->internal_partners, px, size - 1);
        const double after = wcc_from_counts(t_new, tx, vt_new, px, size);
        members_delta +=
            (after - before) / static_cast<double>(cover_.membership_count(x));
      }
      const double own = wcc_from_counts(twice_t / 2, g.triangles_at(v), vt,
                                         g.triangle_partners(v), size);
      gain = (own + members_delta) / static_cast<double>(g.num_nodes());
    }
    table.emplace_back(c, gain);
    i = j;
  }
  return table;
}

}  // namespace nectar
