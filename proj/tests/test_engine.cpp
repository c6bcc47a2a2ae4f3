#include "doctest.h"

#include "fixtures.hpp"
#include "nectar/dataset.hpp"
#include "nectar/engine.hpp"
#include "nectar/metrics.hpp"
#include "nectar/objectives.hpp"
#include "nectar/rng.hpp"
#include "oracles.hpp"

using namespace nectar;
using Sets = std::vector<std::vector<NodeId>>;

TEST_SUITE("engine") {

TEST_CASE("config validation") {
  EngineConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta = 0.99;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("objective selection") {
  EngineConfig c;
  c.mode = ObjectiveMode::kThreshold;
  CHECK(select_objective(fixture::graph(3, {{1, 2}, {2, 3}}), c, nullptr) == ObjectiveKind::kQE);
  // K10: 120 triangles over 10 nodes.
  CHECK(select_objective(fixture::clique(10), c, nullptr) == ObjectiveKind::kWOCC);
  // K7: 35 / 7 = 5 sits on the boundary.
  CHECK(select_objective(fixture::clique(7), c, nullptr) == ObjectiveKind::kWOCC);
  CHECK(select_objective(fixture::clique(6), c, nullptr) == ObjectiveKind::kQE);
  c.mode = ObjectiveMode::kForceWOCC;
  CHECK(select_objective(fixture::graph(2, {{1, 2}}), c, nullptr) == ObjectiveKind::kWOCC);
  c.mode = ObjectiveMode::kForceQE;
  CHECK(select_objective(fixture::clique(10), c, nullptr) == ObjectiveKind::kQE);
  c.mode = ObjectiveMode::kModel;
  CHECK_THROWS_AS(select_objective(fixture::clique(3), c, nullptr), std::invalid_argument);
}

TEST_CASE("initial cover") {
  SUBCASE("empty graph") {
    CHECK(initialize_cover(Graph::from_edges(0, {})).num_communities() == 0);
  }
  SUBCASE("K3") {
    CHECK(initialize_cover(fixture::clique(3)).communities() == Sets{{0, 1, 2}});
  }
  SUBCASE("path") {
    CHECK(initialize_cover(fixture::graph(3, {{1, 2}, {2, 3}})).communities() == Sets{{0, 1, 2}});
  }
  SUBCASE("two cliques") {
    // Bridge endpoints score lowest and never seed.
    CHECK(initialize_cover(fixture::two_k4()).communities() ==
          Sets{{0, 1, 2, 3}, {4, 5, 6, 7}});
  }
  SUBCASE("seed order") {
    // Node 1 outscores node 3 and claims 2 and 3; node 4 then claims 5.
    const Graph g = fixture::graph(5, {{1, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}});
    CHECK(initialize_cover(g).communities() == Sets{{0, 1, 2}, {3, 4}});
  }
  SUBCASE("random graphs give partitions") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t n = 1 + rng.uniform(40);
      const Graph g = oracle::random_graph(n, rng.uniform_real(0.0, 0.4), rng);
      const Cover c = initialize_cover(g);
      for (NodeId v = 0; v < n; ++v) CHECK(c.membership_count(v) == 1);
    }
  }
}

TEST_CASE("merge rule") {
  SUBCASE("ratio exactly alpha") {
    const Cover c(6, {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 5}});
    auto [merged, reduced] = merge_cover(c, 0.8);
    CHECK(reduced);
    CHECK(merged.communities() == Sets{{0, 1, 2, 3, 4, 5}});
    auto [kept, changed] = merge_cover(c, 0.81);
    CHECK_FALSE(changed);
    CHECK(kept.communities() == c.communities());
  }
  SUBCASE("disjoint") {
    const Cover c(4, {{0, 1}, {2, 3}});
    CHECK_FALSE(merge_cover(c, 0.1).second);
  }
  SUBCASE("subset merges at alpha 1") {
    const Cover c(5, {{0, 1, 2, 3, 4}, {1, 2}});
    auto [merged, reduced] = merge_cover(c, 1.0);
    CHECK(reduced);
    CHECK(merged.communities() == Sets{{0, 1, 2, 3, 4}});
  }
  SUBCASE("cascade takes the lower slot") {
    const Cover c(6, {{3, 4, 5}, {0, 1}, {0, 1, 2}});
    auto [merged, reduced] = merge_cover(c, 1.0);
    CHECK(reduced);
    CHECK(merged.communities() == Sets{{3, 4, 5}, {0, 1, 2}});
  }
  SUBCASE("idempotent and leaves no qualifying pair") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.uniform(25);
      const double alpha = rng.uniform_real(0.3, 1.0);
      const Cover c(n, oracle::random_sets(n, 1 + rng.uniform(8), 0.3, rng));
      const Cover once = merge_cover(c, alpha).first;
      auto [twice, changed] = merge_cover(once, alpha);
      CHECK_FALSE(changed);
      CHECK(twice.communities() == once.communities());
      const auto sets = once.communities();
      for (std::size_t a = 0; a < sets.size(); ++a)
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
          double shared = 0;
          for (NodeId v : sets[a]) shared += std::count(sets[b].begin(), sets[b].end(), v);
          CHECK(shared / std::min(sets[a].size(), sets[b].size()) < alpha);
        }
    }
  }
}

TEST_CASE("candidate selection") {
  CHECK(select_candidates({}, 1.1).empty());
  CHECK(select_candidates({{0, -0.1}, {1, 0.0}}, 2.0).empty());
  CHECK(select_candidates({{0, 0.5}, {1, 0.3}, {2, 0.46}}, 1.1) == std::vector<CommunityId>{0, 2});
  CHECK(select_candidates({{0, 0.5}, {1, 0.25}}, 2.0) == std::vector<CommunityId>{0, 1});
  CHECK(select_candidates({{0, 0.5}, {1, -0.25}}, 2.0) == std::vector<CommunityId>{0});
}

TEST_CASE("two cliques with a bridge") {
  const Graph g = fixture::two_k4();
  EngineConfig c;
  c.mode = ObjectiveMode::kForceQE;
  c.beta = 1.01;
  SUBCASE("tight beta recovers the cliques") {
    const RunResult r = run(g, c);
    CHECK(r.converged);
    CHECK(r.objective_chosen == ObjectiveKind::kQE);
    CHECK(r.cover.communities() == Sets{{0, 1, 2, 3}, {4, 5, 6, 7}});
    CHECK(r.objective_value == doctest::Approx(qe_global(g, r.cover)));
  }
  SUBCASE("loose beta admits candidates per the rule") {
    const Cover cliques(8, {{0, 1, 2, 3}, {4, 5, 6, 7}});
    GainTracker tracker(g, ObjectiveKind::kQE, cliques);
    tracker.detach(3);
    const GainTable gains = tracker.gains(3);
    REQUIRE(gains.size() == 2);
    const bool both = gains[1].second * 2.0 >= gains[0].second && gains[1].second > 0;
    CHECK(select_candidates(gains, 2.0).size() == (both ? 2u : 1u));
    c.beta = 2.0;
    const RunResult r = run(g, c);
    for (NodeId v = 0; v < 8; ++v) CHECK(r.cover.membership_count(v) >= 1);
  }
}

TEST_CASE("single iteration budget") {
  EngineConfig c;
  c.max_iter = 1;
  Rng rng(6);
  const Graph g = oracle::random_graph(30, 0.2, rng);
  const RunResult r = run(g, c);
  CHECK(r.iterations_used == 1);
  const RunResult again = run(g, c);
  CHECK(again.converged == r.converged);
}

TEST_CASE("runs are deterministic per seed") {
  const auto net = generate_test_network(80, 4, 0.1, 0.5, 0.03, 12);
  EngineConfig c;
  c.rng_seed = 77;
  for (auto mode : {ObjectiveMode::kForceQE, ObjectiveMode::kForceWOCC}) {
    c.mode = mode;
    const RunResult a = run(net.graph, c);
    const RunResult b = run(net.graph, c);
    CHECK(a.cover.communities() == b.cover.communities());
    CHECK(a.iterations_used == b.iterations_used);
    CHECK(a.objective_value == b.objective_value);
  }
}

TEST_CASE("every node ends up covered") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + rng.uniform(40);
    const Graph g = oracle::random_graph(n, 0.2, rng);
    EngineConfig c;
    c.mode = trial % 2 ? ObjectiveMode::kForceQE : ObjectiveMode::kForceWOCC;
    c.rng_seed = trial;
    const RunResult r = run(g, c);
    for (NodeId v = 0; v < n; ++v) CHECK(r.cover.membership_count(v) >= 1);
    CHECK(r.iterations_used <= c.max_iter);
  }
}

TEST_CASE("planted network is recovered") {
  const auto net = generate_test_network(60, 3, 0.1, 0.5, 0.02, 7);
  EngineConfig c;
  c.mode = ObjectiveMode::kForceQE;
  const RunResult r = run(net.graph, c);
  CHECK(average_f1(r.cover, net.truth) >= 0.9);
}

}
