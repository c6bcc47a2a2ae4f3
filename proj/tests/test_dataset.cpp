#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "nectar/dataset.hpp"

using namespace nectar;
using Sets = std::vector<std::vector<NodeId>>;

TEST_SUITE("dataset") {

TEST_CASE("tag grid") {
  LfrTags t{1000, 20, 100, 0.25, 3, 0.2, false};
  CHECK_NOTHROW(validate_tags(t));
  t.k = 15;
  CHECK_THROWS_AS(validate_tags(t), std::invalid_argument);
  t.custom = true;
  CHECK_NOTHROW(validate_tags(t));
  t = {1000, 20, 100, 0.25, 11, 0.2, false};
  CHECK_THROWS_AS(validate_tags(t), std::invalid_argument);
}

TEST_CASE("beta grid") {
  CHECK_NOTHROW(validate_betas(kDefaultBetas));
  CHECK_THROWS_AS(validate_betas(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(validate_betas(std::vector<double>{1.1, 0.9}), std::invalid_argument);
}

TEST_CASE("labels and weights") {
  const MetricLabel a = make_label(0.5, 0.4);
  CHECK(a.label == ObjectiveKind::kWOCC);
  CHECK(a.weight == doctest::Approx(0.2));
  const MetricLabel tie = make_label(0.7, 0.7);
  CHECK(tie.label == ObjectiveKind::kQE);
  CHECK(tie.weight == 0.0);
  const MetricLabel q = make_label(0.3, 0.6);
  CHECK(q.label == ObjectiveKind::kQE);
  CHECK(q.weight == doctest::Approx(0.5));
  CHECK(make_label(0.0, 0.0).weight == 0.0);
  const MetricLabel neg = make_label(-0.2, 0.4);
  CHECK(neg.weight == doctest::Approx(1.0));
  CHECK(neg.best_wocc == -0.2);
}

TEST_CASE("manifest round trip") {
  fixture::TempDir dir;
  std::vector<NetworkRecord> records{
      {"a", dir / "a.edges", dir / "a.cmty", std::nullopt},
      {"b", dir / "b.edges", dir / "b.cmty", LfrTags{1000, 20, 100, 0.25, 3, 0.2, false}},
      {"c", dir / "c.edges", dir / "c.cmty", LfrTags{90, 7, 12, 0.2, 2, 0.03, true}}};
  write_manifest(dir / "m.tsv", records, "# header\n");
  const auto back = read_manifest(dir / "m.tsv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == records[i].id);
    CHECK(std::filesystem::equivalent(back[i].graph_path.parent_path(), dir.path()));
    CHECK(back[i].graph_path.filename() == records[i].graph_path.filename());
    CHECK(back[i].tags == records[i].tags);
  }
}

TEST_CASE("manifest errors") {
  fixture::TempDir dir;
  fixture::write_file(dir / "m.tsv", "id\tgraph\ttruth\nx\tonly-two\n");
  CHECK_THROWS_AS(read_manifest(dir / "m.tsv"), std::invalid_argument);
  fixture::write_file(dir / "m.tsv",
                      "id\tgraph\ttruth\tn\tk\tmaxK\tOn\tOm\tmut\nx\tg\tt\t100\t7\t50\t0.1\t2\t0.1\n");
  CHECK_THROWS_AS(read_manifest(dir / "m.tsv"), std::invalid_argument);
  CHECK_THROWS_AS(read_manifest(dir / "absent.tsv"), IoError);
}

TEST_CASE("planted generator") {
  SUBCASE("disjoint blocks") {
    const auto net = generate_test_network(60, 3, 0.0, 0.5, 0.02, 1);
    for (NodeId v = 0; v < 60; ++v) CHECK(net.truth.membership_count(v) == 1);
    CHECK(net.truth.num_communities() == 3);
  }
  SUBCASE("no cross edges without p_out") {
    const auto net = generate_test_network(90, 3, 0.1, 0.4, 0.0, 2);
    std::size_t overlapping = 0;
    for (NodeId v = 0; v < 90; ++v) overlapping += net.truth.membership_count(v) == 2;
    CHECK(overlapping == 9);
    for (NodeId u = 0; u < 90; ++u)
      for (NodeId v : net.graph.neighbors(u)) {
        bool share = false;
        for (CommunityId c : net.truth.memberships(u)) share = share || net.truth.contains(c, v);
        CHECK(share);
      }
  }
  SUBCASE("deterministic per seed") {
    const auto a = generate_test_network(50, 2, 0.1, 0.6, 0.05, 9);
    const auto b = generate_test_network(50, 2, 0.1, 0.6, 0.05, 9);
    const auto c = generate_test_network(50, 2, 0.1, 0.6, 0.05, 10);
    CHECK(a.truth.communities() == b.truth.communities());
    CHECK(a.graph.num_edges() == b.graph.num_edges());
    for (NodeId v = 0; v < 50; ++v) {
      CHECK(std::equal(a.graph.neighbors(v).begin(), a.graph.neighbors(v).end(),
                       b.graph.neighbors(v).begin(), b.graph.neighbors(v).end()));
    }
    CHECK(a.graph.num_edges() != c.graph.num_edges());
  }
  SUBCASE("no isolated nodes") {
    const auto net = generate_test_network(100, 7, 0.0, 0.1, 0.0, 3);
    for (NodeId v = 0; v < 100; ++v) CHECK(net.graph.degree(v) >= 1);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(generate_test_network(60, 3, 0.0, 0.2, 0.3, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_test_network(60, 3, 1.0, 0.5, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_test_network(8, 3, 0.0, 0.5, 0.1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_test_network(30, 1, 0.1, 0.5, 0.1, 1), std::invalid_argument);
  }
}

TEST_CASE("low-overlap two-block network prefers modularity") {
  const auto net = generate_test_network(80, 2, 0.05, 0.3, 0.02, 5);
  const NetworkRecord rec{"fixture", "", "", std::nullopt};
  const LabeledNetwork l = label_network(rec, net.graph, net.truth, kDefaultBetas);
  CHECK(l.per_metric[3].label == ObjectiveKind::kQE);
  CHECK(l.num_nodes == 80);
}

TEST_CASE("dataset building") {
  fixture::TempDir dir;
  SUBCASE("empty manifest") {
    write_manifest(dir / "m.tsv", {});
    const auto rows = build_rows(read_manifest(dir / "m.tsv"), kDefaultBetas, {});
    CHECK(rows.empty());
    write_dataset(dir / "d.tsv", rows);
    const std::string text = fixture::read_file(dir / "d.tsv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(text.rfind("id\t", 0) == 0);
  }
  SUBCASE("toy manifest") {
    const auto manifest = write_toy_corpus(dir / "toy", 4, 3);
    auto records = read_manifest(manifest);
    records.push_back({"broken", dir / "none.edges", dir / "none.cmty", std::nullopt});
    BuildOptions options;
    options.split_threshold = 90;
    const auto rows = build_rows(records, kDefaultBetas, options);
    REQUIRE(rows.size() == 20);
    for (std::size_t i = 0; i < 16; ++i) {
      const auto& r = rows[i];
      CHECK(r.ok());
      CHECK(r.metric == kAllMetrics[i % 4]);
      const MetricLabel again = make_label(r.result.best_wocc, r.result.best_qe);
      CHECK(std::abs(again.weight - r.result.weight) <= 1e-12);
      CHECK(again.label == r.result.label);
      CHECK(r.result.weight >= 0.0);
      CHECK(r.result.weight <= 1.0);
      CHECK(r.split == (r.num_nodes <= 90 ? "train" : "test"));
    }
    for (std::size_t i = 16; i < 20; ++i) CHECK(rows[i].status.rfind("failed: ", 0) == 0);

    write_dataset(dir / "d.tsv", rows, "# h\n");
    const auto back = read_dataset(dir / "d.tsv");
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].id == rows[i].id);
      CHECK(back[i].metric == rows[i].metric);
      CHECK(back[i].result.label == rows[i].result.label);
      CHECK(back[i].features.gcc == doctest::Approx(rows[i].features.gcc).epsilon(1e-6));
      CHECK(back[i].status == rows[i].status);
    }
    CHECK(to_samples(rows, MetricKind::kOmega).size() == 4);
    CHECK(to_samples(rows, MetricKind::kOmega, "train").size() +
              to_samples(rows, MetricKind::kOmega, "test").size() == 4);
  }
}

TEST_CASE("pruning") {
  const Graph g = fixture::graph(6, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}});
  LabelledCommunities truth{{"1", "2", "3", "9", "5"}, {{0, 1}, {1, 2, 3}, {4}}};
  SUBCASE("all communities") {
    const PruneResult r = prune(g, truth);
    CHECK(r.unknown_labels == 1);
    CHECK(r.dropped_nodes == 2);
    CHECK(r.graph.num_nodes() == 4);
    CHECK(r.graph.num_edges() == 2);
    CHECK(r.truth.num_communities() == 3);
  }
  SUBCASE("top communities") {
    const PruneResult r = prune(g, truth, 1);
    CHECK(r.graph.num_nodes() == 2);
    CHECK(r.truth.communities() == Sets{{0, 1}});
  }
}

}
