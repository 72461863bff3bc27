#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ged/graph.hpp"
#include "ged/io.hpp"
#include "ged/synthetic.hpp"

using namespace ged;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ged_graph_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("make_graph canonicalizes edge order") {
  Graph g = make_graph({{0.0}, {1.0}, {2.0}}, {{2, 0}, {2, 1}});
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 2}, {1, 2}});
}

TEST_CASE("make_graph rejects bad input") {
  CHECK_THROWS_AS(make_graph({{0.0}, {1.0}}, {{0, 2}}), Error);
  CHECK_THROWS_AS(make_graph({{0.0}, {1.0}}, {{0, 0}}), Error);       // self loop
  CHECK_THROWS_AS(make_graph({{0.0}, {1.0, 2.0}}, {}), Error);        // ragged attrs
  CHECK_THROWS_AS(make_graph({{0.0}, {1.0}}, {{0, 1}, {1, 0}}), Error);  // duplicate
}

TEST_CASE("make_graph dedupe drops self loops and duplicates") {
  Graph g = make_graph({{0.0}, {1.0}}, {{0, 1}, {1, 0}, {1, 1}}, {}, "", true);
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("permutation roundtrip preserves the graph") {
  Graph g = make_graph({{0.0, 0.0}, {1.0, 0.0}, {0.5, 1.0}, {0.2, 0.2}},
                       {{0, 1}, {1, 2}, {0, 3}});
  NodePermutation p = random_permutation(4, 99);
  Graph back = permute(permute(g, p), inverse(p));
  CHECK(back == g);
}

TEST_CASE("neighborhood is sorted") {
  Graph g = make_graph({{0.0}, {1.0}, {2.0}, {3.0}}, {{0, 3}, {0, 1}, {0, 2}});
  CHECK(neighborhood(g, 0) == std::vector<int>{1, 2, 3});
  CHECK(neighborhood(g, 1) == std::vector<int>{0});
}

TEST_CASE("normalize_positions maps into the unit square") {
  Graph g = make_graph({{2.0, 10.0}, {4.0, 10.0}, {3.0, 10.0}}, {{0, 1}});
  Graph n = normalize_positions(g);
  CHECK(n.nodes[0] == std::vector<double>{0.0, 0.5});  // degenerate y axis
  CHECK(n.nodes[1] == std::vector<double>{1.0, 0.5});
  CHECK(n.nodes[2] == std::vector<double>{0.5, 0.5});
}

TEST_CASE("json graph roundtrip") {
  Graph g = make_graph({{0.1, 0.2}, {0.3, 0.4}}, {{0, 1}}, {{1.5}}, "g1");
  Graph back = parse_graph_json(serialize_graph_json(g));
  CHECK(back == g);
  CHECK(back.id == "g1");
}

TEST_CASE("json parser rejects ragged node attributes") {
  CHECK_THROWS_AS(parse_graph_json(R"({"nodes": [[1.0], [1.0, 2.0]], "edges": []})"), Error);
}

TEST_CASE("gxl parsing") {
  const char* text = R"(<?xml version="1.0"?>
<gxl><graph id="word1" edgeids="false" edgemode="undirected">
  <node id="_0"><attr name="x"><float>0.25</float></attr><attr name="y"><float>0.5</float></attr></node>
  <node id="_1"><attr name="x"><float>0.75</float></attr><attr name="y"><float>0.5</float></attr></node>
  <edge from="_0" to="_1"/>
</graph></gxl>)";
  Graph g = parse_gxl(text);
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.nodes[0] == std::vector<double>{0.25, 0.5});
  CHECK(g.id == "word1");
}

TEST_CASE("gxl edge to unknown node is an integrity error") {
  const char* text = R"(<gxl><graph id="g">
  <node id="_0"><attr name="x"><float>0</float></attr></node>
  <edge from="_0" to="_9"/>
</graph></gxl>)";
  try {
    parse_gxl(text);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Integrity);
  }
}

TEST_CASE("tsv manifest resolves paths relative to itself") {
  auto dir = temp_dir();
  Graph g = make_graph({{0.0, 0.0}, {1.0, 1.0}}, {{0, 1}});
  write(dir / "a.json", serialize_graph_json(g));
  write(dir / "list.tsv", "# comment\na.json\thello\n\na.json\tworld\n");
  auto set = load_manifest(dir.string() + "/list.tsv");
  REQUIRE(set.size() == 2);
  CHECK(set[0].label == "hello");
  CHECK(set[1].label == "world");
  CHECK(set[0].graph == g);
}

TEST_CASE("missing manifest file raises an io error") {
  try {
    load_manifest("/nonexistent/path.tsv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("synthetic dataset is deterministic and well formed") {
  SyntheticConfig cfg;
  cfg.classes = 3;
  cfg.graphs_per_class = 10;
  cfg.seed = 5;
  DatasetSplit a = generate_synthetic_dataset(cfg);
  DatasetSplit b = generate_synthetic_dataset(cfg);
  CHECK(a.train.size() == 18);  // 60/20/20 of 3 x 10
  CHECK(a.validation.size() == 6);
  CHECK(a.test.size() == 6);
  CHECK(a.keywords.size() == 3);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].graph == b.train[i].graph);
    CHECK(a.train[i].label == b.train[i].label);
  }
  for (const auto& lg : a.train) {
    CHECK(lg.graph.node_count() >= 3);
    CHECK(lg.graph.attr_dim() == 2);
  }
  DatasetSplit c = generate_synthetic_dataset([&] {
    SyntheticConfig other = cfg;
    other.seed = 6;
    return other;
  }());
  CHECK(a.train[0].graph != c.train[0].graph);
}
