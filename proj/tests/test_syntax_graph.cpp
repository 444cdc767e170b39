#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "eegcn/corpus.hpp"
#include "eegcn/syntax_graph.hpp"
#include "eegcn/util.hpp"

using namespace eegcn;
using corpus::DependencyGraph;

namespace {

DependencyGraph make_graph(std::size_t n, std::vector<corpus::DependencyEdge> edges) {
  DependencyGraph g;
  g.n = n;
  g.edges = std::move(edges);
  std::vector<bool> has_head(n + 1, false);
  for (const auto& e : g.edges) has_head[e.dependent] = true;
  for (std::size_t i = 1; i <= n; ++i)
    if (!has_head[i]) g.roots.push_back(i);
  return g;
}

// Random tree: node i > 1 attaches to a random earlier node, then ids are
// permuted so heads are not always to the left.
DependencyGraph random_tree(Rng& rng, std::size_t n, const std::vector<std::string>& labels) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i + 1;
  rng.shuffle(perm);
  std::vector<corpus::DependencyEdge> edges;
  for (std::size_t i = 1; i < n; ++i) {
    edges.push_back({perm[rng.below(i)], perm[i], labels[rng.below(labels.size())]});
  }
  return make_graph(n, edges);
}

graph::SdiTable toy_table() {
  std::vector<DependencyGraph> corpus{make_graph(3, {{2, 1, "nsubj"}, {2, 3, "dobj"}}),
                                      make_graph(3, {{3, 1, "nsubj"}, {1, 2, "amod"}})};
  return graph::compute_sdi_table(corpus);
}

}  // namespace

TEST_CASE("sdi table from the toy corpus") {
  auto t = toy_table();
  CHECK(t.total() == 4);
  CHECK(t.sdi("nsubj") == 0.5);
  CHECK(t.sdi("amod") == 0.25);
  CHECK(t.sdi("dobj") == 0.25);
  double sum = 0.0;
  for (const auto& [label, count] : t.counts()) sum += t.sdi(label);
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("sdi table edge cases") {
  std::vector<DependencyGraph> single{make_graph(2, {{1, 2, "amod"}})};
  CHECK(graph::compute_sdi_table(single).sdi("amod") == 1.0);

  std::vector<DependencyGraph> none;
  CHECK_THROWS_AS(graph::compute_sdi_table(none), std::invalid_argument);
  std::vector<DependencyGraph> edgeless{make_graph(1, {})};
  CHECK_THROWS_AS(graph::compute_sdi_table(edgeless), std::invalid_argument);

  graph::SdiTable big;
  big.add("nsubj", 60);
  big.add("amod", 40);
  CHECK(big.sdi("never-seen") == 0.01);
}

TEST_CASE("sdi counts are additive over concatenated corpora") {
  Rng rng(21);
  const std::vector<std::string> labels{"nsubj", "amod", "det", "obj", "conj"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DependencyGraph> a, b;
    for (int i = 0; i < 5; ++i) a.push_back(random_tree(rng, 2 + rng.below(6), labels));
    for (int i = 0; i < 4; ++i) b.push_back(random_tree(rng, 2 + rng.below(6), labels));
    auto joined = a;
    joined.insert(joined.end(), b.begin(), b.end());
    auto ta = graph::compute_sdi_table(a);
    auto tb = graph::compute_sdi_table(b);
    auto tj = graph::compute_sdi_table(joined);
    for (const auto& l : labels) CHECK(tj.count(l) == ta.count(l) + tb.count(l));
    CHECK(tj.total() == ta.total() + tb.total());
    ta.merge(tb);
    CHECK(ta == tj);
  }
}

TEST_CASE("sdi table json round trip") {
  auto t = toy_table();
  auto j = t.to_json();
  CHECK(j["__total"] == 4);
  CHECK(j["nsubj"] == 2);
  CHECK(graph::SdiTable::from_json(j) == t);
  j["__total"] = 5;
  CHECK_THROWS(graph::SdiTable::from_json(j));
}

TEST_CASE("binary adjacency") {
  auto a = graph::binary_adjacency(make_graph(2, {{1, 2, "x"}}));
  CHECK(a.values == std::vector<double>{1, 1, 0, 1});

  auto one = graph::binary_adjacency(make_graph(1, {}));
  CHECK(one.values == std::vector<double>{1});

  auto chain = graph::binary_adjacency(make_graph(3, {{1, 2, "x"}, {2, 3, "y"}}));
  std::size_t off = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) CHECK(chain(i, j) == 1.0);
      else if (chain(i, j) != 0.0) ++off;
    }
  CHECK(off == 2);
  CHECK(chain.degree(0) == 1);
  CHECK(chain.degree(2) == 0);
  CHECK(chain.transposed()(1, 0) == 1.0);
}

TEST_CASE("sdi adjacency") {
  auto t = toy_table();
  auto g = make_graph(2, {{1, 2, "nsubj"}});
  auto a = graph::sdi_adjacency(g, t);
  CHECK(a.values == std::vector<double>{1, 0.5, 0, 1});
  CHECK(a.mode == graph::AdjacencyMode::sdi);
  CHECK(a.unseen_labels == 0);

  graph::SdiTable hundred;
  hundred.add("nsubj", 100);
  auto unseen = graph::sdi_adjacency(make_graph(2, {{2, 1, "vocative"}}), hundred);
  CHECK(unseen(1, 0) == 0.01);
  CHECK(unseen.unseen_labels == 1);
  // the table itself is never extended
  CHECK_FALSE(hundred.contains("vocative"));

  auto id = graph::identity_adjacency(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(id(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("sdi and binary adjacency share a nonzero pattern") {
  Rng rng(77);
  const std::vector<std::string> labels{"nsubj", "amod", "det", "obj", "conj", "rare"};
  graph::SdiTable table;
  table.add("nsubj", 7);
  table.add("amod", 3);
  table.add("det", 11);
  table.add("obj", 1);
  table.add("conj", 2);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_tree(rng, 1 + rng.below(12), labels);
    auto b = graph::binary_adjacency(g);
    auto s = graph::sdi_adjacency(g, table);
    REQUIRE(b.values.size() == s.values.size());
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      CHECK((b.values[k] != 0.0) == (s.values[k] != 0.0));
      CHECK(s.values[k] <= 1.0);
    }
    for (std::size_t i = 0; i < g.n; ++i) CHECK(s(i, i) == 1.0);
    // deterministic in (graph, table)
    CHECK(graph::sdi_adjacency(g, table).values == s.values);
  }
}
