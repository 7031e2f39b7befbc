#include <cmath>
#include <sstream>

#include "doctest.h"
#include "eljst/graph.hpp"
#include "eljst/rng.hpp"

using namespace eljst;

namespace {

Vocabulary vocab_of(std::initializer_list<const char*> words) {
  std::vector<std::string> w(words.begin(), words.end());
  return Vocabulary(std::move(w));
}

EmbeddingTable table_of(const Vocabulary& vocab, const std::string& text, Warnings* warnings = nullptr) {
  std::istringstream in(text);
  return parse_embeddings(in, vocab, warnings);
}

using Edges = std::vector<std::pair<Position, Position>>;

AttentionRecord attention(std::size_t n, std::vector<std::vector<double>> heads) {
  return {"doc", n, std::move(heads)};
}

}  // namespace

TEST_CASE("load_embeddings coverage and contract errors") {
  const auto vocab = vocab_of({"good", "claims", "slow", "other"});
  Warnings w;
  const auto table = table_of(vocab,
                              "3 4\n"
                              "good 1 0 0 0\n"
                              "claims 0 1 0 0\n"
                              "unrelated 0 0 1 0\n",
                              &w);
  CHECK(table.dim() == 4);
  CHECK(table.covered() == 2);
  CHECK(table.coverage() == doctest::Approx(0.5));
  CHECK(table.has(0));
  CHECK_FALSE(table.has(2));
  CHECK(w.empty());

  CHECK_THROWS_AS(table_of(vocab, "good 1 0 0 0\nclaims 1 0 0\n"), InputError);
  CHECK_THROWS_AS(table_of(vocab, "good 1 0 nan 0\n"), InputError);

  Warnings zero;
  const auto t2 = table_of(vocab, "good 0 0\nslow 1 1\n", &zero);
  CHECK_FALSE(t2.has(0));
  CHECK(t2.has(2));
  CHECK(zero.size() == 1);
}

TEST_CASE("cosine_similarity") {
  const std::vector<double> e1{1, 0}, e2{0, 1}, d{1, 1}, z{0, 0};
  CHECK(cosine_similarity(e1, e1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(e1, e2) == 0.0);
  CHECK(cosine_similarity(d, e1) == doctest::Approx(0.7071067811865475).epsilon(1e-14));
  CHECK_THROWS_AS(cosine_similarity(e1, z), InputError);
  CHECK_THROWS_AS(cosine_similarity(e1, std::vector<double>{1, 0, 0}), InputError);
}

TEST_CASE("build_similarity_graph threshold examples") {
  const auto vocab = vocab_of({"w1", "w2", "w3"});
  const auto table = table_of(vocab, "w1 1 0\nw2 0.9 0.1\nw3 0 1\n");
  // Hand-computed: cos(v1,v2) = 0.9/sqrt(0.82), cos(v2,v3) = 0.1/sqrt(0.82), cos(v1,v3) = 0.
  CHECK(cosine_similarity(table.vector(0), table.vector(1)) == doctest::Approx(0.993883734673619).epsilon(1e-14));
  CHECK(cosine_similarity(table.vector(1), table.vector(2)) == doctest::Approx(0.11043152607484656).epsilon(1e-14));

  const Document doc{"d", {0, 1, 2}, 1};
  CHECK(build_similarity_graph(doc, table, 0.3).edges() == Edges{{0, 1}});
  CHECK(build_similarity_graph(doc, table, 0.999).edges().empty());
  CHECK(build_similarity_graph(Document{"one", {0}, 1}, table, 0.3).edge_count() == 0);

  // Repeated word at two positions is its own neighbour set; uncovered tokens stay isolated.
  const auto partial = table_of(vocab_of({"a", "b"}), "a 1 2\n");
  const auto g = build_similarity_graph(Document{"r", {0, 1, 0}, 1}, partial, 0.9);
  CHECK(g.edges() == Edges{{0, 2}});
  CHECK(g.neighbors(1).empty());

  CHECK_THROWS_AS(build_similarity_graph(doc, table, 0.0), InputError);
  CHECK_THROWS_AS(build_similarity_graph(doc, table, 1.0), InputError);
}

TEST_CASE("negative cosine never creates an edge") {
  const auto vocab = vocab_of({"a", "b"});
  const auto table = table_of(vocab, "a 1 0\nb -1 0\n");
  CHECK(build_similarity_graph(Document{"n", {0, 1}, 1}, table, 0.01).edge_count() == 0);
}

TEST_CASE("build_attention_graph mutual top rule") {
  SUBCASE("one head, one-sided selection is not an edge") {
    // top(0)=1, top(1)=0, top(2)=0
    const auto rec = attention(3, {{0.1, 0.8, 0.1,  //
                                    0.7, 0.2, 0.1,  //
                                    0.6, 0.3, 0.1}});
    CHECK(build_attention_graph(rec).edges() == Edges{{0, 1}});
  }
  SUBCASE("the two selections may come from different heads") {
    const auto rec = attention(3, {{0.0, 0.9, 0.1,  // head 1: top(0)=1
                                    0.1, 0.0, 0.9,  //         top(1)=2
                                    0.5, 0.5, 0.0},
                                   {0.0, 0.1, 0.9,  // head 2: top(0)=2
                                    0.9, 0.0, 0.1,  //         top(1)=0
                                    0.1, 0.9, 0.0}}); //        top(2)=1
    // 0-1: head1 top(0)=1, head2 top(1)=0 -> edge. 1-2: head1 top(1)=2, head2 top(2)=1 -> edge.
    // 0-2: head2 top(0)=2, head1 top(2)=0 (tie 0.5/0.5 -> lowest index) -> edge.
    CHECK(build_attention_graph(rec).edges() == Edges{{0, 1}, {0, 2}, {1, 2}});
  }
  SUBCASE("self attention is ignored") {
    const auto rec = attention(2, {{0.9, 0.1, 0.2, 0.8}});
    CHECK(build_attention_graph(rec).edges() == Edges{{0, 1}});
  }
  SUBCASE("single token") { CHECK(build_attention_graph(attention(1, {{1.0}})).edge_count() == 0); }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_attention_graph(attention(2, {})), InputError);
    CHECK_THROWS_AS(build_attention_graph(attention(2, {{1.0, 0.0, 0.5}})), InputError);
  }
  SUBCASE("averaged heads") {
    const auto rec = attention(3, {{0.0, 0.9, 0.1, 0.1, 0.0, 0.9, 0.5, 0.5, 0.0},
                                   {0.0, 0.1, 0.9, 0.9, 0.0, 0.1, 0.1, 0.9, 0.0}});
    // average: row0 (0, .5, .5) -> 1; row1 (.5, 0, .5) -> 0; row2 (.3, .7, 0) -> 1
    CHECK(build_attention_graph(rec, AttentionMode::kAveragedHeads).edges() == Edges{{0, 1}});
  }
}

TEST_CASE("parse_attention validates records") {
  std::istringstream ok("{\"id\":\"a\",\"heads\":[[[0.25,0.75],[1,0]],[[0.5,0.5],[0.5,0.5]]]}\n");
  const auto recs = parse_attention(ok);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].size == 2);
  CHECK(recs[0].heads.size() == 2);
  CHECK(recs[0].weight(0, 0, 1) == 0.75);

  std::istringstream not_stochastic("{\"id\":\"a\",\"heads\":[[[0.2,0.2],[1,0]]]}\n");
  CHECK_THROWS_AS(parse_attention(not_stochastic), InputError);
  std::istringstream not_square("{\"id\":\"a\",\"heads\":[[[0.5,0.5]]]}\n");
  CHECK_THROWS_AS(parse_attention(not_square), InputError);
  std::istringstream no_heads("{\"id\":\"a\",\"heads\":[]}\n");
  CHECK_THROWS_AS(parse_attention(no_heads), InputError);
}

TEST_CASE("edge list parsing") {
  Corpus c;
  c.vocabulary = vocab_of({"x", "y"});
  c.num_labels = 1;
  c.label_names = {"1"};
  c.documents = {{"a", {0, 1}, 1}, {"b", {0, 1, 0}, 1}};

  std::istringstream one("a 0 1\n");
  auto graphs = parse_edge_list(one, c);
  CHECK(graphs[0].edges() == Edges{{0, 1}});
  CHECK(graphs[1].edge_count() == 0);

  std::istringstream self("a 0 0\n");
  CHECK_THROWS_WITH_AS(parse_edge_list(self, c), doctest::Contains("self-loop"), InputError);
  std::istringstream range("a 0 2\n");
  CHECK_THROWS_WITH_AS(parse_edge_list(range, c), doctest::Contains("out of range"), InputError);
  std::istringstream unknown("zz 0 1\n");
  CHECK_THROWS_WITH_AS(parse_edge_list(unknown, c), doctest::Contains("unknown doc_id"), InputError);

  std::istringstream empty("");
  for (const auto& g : parse_edge_list(empty, c)) CHECK(g.edge_count() == 0);
}

TEST_CASE("DocumentGraph rejects bad edges and dedupes") {
  CHECK_THROWS_AS(DocumentGraph("d", 2, {{1, 1}}), InputError);
  CHECK_THROWS_AS(DocumentGraph("d", 2, {{0, 2}}), InputError);
  const DocumentGraph g("d", 3, {{1, 0}, {0, 1}, {2, 1}});
  CHECK(g.edges() == Edges{{0, 1}, {1, 2}});
  CHECK(g.neighbors(1) == std::vector<Position>{0, 2});
  CHECK(g.has_edge(2, 1));
}

TEST_CASE("graph_stats") {
  const std::vector<DocumentGraph> graphs{DocumentGraph("a", 4, {{0, 1}, {2, 3}}),
                                          DocumentGraph("b", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}})};
  const auto s = graph_stats(graphs);
  CHECK(s.mean_edges == 3.0);
  CHECK(s.mean_edges_rounded == 3);
  CHECK(s.max_edges == 4);
  CHECK(s.histogram.at(2) == 1);
  CHECK(s.histogram.at(4) == 1);

  const auto e = graph_stats({DocumentGraph("a", 2), DocumentGraph("b", 1)});
  CHECK(e.mean_edges == 0.0);
  CHECK(e.max_edges == 0);
  CHECK_THROWS_AS(graph_stats({}), InputError);
}

TEST_CASE("attention graph is invariant to positive row rescaling") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6), heads = 1 + rng.below(3);
    AttentionRecord rec{"r", n, {}};
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<double> m(n * n);
      for (auto& x : m) x = rng.uniform();
      rec.heads.push_back(m);
    }
    AttentionRecord scaled = rec;
    for (auto& m : scaled.heads)
      for (std::size_t i = 0; i < n; ++i) {
        const double s = 0.1 + 10 * rng.uniform();
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] *= s;
      }
    CHECK(build_attention_graph(rec) == build_attention_graph(scaled));
  }
}
