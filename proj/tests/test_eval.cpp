#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "eljst/eval.hpp"
#include "eljst/rng.hpp"
#include "support/synthetic.hpp"

using namespace eljst;

namespace {

Corpus corpus_of(std::vector<std::vector<WordId>> docs, std::size_t V) {
  Corpus c;
  c.vocabulary = synthetic::numbered_vocabulary(V);
  c.num_labels = 1;
  c.label_names = {"1"};
  for (std::size_t d = 0; d < docs.size(); ++d) c.documents.push_back({"d" + std::to_string(d), docs[d], 1});
  return c;
}

// Entropy form of the JS divergence, kept apart from the KL form in the library.
double js_entropy_form(const std::vector<double>& p, const std::vector<double>& q) {
  auto h = [](const std::vector<double>& x) {
    double s = 0;
    for (double v : x)
      if (v > 0) s -= v * std::log(v);
    return s;
  };
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return h(m) - 0.5 * (h(p) + h(q));
}

}  // namespace

TEST_CASE("top_words ordering and tie-break") {
  const std::vector<double> phi{0.2, 0.5, 0.3};
  const PhiView view{phi, 1, 1, 3};
  auto top = top_words(view, 0, 0, 2);
  CHECK(top[0].word == 1);
  CHECK(top[1].word == 2);
  const std::vector<double> uniform(4, 0.25);
  top = top_words(PhiView{uniform, 1, 1, 4}, 0, 0, 4);
  for (WordId i = 0; i < 4; ++i) CHECK(top[i].word == i);
  CHECK_THROWS_AS(top_words(view, 0, 0, 4), InputError);
}

TEST_CASE("npmi reference points") {
  CHECK(npmi(2, 2, 2, 4) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(npmi(2, 2, 1, 4) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(npmi(3, 3, 3, 3) == 1.0);
  CHECK(npmi(2, 2, 0, 4) < -0.9);  // never co-occurring: floor set by the smoothing
}

TEST_CASE("tscs on a hand-tabulated 4-document fixture") {
  // docs: {0,1} {0,1,2} {0,3} {2,3}
  // df: 0->3, 1->2, 2->2; joint: (0,1)->2, (0,2)->1, (1,2)->1.
  const Corpus ref = corpus_of({{0, 1}, {0, 1, 2}, {0, 3}, {2, 3}}, 4);
  const std::vector<double> phi{0.4, 0.3, 0.2, 0.1};
  const double s = 1e-12;
  const double n01 = std::log((0.5 + s) / (0.75 * 0.5)) / -std::log(0.5 + s);
  const double n02 = std::log((0.25 + s) / (0.75 * 0.5)) / -std::log(0.25 + s);
  const double n12 = std::log((0.25 + s) / (0.5 * 0.5)) / -std::log(0.25 + s);
  const auto r = tscs(PhiView{phi, 1, 1, 4}, ref, 3);
  CHECK(r.pairs_used == 3);
  CHECK(r.pairs_skipped == 0);
  CHECK(std::abs(r.value - (n01 + n02 + n12) / 3.0) < 1e-12);
}

TEST_CASE("tscs skips words missing from the reference and hits the NPMI ceiling") {
  // word 3 never occurs; words 0 and 1 always co-occur in half the documents.
  const Corpus ref = corpus_of({{0, 1}, {2}, {0, 1, 2}, {2}}, 4);
  const std::vector<double> phi{0.4, 0.3, 0.0, 0.3};
  const auto r = tscs(PhiView{phi, 1, 1, 4}, ref, 3);
  CHECK(r.pairs_used == 1);
  CHECK(r.pairs_skipped == 2);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-11));

  const std::vector<double> absent{0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(tscs(PhiView{absent, 1, 2, 4}, corpus_of({{0}, {1}}, 4), 2), NumericError);
  CHECK_THROWS_AS(tscs(PhiView{phi, 1, 1, 4}, ref, 1), InputError);
}

TEST_CASE("diversity") {
  // block 0 top-2 {0,1}, block 1 top-2 {0,2}
  const std::vector<double> two{0.5, 0.4, 0.1, 0.0, 0.5, 0.1, 0.4, 0.0};
  CHECK(diversity(PhiView{two, 1, 2, 4}, 2) == 0.75);

  std::vector<double> same;
  for (int b = 0; b < 6; ++b) same.insert(same.end(), {0.4, 0.3, 0.2, 0.1, 0.0, 0.0});
  CHECK(diversity(PhiView{same, 3, 2, 6}, 2) == 1.0 / 6.0);

  std::vector<double> disjoint(6 * 12, 0.0);
  for (std::size_t b = 0; b < 6; ++b) disjoint[b * 12 + 2 * b] = disjoint[b * 12 + 2 * b + 1] = 0.5;
  CHECK(diversity(PhiView{disjoint, 3, 2, 12}, 2) == 1.0);
}

TEST_CASE("diversity is invariant under relabeling") {
  Rng rng(13);
  const std::size_t T = 3, S = 2, V = 15;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> phi(T * S * V);
    for (auto& x : phi) x = rng.uniform();
    std::vector<std::size_t> blocks(T * S), words(V);
    std::iota(blocks.begin(), blocks.end(), 0);
    std::iota(words.begin(), words.end(), 0);
    for (std::size_t i = blocks.size(); i > 1; --i) std::swap(blocks[i - 1], blocks[rng.below(i)]);
    for (std::size_t i = V; i > 1; --i) std::swap(words[i - 1], words[rng.below(i)]);
    std::vector<double> permuted(phi.size());
    for (std::size_t b = 0; b < T * S; ++b)
      for (std::size_t w = 0; w < V; ++w) permuted[blocks[b] * V + words[w]] = phi[b * V + w];
    CHECK(diversity(PhiView{phi, T, S, V}, 4) == diversity(PhiView{permuted, T, S, V}, 4));
  }
}

TEST_CASE("js_divergence properties") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sp += (p[i] = rng.below(3) == 0 ? 0.0 : rng.uniform());
      sq += (q[i] = rng.below(3) == 0 ? 0.0 : rng.uniform());
    }
    if (sp == 0 || sq == 0) continue;
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    const double a = js_divergence(p, q), b = js_divergence(q, p);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
    CHECK(a >= 0.0);
    CHECK(a <= std::log(2.0) + 1e-15);
    CHECK(js_divergence(p, p) == 0.0);
    CHECK(a == doctest::Approx(js_entropy_form(p, q)).epsilon(1e-9));
  }
  const std::vector<double> e1{1, 0}, e2{0, 1};
  CHECK(js_divergence(e1, e2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("h_score on a hand-computed 4-document fixture") {
  const std::vector<std::vector<double>> rows{{0.9, 0.1}, {0.7, 0.3}, {0.2, 0.8}, {0.4, 0.6}};
  std::vector<double> theta;
  for (const auto& r : rows) theta.insert(theta.end(), r.begin(), r.end());
  // clusters {0,1} and {2,3}
  const double intra = (js_entropy_form(rows[0], rows[1]) + js_entropy_form(rows[2], rows[3])) / 2.0;
  const double inter = (js_entropy_form(rows[0], rows[2]) + js_entropy_form(rows[0], rows[3]) +
                        js_entropy_form(rows[1], rows[2]) + js_entropy_form(rows[1], rows[3])) /
                       4.0;
  const auto h = h_score(ThetaView{theta, 4, 2});
  CHECK(h.clusters == 2);
  CHECK(std::abs(h.mean_intra - intra) < 1e-12);
  CHECK(std::abs(h.mean_inter - inter) < 1e-12);
  CHECK(std::abs(h.value - intra / inter) < 1e-12);
}

TEST_CASE("h_score edge cases") {
  const std::vector<double> split{0.8, 0.2, 0.8, 0.2, 0.1, 0.9};
  CHECK(h_score(ThetaView{split, 3, 2}).value == 0.0);
  const std::vector<double> one{0.6, 0.4, 0.6, 0.4};
  CHECK_THROWS_AS(h_score(ThetaView{one, 2, 2}), NumericError);
}

TEST_CASE("perplexity") {
  SUBCASE("uniform parameters give V") {
    const std::size_t T = 3, S = 2, V = 7;
    const Corpus test = corpus_of({{0, 1, 2}, {6, 6}, {3}}, V);
    const std::vector<double> phi(T * S * V, 1.0 / V), theta(3 * T, 1.0 / T), pi(3 * T * S, 1.0 / S);
    CHECK(perplexity(test, PhiView{phi, T, S, V}, ThetaView{theta, 3, T}, PiView{pi, 3, T, S}) ==
          doctest::Approx(7.0).epsilon(1e-14));
  }
  SUBCASE("single token with p = 0.25") {
    const Corpus test = corpus_of({{1}}, 2);
    const std::vector<double> phi{0.75, 0.25}, theta{1.0}, pi{1.0};
    CHECK(perplexity(test, PhiView{phi, 1, 1, 2}, ThetaView{theta, 1, 1}, PiView{pi, 1, 1, 1}) ==
          doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("hand-computed mixture") {
    // T=2, S=2, V=3; one doc with tokens 0, 2, 2.
    const Corpus test = corpus_of({{0, 2, 2}}, 3);
    const std::vector<double> phi{0.5, 0.3, 0.2,   // (0,0)
                                  0.1, 0.1, 0.8,   // (0,1)
                                  0.3, 0.3, 0.4,   // (1,0)
                                  0.6, 0.2, 0.2};  // (1,1)
    const std::vector<double> theta{0.25, 0.75}, pi{0.4, 0.6, 0.9, 0.1};
    const double p0 = 0.25 * 0.4 * 0.5 + 0.25 * 0.6 * 0.1 + 0.75 * 0.9 * 0.3 + 0.75 * 0.1 * 0.6;
    const double p2 = 0.25 * 0.4 * 0.2 + 0.25 * 0.6 * 0.8 + 0.75 * 0.9 * 0.4 + 0.75 * 0.1 * 0.2;
    const double expected = std::exp(-(std::log(p0) + 2 * std::log(p2)) / 3.0);
    CHECK(std::abs(perplexity(test, PhiView{phi, 2, 2, 3}, ThetaView{theta, 1, 2}, PiView{pi, 1, 2, 2}) - expected) <
          1e-12);
  }
  SUBCASE("zero likelihood and shape errors") {
    const Corpus test = corpus_of({{1}}, 2);
    const std::vector<double> phi{1.0, 0.0}, theta{1.0}, pi{1.0};
    CHECK_THROWS_AS(perplexity(test, PhiView{phi, 1, 1, 2}, ThetaView{theta, 1, 1}, PiView{pi, 1, 1, 1}), NumericError);
    CHECK_THROWS_AS(perplexity(test, PhiView{phi, 1, 1, 2}, ThetaView{theta, 0, 1}, PiView{pi, 1, 1, 1}), InputError);
  }
}

TEST_CASE("raising one token likelihood strictly lowers perplexity") {
  Rng rng(19);
  const std::size_t V = 5;
  const Corpus test = corpus_of({{0, 1, 2, 3, 4, 0}}, V);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> phi(V);
    double s = 0;
    for (auto& x : phi) s += (x = 0.05 + rng.uniform());
    for (auto& x : phi) x /= s;
    const std::vector<double> theta{1.0}, pi{1.0};
    const double before = perplexity(test, PhiView{phi, 1, 1, V}, ThetaView{theta, 1, 1}, PiView{pi, 1, 1, 1});
    const std::size_t w = rng.below(V);
    auto raised = phi;
    raised[w] *= 1.1;  // need not stay normalised; only the per-token likelihood matters
    const double after = perplexity(test, PhiView{raised, 1, 1, V}, ThetaView{theta, 1, 1}, PiView{pi, 1, 1, 1});
    CHECK(after < before);
  }
}

TEST_CASE("render_topics_markdown lists top_n words per block") {
  const std::vector<double> phi{0.5, 0.3, 0.2, 0.1, 0.2, 0.7};
  const auto md = render_topics_markdown(PhiView{phi, 1, 2, 3}, synthetic::numbered_vocabulary(3), {"neg", "pos"}, 2);
  CHECK(md.find("| neg | pos |") != std::string::npos);
  CHECK(md.find("| w0 (0.5000) | w2 (0.7000) |") != std::string::npos);
  CHECK(md.find("| w1 (0.3000) | w1 (0.2000) |") != std::string::npos);
  CHECK_THROWS_AS(render_topics_markdown(PhiView{phi, 1, 2, 3}, synthetic::numbered_vocabulary(3), {"a", "b"}, 4),
                  InputError);
}
