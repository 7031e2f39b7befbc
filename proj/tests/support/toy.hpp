#pragma once

// Random tiny instances expressed both as engine inputs and as oracle models.

#include <cmath>
#include <numeric>

#include "eljst/sampler.hpp"
#include "support/oracle.hpp"

namespace toy {

struct Instance {
  eljst::Corpus corpus;
  std::vector<eljst::DocumentGraph> graphs;
  eljst::Hyperparameters hp;
  oracle::ToyModel model;
  oracle::Assign z, l;
};

struct Limits {
  std::size_t max_docs = 2, max_len = 3, max_vocab = 3, max_topics = 2, max_labels = 2;
};

inline Instance random_instance(eljst::Rng& rng, double eta, const Limits& lim = {}) {
  Instance in;
  const std::size_t D = 1 + rng.below(lim.max_docs);
  const std::size_t V = 1 + rng.below(lim.max_vocab);
  const std::size_t T = 1 + rng.below(lim.max_topics);
  const std::size_t S = 1 + rng.below(lim.max_labels);

  in.hp = eljst::Hyperparameters::defaults(T, S);
  for (auto& a : in.hp.alpha) a = 0.05 + 2.0 * rng.uniform();
  in.hp.beta = 0.01 + rng.uniform();
  in.hp.gamma = 0.05 + 2.0 * rng.uniform();
  in.hp.eps_pert = 0.01 + 0.9 * rng.uniform();
  in.hp.eta = eta;

  std::vector<std::string> words;
  for (std::size_t i = 0; i < V; ++i) words.push_back("v" + std::to_string(i));
  in.corpus.vocabulary = eljst::Vocabulary(words);
  in.corpus.num_labels = static_cast<int>(S);
  for (std::size_t k = 1; k <= S; ++k) in.corpus.label_names.push_back(std::to_string(k));

  auto& m = in.model;
  m.topics = T;
  m.labels = S;
  m.vocab = V;
  m.alpha = in.hp.alpha;
  m.beta = in.hp.beta;
  m.gamma = in.hp.gamma;
  m.eps_pert = in.hp.eps_pert;
  m.eta = eta;

  for (std::size_t d = 0; d < D; ++d) {
    eljst::Document doc;
    doc.id = "t" + std::to_string(d);
    doc.label = 1 + static_cast<int>(rng.below(S));
    const std::size_t n = 1 + rng.below(lim.max_len);
    for (std::size_t t = 0; t < n; ++t) doc.tokens.push_back(static_cast<eljst::WordId>(rng.below(V)));

    std::vector<std::pair<eljst::Position, eljst::Position>> edges;
    for (eljst::Position a = 0; a < n; ++a)
      for (eljst::Position b = a + 1; b < n; ++b)
        if (rng.below(2) == 1) edges.emplace_back(a, b);
    in.graphs.emplace_back(doc.id, n, edges);

    m.docs.push_back(doc.tokens);
    m.doc_labels.push_back(doc.label);
    m.edges.push_back(edges);
    in.z.emplace_back();
    in.l.emplace_back();
    for (std::size_t t = 0; t < n; ++t) {
      in.z.back().push_back(static_cast<std::uint32_t>(rng.below(T)));
      in.l.back().push_back(static_cast<std::uint32_t>(rng.below(S)));
    }
    in.corpus.documents.push_back(std::move(doc));
  }
  return in;
}

// Engine state holding exactly the instance's assignments.
inline eljst::ModelState state_of(const Instance& in) {
  eljst::ModelState s(in.corpus, in.graphs, in.hp);
  for (std::size_t d = 0; d < in.z.size(); ++d)
    for (std::size_t t = 0; t < in.z[d].size(); ++t) s.assign(d, t, in.z[d][t], in.l[d][t]);
  return s;
}

// Normalized engine conditional for token (d, t).
inline std::vector<double> engine_conditional(const Instance& in, std::size_t d, std::size_t t) {
  auto s = state_of(in);
  s.remove(d, t);
  std::vector<double> w(in.hp.topics * in.hp.labels);
  eljst::gibbs_conditional(s, d, t, w);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace toy
