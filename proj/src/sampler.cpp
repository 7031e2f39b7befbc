#include "eljst/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace eljst {

namespace {

// Index drawn in proportion to nonnegative weights.
std::size_t draw_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double x : weights) {
    if (!std::isfinite(x) || x < 0.0) throw NumericError("non-finite or negative sampling weight");
    total += x;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("sampling weights sum to zero or overflow");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t pick = weights.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  // Rounding can leave u just past the last cumulative sum; fall back to the
  // last positive entry.
  while (weights[pick] == 0.0 && pick > 0) --pick;
  return pick;
}

}  // namespace

std::string to_string(EstimateMode mode) {
  return mode == EstimateMode::kFinalSample ? "final-sample" : "average-tail";
}

EstimateMode estimate_mode_from_string(const std::string& name) {
  if (name == "final-sample") return EstimateMode::kFinalSample;
  if (name == "average-tail") return EstimateMode::kAverageTail;
  throw InputError("unknown estimate mode '" + name + "'");
}

Hyperparameters Hyperparameters::defaults(std::size_t topics, std::size_t labels) {
  Hyperparameters hp;
  hp.topics = topics;
  hp.labels = labels;
  hp.alpha.assign(topics, topics == 0 ? 0.0 : 10.0 / static_cast<double>(topics));
  hp.gamma = topics * labels == 0 ? 0.0 : 10.0 / static_cast<double>(topics * labels);
  return hp;
}

double Hyperparameters::alpha_sum() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

void Hyperparameters::validate() const {
  if (topics < 1) throw InputError("need at least one topic");
  if (labels < 1) throw InputError("need at least one sentiment label");
  if (alpha.size() != topics) throw InputError("alpha must have one entry per topic");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a)) throw InputError("alpha entries must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InputError("beta must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be positive");
  if (!(eps_pert > 0.0 && eps_pert < 1.0)) throw InputError("eps_pert must be in (0, 1)");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InputError("eta must be >= 0");
  if (estimate == EstimateMode::kAverageTail && average_window < 1)
    throw InputError("average window must be >= 1");
}

Counts::Counts(std::size_t t, std::size_t s, std::size_t v, std::size_t d)
    : topics(t), labels(s), vocab(v), docs(d),
      word(t * s * v, 0), pair(t * s, 0), doc_pair(d * t * s, 0), doc_topic(d * t, 0), doc_length(d, 0) {}

ModelState::ModelState(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp)
    : corpus_(&corpus), hp_(hp), graphs_(std::move(graphs)),
      counts_(hp.topics, hp.labels, corpus.vocabulary.size(), corpus.size()) {
  hp_.validate();
  if (static_cast<std::size_t>(corpus.num_labels) != hp.labels)
    throw InputError("corpus declares " + std::to_string(corpus.num_labels) + " labels but the model has " +
                     std::to_string(hp.labels));
  if (graphs_.size() != corpus.size()) throw InputError("need one graph per document");
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& doc = corpus.documents[d];
    if (graphs_[d].num_positions() != doc.size())
      throw InputError("graph for document " + doc.id + " references positions beyond its length");
    doc_prior_.push_back(label_projection(doc.label, corpus.num_labels, hp.gamma, hp.eps_pert));
    doc_prior_sum_.push_back(std::accumulate(doc_prior_.back().begin(), doc_prior_.back().end(), 0.0));
    z_.emplace_back(doc.size(), 0);
    l_.emplace_back(doc.size(), 0);
  }
}

void ModelState::remove(std::size_t d, std::size_t t) {
  const std::size_t j = z_[d][t], k = l_[d][t], w = corpus_->documents[d].tokens[t];
  --counts_.word[counts_.word_index(j, k, w)];
  --counts_.pair[j * counts_.labels + k];
  --counts_.doc_pair[counts_.doc_pair_index(d, j, k)];
  --counts_.doc_topic[d * counts_.topics + j];
  --counts_.doc_length[d];
}

void ModelState::assign(std::size_t d, std::size_t t, std::uint32_t j, std::uint32_t k) {
  const std::size_t w = corpus_->documents[d].tokens[t];
  z_[d][t] = j;
  l_[d][t] = k;
  ++counts_.word[counts_.word_index(j, k, w)];
  ++counts_.pair[j * counts_.labels + k];
  ++counts_.doc_pair[counts_.doc_pair_index(d, j, k)];
  ++counts_.doc_topic[d * counts_.topics + j];
  ++counts_.doc_length[d];
}

Counts ModelState::recount() const {
  Counts c(counts_.topics, counts_.labels, counts_.vocab, counts_.docs);
  for (std::size_t d = 0; d < z_.size(); ++d) {
    const auto& tokens = corpus_->documents[d].tokens;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const std::size_t j = z_[d][t], k = l_[d][t];
      ++c.word[c.word_index(j, k, tokens[t])];
      ++c.pair[j * c.labels + k];
      ++c.doc_pair[c.doc_pair_index(d, j, k)];
      ++c.doc_topic[d * c.topics + j];
      ++c.doc_length[d];
    }
  }
  return c;
}

ModelState initialize(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp, Rng& rng) {
  ModelState state(corpus, std::move(graphs), hp);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto prior = state.doc_prior(d);
    for (std::size_t t = 0; t < corpus.documents[d].size(); ++t) {
      const auto j = static_cast<std::uint32_t>(rng.below(hp.topics));
      const auto k = static_cast<std::uint32_t>(draw_index(prior, rng));
      state.assign(d, t, j, k);
    }
  }
  return state;
}

void gibbs_conditional(const ModelState& state, std::size_t d, std::size_t t, std::span<double> weights) {
  const auto& c = state.counts();
  const auto& hp = state.hyperparameters();
  const std::size_t T = hp.topics, S = hp.labels, V = c.vocab;
  assert(weights.size() == T * S);
  const std::size_t w = state.corpus().documents[d].tokens[t];
  const auto prior = state.doc_prior(d);
  const double prior_sum = state.doc_prior_sum(d);
  const double vbeta = static_cast<double>(V) * hp.beta;
  const double doc_denominator = c.doc_length[d] + hp.alpha_sum();

  // MRF factor per topic; stays 1 when eta is 0 or the token has no neighbours.
  const auto& neighbours = state.graph(d).neighbors(static_cast<Position>(t));
  const bool use_mrf = hp.eta != 0.0 && !neighbours.empty();
  thread_local std::vector<double> mrf;
  if (use_mrf) {
    mrf.assign(T, 0.0);
    for (Position n : neighbours) mrf[state.topic(d, n)] += 1.0;
    const double scale = hp.eta / static_cast<double>(neighbours.size());
    for (double& m : mrf) m = std::exp(scale * m);
  }

  for (std::size_t j = 0; j < T; ++j) {
    const double n_dj = c.doc_topic[d * T + j];
    const double topic_factor = (n_dj + hp.alpha[j]) / doc_denominator;
    const double label_denominator = n_dj + prior_sum;
    const double mrf_factor = use_mrf ? mrf[j] : 1.0;
    for (std::size_t k = 0; k < S; ++k) {
      const double word_factor = (c.word[c.word_index(j, k, w)] + hp.beta) / (c.pair[j * S + k] + vbeta);
      const double label_factor = (c.doc_pair[c.doc_pair_index(d, j, k)] + prior[k]) / label_denominator;
      weights[j * S + k] = word_factor * label_factor * topic_factor * mrf_factor;
    }
  }
}


std::pair<std::uint32_t, std::uint32_t> sample_assignment(std::span<const double> weights, std::size_t labels,
                                                           Rng& rng) {
  const std::size_t pick = draw_index(weights, rng);
  return {static_cast<std::uint32_t>(pick / labels), static_cast<std::uint32_t>(pick % labels)};
}

void gibbs_sweep(ModelState& state, Rng& rng) {
  const std::size_t S = state.labels();
  std::vector<double> weights(state.topics() * S);
  for (std::size_t d = 0; d < state.num_docs(); ++d) {
    const std::size_t n = state.corpus().documents[d].size();
    for (std::size_t t = 0; t < n; ++t) {
      state.remove(d, t);
      gibbs_conditional(state, d, t, weights);
      const auto [j, k] = sample_assignment(weights, S, rng);
      state.assign(d, t, j, k);
    }
  }
}

std::vector<double> estimate_phi(const ModelState& state) {
  const auto& c = state.counts();
  const auto& hp = state.hyperparameters();
  const double vbeta = static_cast<double>(c.vocab) * hp.beta;
  std::vector<double> phi(c.word.size());
  for (std::size_t jk = 0; jk < c.topics * c.labels; ++jk) {
    const double denom = c.pair[jk] + vbeta;
    for (std::size_t i = 0; i < c.vocab; ++i) phi[jk * c.vocab + i] = (c.word[jk * c.vocab + i] + hp.beta) / denom;
  }
  return phi;
}

std::vector<double> estimate_pi(const ModelState& state) {
  const auto& c = state.counts();
  std::vector<double> pi(c.doc_pair.size());
  for (std::size_t d = 0; d < c.docs; ++d) {
    const auto prior = state.doc_prior(d);
    const double prior_sum = state.doc_prior_sum(d);
    for (std::size_t j = 0; j < c.topics; ++j) {
      const double denom = c.doc_topic[d * c.topics + j] + prior_sum;
      for (std::size_t k = 0; k < c.labels; ++k) {
        const std::size_t idx = c.doc_pair_index(d, j, k);
        pi[idx] = (c.doc_pair[idx] + prior[k]) / denom;
      }
    }
  }
  return pi;
}

std::vector<double> estimate_theta(const ModelState& state) {
  const auto& c = state.counts();
  const auto& hp = state.hyperparameters();
  const double alpha_sum = hp.alpha_sum();
  std::vector<double> theta(c.doc_topic.size());
  for (std::size_t d = 0; d < c.docs; ++d) {
    const double denom = c.doc_length[d] + alpha_sum;
    for (std::size_t j = 0; j < c.topics; ++j) theta[d * c.topics + j] = (c.doc_topic[d * c.topics + j] + hp.alpha[j]) / denom;
  }
  return theta;
}

double joint_log_prob(const ModelState& state) {
  const auto& c = state.counts();
  const auto& hp = state.hyperparameters();
  const std::size_t T = c.topics, S = c.labels, V = c.vocab;
  const double vbeta = static_cast<double>(V) * hp.beta;

  // p(w | l, z)
  double lp = static_cast<double>(T * S) * (std::lgamma(vbeta) - static_cast<double>(V) * std::lgamma(hp.beta));
  for (std::size_t jk = 0; jk < T * S; ++jk) {
    for (std::size_t i = 0; i < V; ++i) lp += std::lgamma(c.word[jk * V + i] + hp.beta);
    lp -= std::lgamma(c.pair[jk] + vbeta);
  }

  // p(l | z)
  for (std::size_t d = 0; d < c.docs; ++d) {
    const auto prior = state.doc_prior(d);
    double norm = std::lgamma(state.doc_prior_sum(d));
    for (double g : prior) norm -= std::lgamma(g);
    lp += static_cast<double>(T) * norm;
    for (std::size_t j = 0; j < T; ++j) {
      for (std::size_t k = 0; k < S; ++k) lp += std::lgamma(c.doc_pair[c.doc_pair_index(d, j, k)] + prior[k]);
      lp -= std::lgamma(c.doc_topic[d * T + j] + state.doc_prior_sum(d));
    }
  }

  // p(z) with the MRF potential
  const double alpha_sum = hp.alpha_sum();
  double alpha_norm = std::lgamma(alpha_sum);
  for (double a : hp.alpha) alpha_norm -= std::lgamma(a);
  lp += static_cast<double>(c.docs) * alpha_norm;
  for (std::size_t d = 0; d < c.docs; ++d) {
    for (std::size_t j = 0; j < T; ++j) lp += std::lgamma(c.doc_topic[d * T + j] + hp.alpha[j]);
    lp -= std::lgamma(c.doc_length[d] + alpha_sum);

    const auto& g = state.graph(d);
    if (hp.eta != 0.0 && g.edge_count() > 0) {
      std::size_t agree = 0;
      for (auto [a, b] : g.edges())
        if (state.topic(d, a) == state.topic(d, b)) ++agree;
      lp += hp.eta * static_cast<double>(agree) / static_cast<double>(g.edge_count());
    }
  }
  return lp;
}

namespace {

void add_into(std::vector<double>& acc, const std::vector<double>& x) {
  if (acc.empty()) acc.assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] += x[i];
}

void scale(std::vector<double>& v, std::size_t n) {
  const double inv = 1.0 / static_cast<double>(n);
  for (double& x : v) x *= inv;
}

}  // namespace

TrainResult train_chain(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp,
                        const TrainCallbacks& callbacks) {
  hp.validate();
  Rng rng(hp.seed);
  ModelState state = initialize(corpus, std::move(graphs), hp, rng);

  const std::size_t window =
      hp.estimate == EstimateMode::kFinalSample ? 1 : std::min(hp.average_window, hp.iterations);
  std::vector<double> phi, pi, theta;
  std::size_t averaged = 0;

  for (std::size_t it = 1; it <= hp.iterations; ++it) {
    gibbs_sweep(state, rng);
    if (it + window > hp.iterations) {
      add_into(phi, estimate_phi(state));
      add_into(pi, estimate_pi(state));
      add_into(theta, estimate_theta(state));
      ++averaged;
    }
    if (callbacks.on_sweep) callbacks.on_sweep(it, state);
  }
  if (averaged == 0) {
    phi = estimate_phi(state);
    pi = estimate_pi(state);
    theta = estimate_theta(state);
  } else if (averaged > 1) {
    scale(phi, averaged);
    scale(pi, averaged);
    scale(theta, averaged);
  }

  Posterior post;
  post.docs = corpus.size();
  post.topics = hp.topics;
  post.labels = hp.labels;
  post.vocab = corpus.vocabulary.size();
  post.phi = std::move(phi);
  post.pi = std::move(pi);
  post.theta = std::move(theta);
  post.manifest.hp = hp;
  post.manifest.sweeps_averaged = averaged;
  post.manifest.corpus_hash = corpus_hash(corpus);
  post.manifest.label_names = corpus.label_names;
  for (const auto& d : corpus.documents) post.manifest.doc_ids.push_back(d.id);
  return {std::move(post), std::move(state)};
}

Posterior train(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp,
                const TrainCallbacks& callbacks) {
  return train_chain(corpus, std::move(graphs), hp, callbacks).posterior;
}

FoldInResult fold_in(const Corpus& test, const PhiView& phi, const Hyperparameters& hp, const FoldInOptions& options) {
  hp.validate();
  const std::size_t T = hp.topics, S = hp.labels, D = test.size();
  if (phi.topics != T || phi.labels != S) throw InputError("fold_in: phi shape does not match hyperparameters");
  if (phi.vocab != test.vocabulary.size()) throw InputError("fold_in: test corpus is not indexed with the model vocabulary");

  FoldInResult result;
  result.docs = D;
  result.theta.assign(D * T, 0.0);
  result.pi.assign(D * T * S, 0.0);
  if (D == 0) return result;

  Rng rng(options.seed);
  const double alpha_sum = hp.alpha_sum();
  const double gamma_sum = static_cast<double>(S) * hp.gamma;
  const std::size_t window = std::max<std::size_t>(1, std::min(options.average_window, options.iterations));
  std::vector<double> weights(T * S);

  for (std::size_t d = 0; d < D; ++d) {
    const auto& tokens = test.documents[d].tokens;
    const std::size_t n = tokens.size();
    std::vector<std::uint32_t> z(n), l(n);
    std::vector<double> n_djk(T * S, 0.0), n_dj(T, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      z[t] = static_cast<std::uint32_t>(rng.below(T));
      l[t] = static_cast<std::uint32_t>(rng.below(S));
      n_djk[z[t] * S + l[t]] += 1.0;
      n_dj[z[t]] += 1.0;
    }

    std::vector<double> theta_acc(T, 0.0), pi_acc(T * S, 0.0);
    std::size_t averaged = 0;
    auto accumulate = [&] {
      for (std::size_t j = 0; j < T; ++j) {
        theta_acc[j] += (n_dj[j] + hp.alpha[j]) / (static_cast<double>(n) + alpha_sum);
        for (std::size_t k = 0; k < S; ++k) pi_acc[j * S + k] += (n_djk[j * S + k] + hp.gamma) / (n_dj[j] + gamma_sum);
      }
      ++averaged;
    };

    for (std::size_t it = 1; it <= options.iterations; ++it) {
      for (std::size_t t = 0; t < n; ++t) {
        n_djk[z[t] * S + l[t]] -= 1.0;
        n_dj[z[t]] -= 1.0;
        for (std::size_t j = 0; j < T; ++j) {
          const double topic_factor = n_dj[j] + hp.alpha[j];
          for (std::size_t k = 0; k < S; ++k)
            weights[j * S + k] = phi(j, k, tokens[t]) * (n_djk[j * S + k] + hp.gamma) / (n_dj[j] + gamma_sum) * topic_factor;
        }
        const auto [j, k] = sample_assignment(weights, S, rng);
        z[t] = j;
        l[t] = k;
        n_djk[j * S + k] += 1.0;
        n_dj[j] += 1.0;
      }
      if (it + window > options.iterations) accumulate();
    }
    if (averaged == 0) accumulate();

    for (std::size_t j = 0; j < T; ++j) {
      result.theta[d * T + j] = theta_acc[j] / static_cast<double>(averaged);
      for (std::size_t k = 0; k < S; ++k)
        result.pi[(d * T + j) * S + k] = pi_acc[j * S + k] / static_cast<double>(averaged);
    }
  }
  return result;
}

}  // namespace eljst
