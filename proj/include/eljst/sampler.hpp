#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eljst/corpus.hpp"
#include "eljst/graph.hpp"
#include "eljst/rng.hpp"
#include "eljst/tensor.hpp"
#include "json.hpp"

namespace eljst {

enum class EstimateMode {
  kAverageTail,  // mean of the per-sweep estimates over the last `average_window` sweeps
  kFinalSample,  // estimates from the final sweep only
};

std::string to_string(EstimateMode mode);
EstimateMode estimate_mode_from_string(const std::string& name);

struct Hyperparameters {
  std::size_t topics = 5;
  std::size_t labels = 2;
  std::vector<double> alpha;  // length topics
  double beta = 0.01;
  double gamma = 1.0;         // base of the label-projected document prior
  double eps_pert = 0.01;
  double eta = 1.0;           // MRF strength
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  EstimateMode estimate = EstimateMode::kAverageTail;
  std::size_t average_window = 100;

  // alpha_j = 10/T, beta = 0.01, gamma = 10/(T*S), eta = 1, 1000 sweeps.
  static Hyperparameters defaults(std::size_t topics, std::size_t labels);

  double alpha_sum() const;
  void validate() const;  // throws InputError
};

// Sufficient statistics of the collapsed sampler.
struct Counts {
  std::size_t topics = 0, labels = 0, vocab = 0, docs = 0;
  std::vector<std::int32_t> word;        // N_{j,k,i}: (j*S + k)*V + i
  std::vector<std::int32_t> pair;        // N_{j,k}:   j*S + k
  std::vector<std::int32_t> doc_pair;    // N_{d,j,k}: (d*T + j)*S + k
  std::vector<std::int32_t> doc_topic;   // N_{d,j}:   d*T + j
  std::vector<std::int32_t> doc_length;  // N_d

  Counts() = default;
  Counts(std::size_t topics, std::size_t labels, std::size_t vocab, std::size_t docs);

  std::size_t word_index(std::size_t j, std::size_t k, std::size_t i) const { return (j * labels + k) * vocab + i; }
  std::size_t doc_pair_index(std::size_t d, std::size_t j, std::size_t k) const { return (d * topics + j) * labels + k; }

  bool operator==(const Counts&) const = default;
};

// Assignments, counts, graphs and per-document priors of one chain.
// Holds a pointer to the corpus, which must outlive the state.
class ModelState {
 public:
  ModelState(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp);

  const Corpus& corpus() const noexcept { return *corpus_; }
  const Hyperparameters& hyperparameters() const noexcept { return hp_; }
  const Counts& counts() const noexcept { return counts_; }
  const DocumentGraph& graph(std::size_t d) const { return graphs_.at(d); }
  const std::vector<DocumentGraph>& graphs() const noexcept { return graphs_; }
  std::span<const double> doc_prior(std::size_t d) const { return doc_prior_.at(d); }
  double doc_prior_sum(std::size_t d) const { return doc_prior_sum_.at(d); }

  std::size_t num_docs() const noexcept { return z_.size(); }
  std::size_t topics() const noexcept { return hp_.topics; }
  std::size_t labels() const noexcept { return hp_.labels; }
  std::size_t vocab_size() const noexcept { return counts_.vocab; }

  std::uint32_t topic(std::size_t d, std::size_t t) const { return z_[d][t]; }
  std::uint32_t label(std::size_t d, std::size_t t) const { return l_[d][t]; }
  const std::vector<std::uint32_t>& topics_of(std::size_t d) const { return z_.at(d); }
  const std::vector<std::uint32_t>& labels_of(std::size_t d) const { return l_.at(d); }

  // Take token (d, t) out of the counts (its assignment is kept for reference).
  void remove(std::size_t d, std::size_t t);
  // Put token (d, t) back with assignment (j, k).
  void assign(std::size_t d, std::size_t t, std::uint32_t j, std::uint32_t k);

  // Tallies rebuilt from the assignments alone.
  Counts recount() const;

  bool operator==(const ModelState& other) const {
    return corpus_ == other.corpus_ && z_ == other.z_ && l_ == other.l_ && counts_ == other.counts_;
  }

 private:
  const Corpus* corpus_;
  Hyperparameters hp_;
  std::vector<DocumentGraph> graphs_;
  std::vector<std::vector<double>> doc_prior_;
  std::vector<double> doc_prior_sum_;
  std::vector<std::vector<std::uint32_t>> z_;
  std::vector<std::vector<std::uint32_t>> l_;
  Counts counts_;
};

// z uniform over topics, l drawn in proportion to the document's label prior.
ModelState initialize(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp, Rng& rng);

// Unnormalized T x S table (flattened j*S + k) for token (d, t). The token must
// already be removed from the counts. Each entry is the product of the
// word, label, topic and MRF factors; the MRF factor is
// exp(eta * (#neighbours on topic j) / #neighbours), or 1 without neighbours.
void gibbs_conditional(const ModelState& state, std::size_t d, std::size_t t, std::span<double> weights);

// Categorical draw over the flattened table (index j*S + k).
std::pair<std::uint32_t, std::uint32_t> sample_assignment(std::span<const double> weights, std::size_t labels,
                                                           Rng& rng);

// Resamples every token once, documents in order, positions in order.
void gibbs_sweep(ModelState& state, Rng& rng);

std::vector<double> estimate_phi(const ModelState& state);
std::vector<double> estimate_pi(const ModelState& state);
std::vector<double> estimate_theta(const ModelState& state);

// log p(w, z, l) from log-gamma sums, with the document MRF potential
// exp(eta * (#edges with equal endpoint topics) / |P_d|).
double joint_log_prob(const ModelState& state);

struct PosteriorManifest {
  Hyperparameters hp;
  std::size_t sweeps_averaged = 0;
  std::string rng = std::string(Rng::kName);
  std::uint64_t corpus_hash = 0;
  std::string graph_source = "none";
  std::vector<std::string> label_names;
  std::vector<std::string> doc_ids;
  nlohmann::json run = nlohmann::json::object();  // caller-specific replay information
};

struct Posterior {
  std::size_t docs = 0, topics = 0, labels = 0, vocab = 0;
  std::vector<double> theta;  // D x T
  std::vector<double> pi;     // D x T x S
  std::vector<double> phi;    // T x S x V
  PosteriorManifest manifest;

  PhiView phi_view() const { return {phi, topics, labels, vocab}; }
  ThetaView theta_view() const { return {theta, docs, topics}; }
  PiView pi_view() const { return {pi, docs, topics, labels}; }
};

struct TrainCallbacks {
  // Called after every sweep with the 1-based sweep number.
  std::function<void(std::size_t, const ModelState&)> on_sweep;
};

struct TrainResult {
  Posterior posterior;
  ModelState state;
};

TrainResult train_chain(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp,
                        const TrainCallbacks& callbacks = {});
Posterior train(const Corpus& corpus, std::vector<DocumentGraph> graphs, const Hyperparameters& hp,
                const TrainCallbacks& callbacks = {});

struct FoldInOptions {
  std::size_t iterations = 200;
  std::size_t average_window = 50;
  std::uint64_t seed = 1;
};

struct FoldInResult {
  std::vector<double> theta;  // D_test x T
  std::vector<double> pi;     // D_test x T x S
  std::size_t docs = 0;

  ThetaView theta_view(std::size_t topics) const { return {theta, docs, topics}; }
  PiView pi_view(std::size_t topics, std::size_t labels) const { return {pi, docs, topics, labels}; }
};

// Held-out inference with phi frozen and a symmetric label prior gamma.
// Only document-level counts are sampled; no MRF term is used. The test
// corpus must be indexed with the training vocabulary.
FoldInResult fold_in(const Corpus& test, const PhiView& phi, const Hyperparameters& hp,
                     const FoldInOptions& options = {});

}  // namespace eljst
