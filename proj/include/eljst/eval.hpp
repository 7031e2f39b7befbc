#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eljst/corpus.hpp"
#include "eljst/tensor.hpp"
#include "json.hpp"

namespace eljst {

struct RankedWord {
  WordId word = 0;
  double weight = 0.0;
};

// Highest-phi words of block (j, k); ties go to the smaller word id.
std::vector<RankedWord> top_words(const PhiView& phi, std::size_t topic, std::size_t label, std::size_t top_n);

// One ranked list per (topic, label) block, flattened j*S + k.
std::vector<std::vector<RankedWord>> top_word_table(const PhiView& phi, std::size_t top_n);

inline constexpr double kNpmiSmoothing = 1e-12;

// Document-level co-occurrence statistics of a reference corpus.
class CooccurrenceIndex {
 public:
  explicit CooccurrenceIndex(const Corpus& reference);

  std::size_t num_docs() const noexcept { return num_docs_; }
  std::size_t doc_frequency(WordId w) const;
  std::size_t joint_frequency(WordId a, WordId b) const;

 private:
  std::size_t num_docs_ = 0;
  std::vector<std::vector<std::uint32_t>> postings_;  // word -> sorted document indices
};

// log[p(a,b) / (p(a) p(b))] / -log p(a,b), with p(a,b) smoothed by `smoothing`;
// 1 when the pair occurs in every document.
double npmi(std::size_t df_a, std::size_t df_b, std::size_t df_ab, std::size_t num_docs,
            double smoothing = kNpmiSmoothing);

struct TscsResult {
  double value = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // pairs with a word absent from the reference corpus
};

// Mean NPMI over all unordered top-word pairs of every (topic, label) block.
TscsResult tscs(const PhiView& phi, const Corpus& reference, std::size_t top_n);

// Distinct words in the union of all top-n lists over (T * S * top_n).
double diversity(const PhiView& phi, std::size_t top_n);

// Jensen-Shannon divergence in nats.
double js_divergence(std::span<const double> p, std::span<const double> q);

struct HScoreResult {
  double value = 0.0;
  double mean_intra = 0.0;
  double mean_inter = 0.0;
  std::size_t clusters = 0;
};

// Documents clustered by argmax of theta; mean intra-cluster over mean
// inter-cluster pairwise JS divergence.
HScoreResult h_score(const ThetaView& theta);

// exp(-sum log p(w) / #tokens), p(w) = sum_j sum_k theta_dj pi_djk phi_jkw.
double perplexity(const Corpus& test, const PhiView& phi, const ThetaView& theta, const PiView& pi);

struct MetricSettings {
  std::size_t tscs_top_n = 10;
  std::size_t diversity_top_n = 25;
  double npmi_smoothing = kNpmiSmoothing;
};

struct MetricReport {
  TscsResult tscs;
  double diversity = 0.0;
  HScoreResult h_score;
  double perplexity = 0.0;
  MetricSettings settings;
};

nlohmann::json report_to_json(const MetricReport& report, const PhiView& phi, const Vocabulary& vocabulary,
                              const std::vector<std::string>& label_names, std::size_t top_n);

// Markdown tables of the top words per topic and sentiment label.
std::string render_topics_markdown(const PhiView& phi, const Vocabulary& vocabulary,
                                   const std::vector<std::string>& label_names, std::size_t top_n);

}  // namespace eljst
