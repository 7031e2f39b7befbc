#include "eljst/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "eljst/error.hpp"

namespace eljst {

std::vector<RankedWord> top_words(const PhiView& phi, std::size_t topic, std::size_t label, std::size_t top_n) {
  if (top_n > phi.vocab) throw InputError("top_n exceeds vocabulary size");
  const auto block = phi.block(topic, label);
  std::vector<WordId> ids(phi.vocab);
  std::iota(ids.begin(), ids.end(), WordId{0});
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(top_n), ids.end(),
                    [&](WordId a, WordId b) { return block[a] > block[b] || (block[a] == block[b] && a < b); });
  std::vector<RankedWord> out;
  out.reserve(top_n);
  for (std::size_t i = 0; i < top_n; ++i) out.push_back({ids[i], block[ids[i]]});
  return out;
}

std::vector<std::vector<RankedWord>> top_word_table(const PhiView& phi, std::size_t top_n) {
  std::vector<std::vector<RankedWord>> table;
  for (std::size_t j = 0; j < phi.topics; ++j)
    for (std::size_t k = 0; k < phi.labels; ++k) table.push_back(top_words(phi, j, k, top_n));
  return table;
}

CooccurrenceIndex::CooccurrenceIndex(const Corpus& reference)
    : num_docs_(reference.size()), postings_(reference.vocabulary.size()) {
  for (std::size_t d = 0; d < reference.size(); ++d) {
    for (WordId w : reference.documents[d].tokens) {
      auto& p = postings_.at(w);
      if (p.empty() || p.back() != d) p.push_back(static_cast<std::uint32_t>(d));
    }
  }
}

std::size_t CooccurrenceIndex::doc_frequency(WordId w) const { return w < postings_.size() ? postings_[w].size() : 0; }

std::size_t CooccurrenceIndex::joint_frequency(WordId a, WordId b) const {
  if (a >= postings_.size() || b >= postings_.size()) return 0;
  const auto& pa = postings_[a];
  const auto& pb = postings_[b];
  std::size_t n = 0;
  for (std::size_t i = 0, j = 0; i < pa.size() && j < pb.size();) {
    if (pa[i] < pb[j]) ++i;
    else if (pb[j] < pa[i]) ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double npmi(std::size_t df_a, std::size_t df_b, std::size_t df_ab, std::size_t num_docs, double smoothing) {
  if (num_docs == 0 || df_a == 0 || df_b == 0) throw InputError("npmi: word absent from the reference corpus");
  if (df_ab == num_docs) return 1.0;
  const double n = static_cast<double>(num_docs);
  const double p_a = static_cast<double>(df_a) / n;
  const double p_b = static_cast<double>(df_b) / n;
  const double p_ab = static_cast<double>(df_ab) / n + smoothing;
  return std::log(p_ab / (p_a * p_b)) / -std::log(p_ab);
}

TscsResult tscs(const PhiView& phi, const Corpus& reference, std::size_t top_n) {
  if (reference.size() == 0) throw InputError("tscs: empty reference corpus");
  if (top_n < 2) throw InputError("tscs: top_n must be >= 2");
  const CooccurrenceIndex index(reference);
  TscsResult result;
  double sum = 0.0;
  for (const auto& block : top_word_table(phi, top_n)) {
    for (std::size_t a = 0; a < block.size(); ++a) {
      for (std::size_t b = a + 1; b < block.size(); ++b) {
        const WordId wa = block[a].word, wb = block[b].word;
        const std::size_t df_a = index.doc_frequency(wa), df_b = index.doc_frequency(wb);
        if (df_a == 0 || df_b == 0) {
          ++result.pairs_skipped;
          continue;
        }
        sum += npmi(df_a, df_b, index.joint_frequency(wa, wb), index.num_docs());
        ++result.pairs_used;
      }
    }
  }
  if (result.pairs_used == 0) throw NumericError("tscs: no top-word pair occurs in the reference corpus");
  result.value = sum / static_cast<double>(result.pairs_used);
  return result;
}

double diversity(const PhiView& phi, std::size_t top_n) {
  if (top_n < 1) throw InputError("diversity: top_n must be >= 1");
  std::set<WordId> distinct;
  for (const auto& block : top_word_table(phi, top_n))
    for (const auto& rw : block) distinct.insert(rw.word);
  return static_cast<double>(distinct.size()) / static_cast<double>(phi.topics * phi.labels * top_n);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("js_divergence: length mismatch");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(js, 0.0);
}

HScoreResult h_score(const ThetaView& theta) {
  std::vector<std::size_t> cluster(theta.docs);
  std::set<std::size_t> used;
  for (std::size_t d = 0; d < theta.docs; ++d) {
    auto row = theta.row(d);
    cluster[d] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    used.insert(cluster[d]);
  }
  if (used.size() < 2) throw NumericError("h_score: fewer than 2 non-empty clusters");

  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t a = 0; a < theta.docs; ++a) {
    for (std::size_t b = a + 1; b < theta.docs; ++b) {
      const double js = js_divergence(theta.row(a), theta.row(b));
      if (cluster[a] == cluster[b]) {
        intra += js;
        ++n_intra;
      } else {
        inter += js;
        ++n_inter;
      }
    }
  }
  HScoreResult r;
  r.clusters = used.size();
  r.mean_intra = n_intra == 0 ? 0.0 : intra / static_cast<double>(n_intra);
  r.mean_inter = inter / static_cast<double>(n_inter);
  if (!(r.mean_inter > 0.0)) throw NumericError("h_score: zero inter-cluster distance");
  r.value = r.mean_intra / r.mean_inter;
  return r;
}

double perplexity(const Corpus& test, const PhiView& phi, const ThetaView& theta, const PiView& pi) {
  if (theta.docs != test.size() || pi.docs != test.size()) throw InputError("perplexity: document count mismatch");
  if (phi.vocab != test.vocabulary.size()) throw InputError("perplexity: vocabulary mismatch");
  double log_lik = 0.0;
  std::size_t tokens = 0;
  for (std::size_t d = 0; d < test.size(); ++d) {
    for (WordId w : test.documents[d].tokens) {
      double p = 0.0;
      for (std::size_t j = 0; j < phi.topics; ++j)
        for (std::size_t k = 0; k < phi.labels; ++k) p += theta(d, j) * pi(d, j, k) * phi(j, k, w);
      if (!(p > 0.0)) throw NumericError("perplexity: token with zero likelihood");
      log_lik += std::log(p);
      ++tokens;
    }
  }
  if (tokens == 0) throw InputError("perplexity: empty test corpus");
  return std::exp(-log_lik / static_cast<double>(tokens));
}

nlohmann::json report_to_json(const MetricReport& report, const PhiView& phi, const Vocabulary& vocabulary,
                              const std::vector<std::string>& label_names, std::size_t top_n) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t j = 0; j < phi.topics; ++j) {
    for (std::size_t k = 0; k < phi.labels; ++k) {
      nlohmann::json words = nlohmann::json::array();
      for (const auto& rw : top_words(phi, j, k, std::min(top_n, phi.vocab)))
        words.push_back({{"word", vocabulary.word(rw.word)}, {"phi", rw.weight}});
      blocks.push_back({{"topic", j}, {"label", label_names.at(k)}, {"words", words}});
    }
  }
  return {{"tscs", report.tscs.value},
          {"tscs_pairs_used", report.tscs.pairs_used},
          {"tscs_pairs_skipped", report.tscs.pairs_skipped},
          {"diversity", report.diversity},
          {"h_score", report.h_score.value},
          {"h_score_intra", report.h_score.mean_intra},
          {"h_score_inter", report.h_score.mean_inter},
          {"h_score_clusters", report.h_score.clusters},
          {"perplexity", report.perplexity},
          {"settings",
           {{"tscs_top_n", report.settings.tscs_top_n},
            {"diversity_top_n", report.settings.diversity_top_n},
            {"npmi_smoothing", report.settings.npmi_smoothing}}},
          {"top_words", blocks}};
}

std::string render_topics_markdown(const PhiView& phi, const Vocabulary& vocabulary,
                                   const std::vector<std::string>& label_names, std::size_t top_n) {
  if (top_n > phi.vocab) throw InputError("top_n exceeds vocabulary size");
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  for (std::size_t j = 0; j < phi.topics; ++j) {
    out << "## Topic " << j << "\n\n|";
    for (std::size_t k = 0; k < phi.labels; ++k) out << ' ' << label_names.at(k) << " |";
    out << "\n|";
    for (std::size_t k = 0; k < phi.labels; ++k) out << "---|";
    out << '\n';
    std::vector<std::vector<RankedWord>> cols;
    for (std::size_t k = 0; k < phi.labels; ++k) cols.push_back(top_words(phi, j, k, top_n));
    for (std::size_t r = 0; r < top_n; ++r) {
      out << '|';
      for (const auto& col : cols) out << ' ' << vocabulary.word(col[r].word) << " (" << col[r].weight << ") |";
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace eljst
