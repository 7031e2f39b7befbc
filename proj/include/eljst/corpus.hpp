#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eljst/error.hpp"

namespace eljst {

using WordId = std::uint32_t;

// Dense word <-> id bijection; ids are assigned in insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(WordId id) const { return words_.at(id); }
  std::optional<WordId> find(std::string_view word) const;

  // Returns the existing id if the word is already present.
  WordId add(std::string word);

  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

struct Document {
  std::string id;
  std::vector<WordId> tokens;
  int label = 1;  // 1..S

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  Vocabulary vocabulary;
  int num_labels = 0;
  std::vector<std::string> label_names;  // size num_labels, index = label - 1

  std::size_t size() const noexcept { return documents.size(); }
  std::size_t token_count() const noexcept;
};

// A corpus as read from disk, before vocabulary filtering.
struct RawDocument {
  std::string id;
  std::vector<std::string> tokens;
  int label = 1;  // already remapped to 1..S
};

struct RawCorpus {
  int num_labels = 0;
  std::vector<std::string> label_names;
  std::vector<RawDocument> documents;
};

struct VocabularyOptions {
  std::size_t min_df = 1;
  double max_df_fraction = 1.0;
};

// Parses the JSON-lines corpus format. The header may carry an optional
// "label_values" array listing the raw label value of each class in order;
// raw labels are remapped to 1..S by position in that list (default 1..S).
RawCorpus read_corpus(const std::filesystem::path& path);
RawCorpus parse_corpus(std::string_view text);

// Keeps words with min_df <= df <= max_df_fraction * D. Documents that lose
// every token are dropped and the filter is re-applied until nothing changes,
// so the result is a fixed point (re-filtering it is a no-op).
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            const VocabularyOptions& options);

// Maps raw tokens to ids, dropping out-of-vocabulary words. Documents left
// empty are dropped with a warning.
Corpus index_corpus(const RawCorpus& raw, const Vocabulary& vocabulary, Warnings* warnings = nullptr);

// read_corpus + build_vocabulary + index_corpus.
Corpus load_corpus(const std::filesystem::path& path, const VocabularyOptions& options = {},
                   Warnings* warnings = nullptr);
Corpus make_corpus(const RawCorpus& raw, const VocabularyOptions& options = {},
                   Warnings* warnings = nullptr);

// Dirichlet prior over sentiment labels for a document with the given label:
// (1 + eps_pert) * gamma at the label, eps_pert * gamma elsewhere.
std::vector<double> label_projection(int label, int num_labels, double gamma, double eps_pert);

// Stratified by label, deterministic in seed, document order preserved inside
// each part. Labels with fewer than two documents are pooled and split together.
std::pair<Corpus, Corpus> train_test_split(const Corpus& corpus, double train_fraction,
                                           std::uint64_t seed, Warnings* warnings = nullptr);

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary);
Vocabulary read_vocabulary(const std::filesystem::path& path);

// Back to the raw on-disk form (labels kept as 1..S).
RawCorpus to_raw(const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const RawCorpus& corpus);

// FNV-1a over ids, labels and token strings.
std::uint64_t corpus_hash(const Corpus& corpus);
std::string hex64(std::uint64_t value);

}  // namespace eljst
