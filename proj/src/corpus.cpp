#include "eljst/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "eljst/rng.hpp"
#include "json.hpp"

namespace eljst {

using nlohmann::json;

Vocabulary::Vocabulary(std::vector<std::string> words) {
  for (auto& w : words) {
    if (index_.count(w) != 0) throw InputError("duplicate vocabulary word '" + w + "'");
    add(std::move(w));
  }
}

std::optional<WordId> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::add(std::string word) {
  auto [it, inserted] = index_.try_emplace(word, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(std::move(word));
  return it->second;
}

std::size_t Corpus::token_count() const noexcept {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

RawCorpus parse_corpus(std::string_view text) {
  RawCorpus corpus;
  std::map<long long, int> label_map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(at_line(line_no) + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw InputError(at_line(line_no) + "expected a JSON object");

    if (!have_header) {
      if (obj.value("format", std::string{}) != "eljst-corpus/1")
        throw InputError(at_line(line_no) + "missing header {\"format\":\"eljst-corpus/1\",...}");
      if (!obj.contains("num_labels") || !obj["num_labels"].is_number_integer())
        throw InputError(at_line(line_no) + "header needs integer num_labels");
      corpus.num_labels = obj["num_labels"].get<int>();
      if (corpus.num_labels < 1) throw InputError(at_line(line_no) + "num_labels must be >= 1");

      if (obj.contains("label_names")) {
        corpus.label_names = obj["label_names"].get<std::vector<std::string>>();
        if (corpus.label_names.size() != static_cast<std::size_t>(corpus.num_labels))
          throw InputError(at_line(line_no) + "label_names length differs from num_labels");
      } else {
        for (int k = 1; k <= corpus.num_labels; ++k) corpus.label_names.push_back(std::to_string(k));
      }

      std::vector<long long> values;
      if (obj.contains("label_values")) {
        values = obj["label_values"].get<std::vector<long long>>();
        if (values.size() != static_cast<std::size_t>(corpus.num_labels))
          throw InputError(at_line(line_no) + "label_values length differs from num_labels");
      } else {
        for (int k = 1; k <= corpus.num_labels; ++k) values.push_back(k);
      }
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (!label_map.emplace(values[k], static_cast<int>(k) + 1).second)
          throw InputError(at_line(line_no) + "duplicate entry in label_values");
      }
      have_header = true;
      continue;
    }

    RawDocument doc;
    if (!obj.contains("id")) throw InputError(at_line(line_no) + "missing id");
    doc.id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    if (!obj.contains("label") || !obj["label"].is_number_integer())
      throw InputError(at_line(line_no) + "missing label");
    const long long raw_label = obj["label"].get<long long>();
    auto it = label_map.find(raw_label);
    if (it == label_map.end())
      throw InputError(at_line(line_no) + "label out of range (" + std::to_string(raw_label) + ")");
    doc.label = it->second;
    if (!obj.contains("tokens") || !obj["tokens"].is_array())
      throw InputError(at_line(line_no) + "missing tokens");
    try {
      doc.tokens = obj["tokens"].get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw InputError(at_line(line_no) + "tokens must be strings");
    }
    if (doc.tokens.empty()) throw InputError(at_line(line_no) + "empty token list");
    corpus.documents.push_back(std::move(doc));
  }

  if (!have_header) throw InputError("empty corpus (no header)");
  if (corpus.documents.empty()) throw InputError("empty corpus");
  return corpus;
}

RawCorpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            const VocabularyOptions& options) {
  if (options.min_df < 1) throw InputError("min_df must be >= 1");
  if (!(options.max_df_fraction > 0.0 && options.max_df_fraction <= 1.0))
    throw InputError("max_df_fraction must be in (0, 1]");

  // Document frequency per distinct word, in order of first appearance.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> doc_words(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& w : docs[d]) {
      auto [it, inserted] = slot.try_emplace(w, order.size());
      if (inserted) order.push_back(w);
      doc_words[d].push_back(it->second);
    }
    std::sort(doc_words[d].begin(), doc_words[d].end());
    doc_words[d].erase(std::unique(doc_words[d].begin(), doc_words[d].end()), doc_words[d].end());
  }

  std::vector<char> keep(order.size(), 1);
  std::vector<char> live_doc(docs.size(), 1);
  for (;;) {
    std::vector<std::size_t> df(order.size(), 0);
    std::size_t num_docs = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (!live_doc[d]) continue;
      ++num_docs;
      for (auto w : doc_words[d])
        if (keep[w]) ++df[w];
    }
    const double max_df = options.max_df_fraction * static_cast<double>(num_docs);
    bool changed = false;
    for (std::size_t w = 0; w < order.size(); ++w) {
      if (keep[w] && (df[w] < options.min_df || static_cast<double>(df[w]) > max_df)) {
        keep[w] = 0;
        changed = true;
      }
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (!live_doc[d]) continue;
      bool any = std::any_of(doc_words[d].begin(), doc_words[d].end(), [&](auto w) { return keep[w] != 0; });
      if (!any) {
        live_doc[d] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  Vocabulary vocab;
  for (std::size_t w = 0; w < order.size(); ++w)
    if (keep[w]) vocab.add(order[w]);
  if (vocab.empty()) throw InputError("empty vocabulary");
  return vocab;
}

Corpus index_corpus(const RawCorpus& raw, const Vocabulary& vocabulary, Warnings* warnings) {
  Corpus corpus;
  corpus.vocabulary = vocabulary;
  corpus.num_labels = raw.num_labels;
  corpus.label_names = raw.label_names;
  std::size_t dropped = 0;
  for (const auto& rd : raw.documents) {
    if (rd.label < 1 || rd.label > raw.num_labels)
      throw InputError("document " + rd.id + ": label out of range");
    Document doc{rd.id, {}, rd.label};
    doc.tokens.reserve(rd.tokens.size());
    for (const auto& w : rd.tokens)
      if (auto id = vocabulary.find(w)) doc.tokens.push_back(*id);
    if (doc.tokens.empty()) {
      ++dropped;
      warn(warnings, "document " + rd.id + " has no in-vocabulary tokens; dropped");
      continue;
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (dropped > 0) warn(warnings, std::to_string(dropped) + " document(s) dropped after vocabulary filtering");
  return corpus;
}

Corpus make_corpus(const RawCorpus& raw, const VocabularyOptions& options, Warnings* warnings) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(raw.documents.size());
  for (const auto& d : raw.documents) docs.push_back(d.tokens);
  Corpus corpus = index_corpus(raw, build_vocabulary(docs, options), warnings);
  if (corpus.documents.empty()) throw InputError("empty corpus");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const VocabularyOptions& options,
                   Warnings* warnings) {
  return make_corpus(read_corpus(path), options, warnings);
}

std::vector<double> label_projection(int label, int num_labels, double gamma, double eps_pert) {
  if (num_labels < 1 || label < 1 || label > num_labels) throw InputError("label out of range");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (!(eps_pert > 0.0 && eps_pert < 1.0)) throw InputError("eps_pert must be in (0, 1)");
  std::vector<double> prior(static_cast<std::size_t>(num_labels), eps_pert * gamma);
  prior[static_cast<std::size_t>(label - 1)] = (1.0 + eps_pert) * gamma;
  return prior;
}

std::pair<Corpus, Corpus> train_test_split(const Corpus& corpus, double train_fraction,
                                           std::uint64_t seed, Warnings* warnings) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InputError("train_fraction must be in (0, 1)");

  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(corpus.num_labels));
  for (std::size_t d = 0; d < corpus.size(); ++d)
    groups[static_cast<std::size_t>(corpus.documents[d].label - 1)].push_back(d);

  std::vector<std::size_t> pooled;
  std::vector<std::vector<std::size_t>> strata;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    if (groups[k].size() < 2) {
      warn(warnings, "label " + corpus.label_names[k] + " has fewer than 2 documents; pooled with other small classes");
      pooled.insert(pooled.end(), groups[k].begin(), groups[k].end());
    } else {
      strata.push_back(groups[k]);
    }
  }
  if (!pooled.empty()) strata.push_back(pooled);

  Rng rng(seed);
  std::vector<char> in_train(corpus.size(), 0);
  for (auto& members : strata) {
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[rng.below(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    else n_train = members.size();
    for (std::size_t i = 0; i < n_train; ++i) in_train[members[i]] = 1;
  }

  Corpus train, test;
  for (Corpus* part : {&train, &test}) {
    part->vocabulary = corpus.vocabulary;
    part->num_labels = corpus.num_labels;
    part->label_names = corpus.label_names;
  }
  for (std::size_t d = 0; d < corpus.size(); ++d)
    (in_train[d] ? train : test).documents.push_back(corpus.documents[d]);
  return {std::move(train), std::move(test)};
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocabulary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& w : vocabulary.words()) out << w << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

RawCorpus to_raw(const Corpus& corpus) {
  RawCorpus raw;
  raw.num_labels = corpus.num_labels;
  raw.label_names = corpus.label_names;
  for (const auto& d : corpus.documents) {
    RawDocument rd{d.id, {}, d.label};
    for (auto w : d.tokens) rd.tokens.push_back(corpus.vocabulary.word(w));
    raw.documents.push_back(std::move(rd));
  }
  return raw;
}

void write_corpus(const std::filesystem::path& path, const RawCorpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  json header = {{"format", "eljst-corpus/1"},
                 {"num_labels", corpus.num_labels},
                 {"label_names", corpus.label_names}};
  out << header.dump() << '\n';
  for (const auto& d : corpus.documents) {
    json rec = {{"id", d.id}, {"tokens", d.tokens}, {"label", d.label}};
    out << rec.dump() << '\n';
  }
}

namespace {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  }
};

}  // namespace

std::uint64_t corpus_hash(const Corpus& corpus) {
  Fnv1a f;
  f.u64(static_cast<std::uint64_t>(corpus.num_labels));
  f.u64(corpus.vocabulary.size());
  for (const auto& d : corpus.documents) {
    f.bytes(d.id);
    f.u64(static_cast<std::uint64_t>(d.label));
    f.u64(d.tokens.size());
    for (auto w : d.tokens) {
      f.bytes(corpus.vocabulary.word(w));
      f.u64(0);
    }
  }
  return f.h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) s[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
  return s;
}

}  // namespace eljst
