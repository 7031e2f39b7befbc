#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eljst/corpus.hpp"
#include "eljst/error.hpp"

namespace eljst {

using Position = std::uint32_t;

// Word vectors indexed by vocabulary id. Words without a vector are coverage gaps.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocab_size, std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t vocab_size() const noexcept { return present_.size(); }
  bool has(WordId w) const { return w < present_.size() && present_[w] != 0; }
  std::span<const double> vector(WordId w) const;
  double norm(WordId w) const { return norms_.at(w); }
  std::size_t covered() const noexcept;
  double coverage() const noexcept;

  // Zero or non-finite vectors are rejected by the caller before reaching here.
  void set(WordId w, std::span<const double> values);

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<double> norms_;
  std::vector<char> present_;
};

// Text format: optional "count dim" first line, then "word v1 ... vdim".
// Words outside the vocabulary are ignored.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                               Warnings* warnings = nullptr);
EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocabulary,
                                Warnings* warnings = nullptr);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Undirected graph over the token positions of one document.
class DocumentGraph {
 public:
  DocumentGraph() = default;
  // Empty graph over num_positions nodes.
  DocumentGraph(std::string doc_id, std::size_t num_positions);
  // Validates positions, rejects self-loops, drops duplicate pairs.
  DocumentGraph(std::string doc_id, std::size_t num_positions,
                std::vector<std::pair<Position, Position>> edges);

  const std::string& doc_id() const noexcept { return doc_id_; }
  std::size_t num_positions() const noexcept { return neighbors_.size(); }
  // Sorted, each pair stored as (a, b) with a < b.
  const std::vector<std::pair<Position, Position>>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Position>& neighbors(Position t) const { return neighbors_.at(t); }
  bool has_edge(Position a, Position b) const;

  bool operator==(const DocumentGraph& other) const {
    return doc_id_ == other.doc_id_ && neighbors_.size() == other.neighbors_.size() && edges_ == other.edges_;
  }

 private:
  std::string doc_id_;
  std::vector<std::pair<Position, Position>> edges_;
  std::vector<std::vector<Position>> neighbors_;
};

// Edge (a, b) iff both tokens have vectors and cosine >= eps_sim.
DocumentGraph build_similarity_graph(const Document& doc, const EmbeddingTable& table, double eps_sim);

// Row-stochastic N x N attention matrices, one per head.
struct AttentionRecord {
  std::string doc_id;
  std::size_t size = 0;
  std::vector<std::vector<double>> heads;  // each head row-major size*size

  double weight(std::size_t head, std::size_t row, std::size_t col) const {
    return heads[head][row * size + col];
  }
};

enum class AttentionMode {
  kMutualTopAnyHead,  // i-j iff j is i's top under some head and i is j's top under some head
  kAveragedHeads,     // mutual top on the head-averaged matrix
};

DocumentGraph build_attention_graph(const AttentionRecord& record,
                                    AttentionMode mode = AttentionMode::kMutualTopAnyHead);

// JSON-lines {"id":..., "heads":[[[...]]]}; rows checked for stochasticity (1e-4).
std::vector<AttentionRecord> load_attention(const std::filesystem::path& path);
std::vector<AttentionRecord> parse_attention(std::istream& in);

// Builds one graph per corpus document; documents without a record get an
// empty graph. Record sizes must match the filtered document lengths.
std::vector<DocumentGraph> attention_graphs(const Corpus& corpus, const std::vector<AttentionRecord>& records,
                                            AttentionMode mode = AttentionMode::kMutualTopAnyHead);
std::vector<DocumentGraph> similarity_graphs(const Corpus& corpus, const EmbeddingTable& table, double eps_sim);
std::vector<DocumentGraph> empty_graphs(const Corpus& corpus);

// "doc_id posA posB" per line; result aligned with corpus.documents.
std::vector<DocumentGraph> load_edge_list(const std::filesystem::path& path, const Corpus& corpus);
std::vector<DocumentGraph> parse_edge_list(std::istream& in, const Corpus& corpus);
void write_edge_list(const std::filesystem::path& path, const std::vector<DocumentGraph>& graphs);
void write_edge_list(std::ostream& out, const std::vector<DocumentGraph>& graphs);

struct GraphStats {
  double mean_edges = 0.0;
  long long mean_edges_rounded = 0;
  std::size_t max_edges = 0;
  std::size_t total_edges = 0;
  std::size_t num_graphs = 0;
  std::map<std::size_t, std::size_t> histogram;  // edge count -> number of documents
};

GraphStats graph_stats(const std::vector<DocumentGraph>& graphs);

}  // namespace eljst
