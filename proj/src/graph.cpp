#include "eljst/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace eljst {

EmbeddingTable::EmbeddingTable(std::size_t vocab_size, std::size_t dim)
    : dim_(dim), data_(vocab_size * dim, 0.0), norms_(vocab_size, 0.0), present_(vocab_size, 0) {}

std::span<const double> EmbeddingTable::vector(WordId w) const {
  if (!has(w)) throw InputError("no embedding for word id " + std::to_string(w));
  return {data_.data() + static_cast<std::size_t>(w) * dim_, dim_};
}

std::size_t EmbeddingTable::covered() const noexcept {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), char{1}));
}

double EmbeddingTable::coverage() const noexcept {
  return present_.empty() ? 0.0 : static_cast<double>(covered()) / static_cast<double>(present_.size());
}

void EmbeddingTable::set(WordId w, std::span<const double> values) {
  if (values.size() != dim_) throw InputError("embedding dimension mismatch");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(w * dim_));
  double sq = 0.0;
  for (double x : values) sq += x * x;
  norms_.at(w) = std::sqrt(sq);
  present_.at(w) = 1;
}

EmbeddingTable parse_embeddings(std::istream& in, const Vocabulary& vocabulary, Warnings* warnings) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::optional<EmbeddingTable> table;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;

    values.clear();
    std::string tok;
    while (fields >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw InputError("embeddings line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      values.push_back(v);
    }

    // "count dim" header: two integers and nothing else on the first line.
    if (line_no == 1 && values.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos &&
        values[0] == std::floor(values[0]) && values[0] > 0) {
      dim = static_cast<std::size_t>(values[0]);
      continue;
    }

    if (values.empty()) throw InputError("embeddings line " + std::to_string(line_no) + ": no vector values");
    if (dim == 0) dim = values.size();
    if (values.size() != dim)
      throw InputError("embeddings line " + std::to_string(line_no) + ": dimension " +
                       std::to_string(values.size()) + " differs from " + std::to_string(dim));
    if (!table) table.emplace(vocabulary.size(), dim);

    for (double v : values)
      if (!std::isfinite(v))
        throw InputError("embeddings line " + std::to_string(line_no) + ": non-finite component");

    auto id = vocabulary.find(word);
    if (!id) continue;
    if (table->has(*id)) {
      warn(warnings, "duplicate embedding for '" + word + "'; keeping the first");
      continue;
    }
    if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
      warn(warnings, "zero vector for '" + word + "' treated as missing");
      continue;
    }
    table->set(*id, values);
  }
  if (!table) {
    if (dim == 0) throw InputError("embedding file has no vectors");
    table.emplace(vocabulary.size(), dim);
  }
  return *std::move(table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocabulary,
                               Warnings* warnings) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embeddings " + path.string());
  return parse_embeddings(in, vocabulary, warnings);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InputError("cosine_similarity: length mismatch");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw InputError("cosine_similarity: zero-norm vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

DocumentGraph::DocumentGraph(std::string doc_id, std::size_t num_positions)
    : doc_id_(std::move(doc_id)), neighbors_(num_positions) {}

DocumentGraph::DocumentGraph(std::string doc_id, std::size_t num_positions,
                             std::vector<std::pair<Position, Position>> edges)
    : doc_id_(std::move(doc_id)), neighbors_(num_positions) {
  for (auto& [a, b] : edges) {
    if (a == b) throw InputError("document " + doc_id_ + ": self-loop at position " + std::to_string(a));
    if (a >= num_positions || b >= num_positions)
      throw InputError("document " + doc_id_ + ": position out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (auto [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& n : neighbors_) std::sort(n.begin(), n.end());
}

bool DocumentGraph::has_edge(Position a, Position b) const {
  if (a > b) std::swap(a, b);
  return std::binary_search(edges_.begin(), edges_.end(), std::pair{a, b});
}

DocumentGraph build_similarity_graph(const Document& doc, const EmbeddingTable& table, double eps_sim) {
  if (!(eps_sim > 0.0 && eps_sim < 1.0)) throw InputError("similarity threshold must be in (0, 1)");
  const std::size_t n = doc.size();
  std::vector<std::pair<Position, Position>> edges;
  for (std::size_t a = 0; a < n; ++a) {
    const WordId wa = doc.tokens[a];
    if (!table.has(wa)) continue;
    for (std::size_t b = a + 1; b < n; ++b) {
      const WordId wb = doc.tokens[b];
      if (!table.has(wb)) continue;
      const double sim = wa == wb ? 1.0 : cosine_similarity(table.vector(wa), table.vector(wb));
      if (sim >= eps_sim) edges.emplace_back(static_cast<Position>(a), static_cast<Position>(b));
    }
  }
  return DocumentGraph(doc.id, n, std::move(edges));
}

namespace {

// Highest-weight column of a row, excluding the diagonal; lowest index wins ties.
std::size_t top_of_row(std::span<const double> row, std::size_t self) {
  std::size_t best = self == 0 ? 1 : 0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (c == self) continue;
    if (row[c] > row[best]) best = c;
  }
  return best;
}

}  // namespace

DocumentGraph build_attention_graph(const AttentionRecord& record, AttentionMode mode) {
  const std::size_t n = record.size;
  if (record.heads.empty()) throw InputError("attention record " + record.doc_id + ": no heads");
  for (const auto& h : record.heads)
    if (h.size() != n * n) throw InputError("attention record " + record.doc_id + ": matrix is not N x N");
  if (n < 2) return DocumentGraph(record.doc_id, n);

  std::vector<std::vector<double>> matrices;
  if (mode == AttentionMode::kAveragedHeads) {
    std::vector<double> avg(n * n, 0.0);
    for (const auto& h : record.heads)
      for (std::size_t i = 0; i < n * n; ++i) avg[i] += h[i];
    for (double& x : avg) x /= static_cast<double>(record.heads.size());
    matrices.push_back(std::move(avg));
  }
  const auto& heads = mode == AttentionMode::kAveragedHeads ? matrices : record.heads;

  // picks[i][j]: j is i's top under at least one head.
  std::vector<std::vector<char>> picks(n, std::vector<char>(n, 0));
  for (const auto& h : heads) {
    for (std::size_t i = 0; i < n; ++i) {
      std::span<const double> row(h.data() + i * n, n);
      picks[i][top_of_row(row, i)] = 1;
    }
  }
  std::vector<std::pair<Position, Position>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (picks[i][j] && picks[j][i]) edges.emplace_back(static_cast<Position>(i), static_cast<Position>(j));
  return DocumentGraph(record.doc_id, n, std::move(edges));
}

std::vector<AttentionRecord> parse_attention(std::istream& in) {
  using nlohmann::json;
  std::vector<AttentionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "attention line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("heads") || !obj["heads"].is_array())
      throw InputError(where + "expected {\"id\":...,\"heads\":[...]}");

    AttentionRecord rec;
    rec.doc_id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
    const auto& heads = obj["heads"];
    if (heads.empty()) throw InputError(where + "head count 0");
    rec.size = heads[0].size();
    for (const auto& head : heads) {
      if (!head.is_array() || head.size() != rec.size) throw InputError(where + "non-square matrix");
      std::vector<double> m;
      m.reserve(rec.size * rec.size);
      for (const auto& row : head) {
        if (!row.is_array() || row.size() != rec.size) throw InputError(where + "non-square matrix");
        double sum = 0.0;
        for (const auto& x : row) {
          if (!x.is_number()) throw InputError(where + "non-numeric attention weight");
          const double v = x.get<double>();
          if (!std::isfinite(v) || v < 0.0) throw InputError(where + "negative or non-finite attention weight");
          sum += v;
          m.push_back(v);
        }
        if (std::abs(sum - 1.0) > 1e-4) throw InputError(where + "attention row does not sum to 1");
      }
      rec.heads.push_back(std::move(m));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AttentionRecord> load_attention(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open attention file " + path.string());
  return parse_attention(in);
}

std::vector<DocumentGraph> empty_graphs(const Corpus& corpus) {
  std::vector<DocumentGraph> graphs;
  graphs.reserve(corpus.size());
  for (const auto& d : corpus.documents) graphs.emplace_back(d.id, d.size());
  return graphs;
}

std::vector<DocumentGraph> similarity_graphs(const Corpus& corpus, const EmbeddingTable& table, double eps_sim) {
  std::vector<DocumentGraph> graphs;
  graphs.reserve(corpus.size());
  for (const auto& d : corpus.documents) graphs.push_back(build_similarity_graph(d, table, eps_sim));
  return graphs;
}

namespace {

std::unordered_map<std::string, std::size_t> doc_index(const Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t d = 0; d < corpus.size(); ++d) index.emplace(corpus.documents[d].id, d);
  return index;
}

}  // namespace

std::vector<DocumentGraph> attention_graphs(const Corpus& corpus, const std::vector<AttentionRecord>& records,
                                            AttentionMode mode) {
  auto index = doc_index(corpus);
  auto graphs = empty_graphs(corpus);
  for (const auto& rec : records) {
    auto it = index.find(rec.doc_id);
    if (it == index.end()) continue;  // documents dropped by vocabulary filtering
    if (rec.size != corpus.documents[it->second].size())
      throw InputError("attention record " + rec.doc_id + ": size " + std::to_string(rec.size) +
                       " differs from document length " + std::to_string(corpus.documents[it->second].size()));
    graphs[it->second] = build_attention_graph(rec, mode);
  }
  return graphs;
}

std::vector<DocumentGraph> parse_edge_list(std::istream& in, const Corpus& corpus) {
  auto index = doc_index(corpus);
  std::vector<std::vector<std::pair<Position, Position>>> edges(corpus.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    long long a = -1, b = -1;
    std::string extra;
    if (!(fields >> a >> b) || (fields >> extra))
      throw InputError("edge list line " + std::to_string(line_no) + ": expected 'doc_id posA posB'");
    auto it = index.find(id);
    if (it == index.end()) throw InputError("edge list line " + std::to_string(line_no) + ": unknown doc_id " + id);
    const auto n = static_cast<long long>(corpus.documents[it->second].size());
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw InputError("edge list line " + std::to_string(line_no) + ": position out of range");
    if (a == b) throw InputError("edge list line " + std::to_string(line_no) + ": self-loop");
    edges[it->second].emplace_back(static_cast<Position>(a), static_cast<Position>(b));
  }
  std::vector<DocumentGraph> graphs;
  graphs.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d)
    graphs.emplace_back(corpus.documents[d].id, corpus.documents[d].size(), std::move(edges[d]));
  return graphs;
}

std::vector<DocumentGraph> load_edge_list(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list " + path.string());
  return parse_edge_list(in, corpus);
}

void write_edge_list(std::ostream& out, const std::vector<DocumentGraph>& graphs) {
  for (const auto& g : graphs)
    for (auto [a, b] : g.edges()) out << g.doc_id() << ' ' << a << ' ' << b << '\n';
}

void write_edge_list(const std::filesystem::path& path, const std::vector<DocumentGraph>& graphs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_edge_list(out, graphs);
}

GraphStats graph_stats(const std::vector<DocumentGraph>& graphs) {
  if (graphs.empty()) throw InputError("graph_stats: no graphs");
  GraphStats s;
  s.num_graphs = graphs.size();
  for (const auto& g : graphs) {
    s.total_edges += g.edge_count();
    s.max_edges = std::max(s.max_edges, g.edge_count());
    ++s.histogram[g.edge_count()];
  }
  s.mean_edges = static_cast<double>(s.total_edges) / static_cast<double>(s.num_graphs);
  s.mean_edges_rounded = std::llround(s.mean_edges);
  return s;
}

}  // namespace eljst
