#include "eljst/posterior_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace eljst {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

void write_tensor(const std::filesystem::path& path, const std::vector<double>& values,
                  const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  if (n != values.size()) throw InputError("tensor shape does not match value count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << json{{"dtype", "<f8"}, {"shape", shape}}.dump() << '\n';
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<double> read_tensor(const std::filesystem::path& path, std::vector<std::size_t>* shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string header_line;
  std::getline(in, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::parse_error&) {
    throw InputError(path.string() + ": bad tensor header");
  }
  if (header.value("dtype", std::string{}) != "<f8") throw InputError(path.string() + ": unsupported dtype");
  auto dims = header.at("shape").get<std::vector<std::size_t>>();
  std::size_t n = 1;
  for (auto s : dims) n *= s;
  std::vector<double> values(n);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
    throw InputError(path.string() + ": truncated tensor payload");
  if (shape != nullptr) *shape = std::move(dims);
  return values;
}

json hyperparameters_to_json(const Hyperparameters& hp) {
  return {{"topics", hp.topics},
          {"labels", hp.labels},
          {"alpha", hp.alpha},
          {"beta", hp.beta},
          {"gamma", hp.gamma},
          {"eps_pert", hp.eps_pert},
          {"eta", hp.eta},
          {"iterations", hp.iterations},
          {"seed", hp.seed},
          {"estimate_mode", to_string(hp.estimate)},
          {"average_window", hp.average_window}};
}

Hyperparameters hyperparameters_from_json(const json& j) {
  Hyperparameters hp;
  try {
    hp.topics = j.at("topics").get<std::size_t>();
    hp.labels = j.at("labels").get<std::size_t>();
    hp.alpha = j.at("alpha").get<std::vector<double>>();
    hp.beta = j.at("beta").get<double>();
    hp.gamma = j.at("gamma").get<double>();
    hp.eps_pert = j.at("eps_pert").get<double>();
    hp.eta = j.at("eta").get<double>();
    hp.iterations = j.at("iterations").get<std::size_t>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.estimate = estimate_mode_from_string(j.at("estimate_mode").get<std::string>());
    hp.average_window = j.at("average_window").get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("bad hyperparameters in manifest: ") + e.what());
  }
  hp.validate();
  return hp;
}

json manifest_to_json(const Posterior& posterior) {
  const auto& m = posterior.manifest;
  return {{"format", "eljst-posterior/1"},
          {"hyperparameters", hyperparameters_to_json(m.hp)},
          {"iterations", m.hp.iterations},
          {"seed", m.hp.seed},
          {"estimate_mode", to_string(m.hp.estimate)},
          {"sweeps_averaged", m.sweeps_averaged},
          {"rng", m.rng},
          {"corpus_hash", hex64(m.corpus_hash)},
          {"graph_source", m.graph_source},
          {"shape", {{"docs", posterior.docs}, {"topics", posterior.topics}, {"labels", posterior.labels}, {"vocab", posterior.vocab}}},
          {"label_names", m.label_names},
          {"doc_ids", m.doc_ids},
          {"run", m.run}};
}

void write_posterior(const std::filesystem::path& dir, const Posterior& posterior, const Vocabulary& vocabulary) {
  if (vocabulary.size() != posterior.vocab) throw InputError("vocabulary size does not match posterior");
  std::filesystem::create_directories(dir);
  write_tensor(dir / "phi.bin", posterior.phi, {posterior.topics, posterior.labels, posterior.vocab});
  write_tensor(dir / "theta.bin", posterior.theta, {posterior.docs, posterior.topics});
  write_tensor(dir / "pi.bin", posterior.pi, {posterior.docs, posterior.topics, posterior.labels});
  write_vocabulary(dir / "vocab.txt", vocabulary);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw InputError("cannot write manifest in " + dir.string());
  out << manifest_to_json(posterior).dump(2) << '\n';
}

LoadedPosterior read_posterior(const std::filesystem::path& dir) {
  for (const char* name : {"manifest.json", "phi.bin", "theta.bin", "pi.bin", "vocab.txt"})
    if (!std::filesystem::exists(dir / name)) throw InputError("incomplete posterior: missing " + std::string(name));

  std::ifstream in(dir / "manifest.json");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("bad manifest.json: ") + e.what());
  }
  if (m.value("format", std::string{}) != "eljst-posterior/1") throw InputError("manifest.json: unknown format");

  LoadedPosterior out;
  auto& p = out.posterior;
  auto& man = p.manifest;
  man.hp = hyperparameters_from_json(m.at("hyperparameters"));
  man.sweeps_averaged = m.value("sweeps_averaged", std::size_t{0});
  man.rng = m.value("rng", std::string{});
  man.corpus_hash = std::stoull(m.at("corpus_hash").get<std::string>(), nullptr, 16);
  man.graph_source = m.value("graph_source", std::string{"none"});
  man.label_names = m.at("label_names").get<std::vector<std::string>>();
  man.doc_ids = m.at("doc_ids").get<std::vector<std::string>>();
  man.run = m.value("run", json::object());

  const auto& shape = m.at("shape");
  p.docs = shape.at("docs").get<std::size_t>();
  p.topics = shape.at("topics").get<std::size_t>();
  p.labels = shape.at("labels").get<std::size_t>();
  p.vocab = shape.at("vocab").get<std::size_t>();

  std::vector<std::size_t> dims;
  p.phi = read_tensor(dir / "phi.bin", &dims);
  if (dims != std::vector<std::size_t>{p.topics, p.labels, p.vocab}) throw InputError("phi.bin shape mismatch");
  p.theta = read_tensor(dir / "theta.bin", &dims);
  if (dims != std::vector<std::size_t>{p.docs, p.topics}) throw InputError("theta.bin shape mismatch");
  p.pi = read_tensor(dir / "pi.bin", &dims);
  if (dims != std::vector<std::size_t>{p.docs, p.topics, p.labels}) throw InputError("pi.bin shape mismatch");

  out.vocabulary = read_vocabulary(dir / "vocab.txt");
  if (out.vocabulary.size() != p.vocab) throw InputError("vocab.txt size does not match phi.bin");
  return out;
}

void write_assignments(const std::filesystem::path& path, const ModelState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t d = 0; d < state.num_docs(); ++d) {
    json rec = {{"doc", state.corpus().documents[d].id}, {"z", state.topics_of(d)}, {"l", state.labels_of(d)}};
    out << rec.dump() << '\n';
  }
}

}  // namespace eljst
