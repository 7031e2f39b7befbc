#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eljst/corpus.hpp"
#include "eljst/sampler.hpp"
#include "json.hpp"

namespace eljst {

// Tensor file: one JSON header line {"dtype":"<f8","shape":[...]} followed by
// the row-major little-endian float64 payload.
void write_tensor(const std::filesystem::path& path, const std::vector<double>& values,
                  const std::vector<std::size_t>& shape);
std::vector<double> read_tensor(const std::filesystem::path& path, std::vector<std::size_t>* shape = nullptr);

nlohmann::json hyperparameters_to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const Posterior& posterior);

// Directory layout: phi.bin, theta.bin, pi.bin, manifest.json, vocab.txt.
void write_posterior(const std::filesystem::path& dir, const Posterior& posterior, const Vocabulary& vocabulary);

struct LoadedPosterior {
  Posterior posterior;
  Vocabulary vocabulary;
};

// Throws InputError("incomplete posterior: ...") when a file is missing.
LoadedPosterior read_posterior(const std::filesystem::path& dir);

// JSON-lines {"doc":id,"z":[...],"l":[...]}.
void write_assignments(const std::filesystem::path& path, const ModelState& state);

}  // namespace eljst
