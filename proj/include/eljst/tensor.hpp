#pragma once

#include <cstddef>
#include <span>

namespace eljst {

// Read-only views over the row-major posterior tensors.

// phi[j][k][w], shape T x S x V.
struct PhiView {
  std::span<const double> values;
  std::size_t topics = 0;
  std::size_t labels = 0;
  std::size_t vocab = 0;

  double operator()(std::size_t j, std::size_t k, std::size_t w) const { return values[(j * labels + k) * vocab + w]; }
  std::span<const double> block(std::size_t j, std::size_t k) const {
    return values.subspan((j * labels + k) * vocab, vocab);
  }
};

// theta[d][j], shape D x T.
struct ThetaView {
  std::span<const double> values;
  std::size_t docs = 0;
  std::size_t topics = 0;

  double operator()(std::size_t d, std::size_t j) const { return values[d * topics + j]; }
  std::span<const double> row(std::size_t d) const { return values.subspan(d * topics, topics); }
};

// pi[d][j][k], shape D x T x S.
struct PiView {
  std::span<const double> values;
  std::size_t docs = 0;
  std::size_t topics = 0;
  std::size_t labels = 0;

  double operator()(std::size_t d, std::size_t j, std::size_t k) const {
    return values[(d * topics + j) * labels + k];
  }
};

}  // namespace eljst
