#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eljst {

// Malformed or inconsistent inputs (files, flags, shapes). Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite weights, zero likelihoods and other arithmetic breakdowns. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics collected by loaders; callers decide where they go.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace eljst
