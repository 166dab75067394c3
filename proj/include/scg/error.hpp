#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scg {

struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Mismatched grids, lengths or tap counts.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct empty_sample_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct rank_error : std::runtime_error {
  rank_error(const std::string& what, std::size_t index)
      : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index(index) {}
  std::size_t index;
};

struct breakdown_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace scg
