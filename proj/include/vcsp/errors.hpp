#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcsp {

/// Malformed input file; `offset` is the byte position where parsing failed.
struct FormatError : std::runtime_error {
  std::size_t offset;
  FormatError(const std::string& what_arg, std::size_t off)
      : std::runtime_error(what_arg + " (byte offset " + std::to_string(off) + ")"),
        offset(off) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vcsp
