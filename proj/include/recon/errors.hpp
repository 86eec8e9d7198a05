#pragma once

#include <stdexcept>
#include <string>

namespace recon {

// Invalid parameters or malformed requests. CLI maps this to exit code 2.
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite iterates, failed fixed points, degenerate numerics. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable/unwritable paths. Exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or mis-shaped on-disk data; message names the file and byte offset
// where decoding failed. Exit code 4.
class FormatError : public IoError {
 public:
  FormatError(const std::string& file, std::size_t byte_offset, const std::string& what)
      : IoError(file + " @ byte " + std::to_string(byte_offset) + ": " + what) {}
};

}  // namespace recon
