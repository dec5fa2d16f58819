#pragma once

#include <stdexcept>
#include <string>

namespace rssiloc {

// Error categories map onto CLI exit codes: ConfigError -> 2, IoError -> 3,
// NumericError -> 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed content in a file we otherwise managed to open.
class ParseError : public IoError {
 public:
  explicit ParseError(const std::string& what) : IoError(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rssiloc
