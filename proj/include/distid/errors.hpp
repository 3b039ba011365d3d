#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace distid {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix sizes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-domain scalar parameter (c <= 0, gamma <= 0, empty trace, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Normal equations that cannot be solved reliably.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate or division by zero inside an update.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<std::size_t> step = std::nullopt)
      : Error(step ? what + " (step " + std::to_string(*step) + ")" : what),
        step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

// Missing or duplicated node message in a fusion round.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::size_t node)
      : Error(what + " (node " + std::to_string(node) + ")"), node_(node) {}

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& cause)
      : Error(path + ": " + cause), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace distid
