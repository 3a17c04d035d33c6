#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cnode {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A forward operation produced a non-finite value, or a division by zero was requested.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::optional<long> iteration = std::nullopt)
      : Error(iteration ? what + " (iteration " + std::to_string(*iteration) + ")" : what),
        iteration_(iteration) {}

  std::optional<long> iteration() const { return iteration_; }

 private:
  std::optional<long> iteration_;
};

class GraphMismatchError : public Error {
 public:
  using Error::Error;
};

class StaleGradientError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ReportError : public Error {
 public:
  using Error::Error;
};

/// A required file (parameters, result, dataset) is absent.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// The ODE solution became non-finite. `time_index()` is the first offending grid index.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t time_index, std::optional<long> iteration = std::nullopt)
      : Error(message(time_index, iteration)), time_index_(time_index), iteration_(iteration) {}

  std::size_t time_index() const { return time_index_; }
  std::optional<long> iteration() const { return iteration_; }

 private:
  static std::string message(std::size_t index, std::optional<long> iteration) {
    std::string m = "ODE solution diverged at time index " + std::to_string(index);
    if (iteration) m += " (iteration " + std::to_string(*iteration) + ")";
    return m;
  }

  std::size_t time_index_;
  std::optional<long> iteration_;
};

}  // namespace cnode
