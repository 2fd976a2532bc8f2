#pragma once

#include <stdexcept>
#include <string>

namespace graphon {

struct ResolutionTooLarge : std::runtime_error {
  explicit ResolutionTooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct EdgeNotInGraph : std::runtime_error {
  explicit EdgeNotInGraph(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct StartOutsideBox : std::runtime_error {
  explicit StartOutsideBox(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfHorizon : std::runtime_error {
  explicit OutOfHorizon(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IOError : std::runtime_error {
  explicit IOError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graphon
