#pragma once

#include <stdexcept>
#include <string>

namespace heatscope {

// Argument outside the mathematical domain of an operation (x outside the
// box, negative time step, coincident interpolation nodes, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Caller broke a structural precondition (misaligned vectors, wrong
// dimension, too few samples).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// A configured size or budget would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace heatscope
