#pragma once

#include <stdexcept>
#include <string>

namespace cimsim {

// Caller passed arguments that violate an operation's preconditions.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Geometry, precision or topology settings that the macro cannot realise.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A phase was entered out of order (e.g. accumulation while the DP array is connected).
struct SequencingError : std::logic_error {
  using std::logic_error::logic_error;
};

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityError : std::runtime_error {
  CapacityError(const std::string& what, std::size_t required_bits, std::size_t available_bits)
      : std::runtime_error(what), required(required_bits), available(available_bits) {}
  std::size_t required;
  std::size_t available;
};

struct UnmappableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cimsim
