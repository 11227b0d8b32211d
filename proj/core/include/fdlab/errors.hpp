#pragma once

#include <stdexcept>
#include <string>

namespace fdlab {

// Error taxonomy mirrors the CLI exit-code contract:
//   config_error -> 1, io_error -> 2, numeric_error -> 3.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Insufficient snapshot cadence for a requested space-time window.
// Subtype of io_error so the CLI reports it as a data problem (exit 2).
struct cadence_error : io_error {
  explicit cadence_error(const std::string& what) : io_error(what) {}
};

}  // namespace fdlab
