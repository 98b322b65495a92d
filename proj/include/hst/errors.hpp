#pragma once

#include <stdexcept>
#include <string>

namespace hst {

// Bad flag combinations, invalid parameters, impossible cluster configs.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or empty input data (CSV parse failures, non-finite values).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A simulated machine exceeded its memory budget. Carries the round and
// machine index so the driver can report "memory overflow at round R,
// machine M" and exit with the dedicated code.
struct MemoryOverflow : std::runtime_error {
  MemoryOverflow(const std::string& what, int round_, int machine_)
      : std::runtime_error(what), round(round_), machine(machine_) {}
  int round;
  int machine;
};

}  // namespace hst
