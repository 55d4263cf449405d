#pragma once

#include <stdexcept>
#include <string>

namespace trajfuse {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2 (bad flags, missing paths, inconsistent run configuration)
//   DataError   -> 3 (malformed or internally inconsistent datasets/artifacts)
//   anything else -> 4
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trajfuse
